// Copyright 2026 The prosody-ddpm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prosody/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace prosody {
namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T v{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || text.empty())
        throw Error(fmt::format("config key {}: cannot parse '{}' as a number", key, text));
    return v;
}

// Shortest text that parses back to the same double.
std::string show(double v) { return fmt::format("{}", v); }
std::string show(std::size_t v) { return std::to_string(v); }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1));
}

// Which trained model a key is baked into.
enum class Scope { none, ddpm, baseline, both };

struct Entry {
    std::string key;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, std::string_view)> set;
    Scope scope = Scope::none;
};

template <typename Get>
Entry count(std::string key, Get field, Scope scope = Scope::none) {
    return {key, [field](const Config& c) { return show(static_cast<std::size_t>(field(c))); },
            [key, field](Config& c, std::string_view v) { field(c) = parse_number<std::uint64_t>(key, v); }, scope};
}

template <typename Get>
Entry real(std::string key, Get field, Scope scope = Scope::none) {
    return {key, [field](const Config& c) { return show(field(c)); },
            [key, field](Config& c, std::string_view v) { field(c) = parse_number<double>(key, v); }, scope};
}

template <typename Get>
Entry text(std::string key, Get field) {
    return {key, [field](const Config& c) { return field(c); },
            [field](Config& c, std::string_view v) { field(c) = std::string(v); }, Scope::none};
}

const std::vector<Entry>& table() {
    static const std::vector<Entry> entries = [] {
        std::vector<Entry> e;
        e.push_back(count("schedule.steps", [](auto& c) -> auto& { return c.schedule.steps; }, Scope::ddpm));
        e.push_back(real("schedule.beta_start", [](auto& c) -> auto& { return c.schedule.beta_start; }, Scope::ddpm));
        e.push_back(real("schedule.beta_end", [](auto& c) -> auto& { return c.schedule.beta_end; }, Scope::ddpm));

        e.push_back(count("denoiser.channels", [](auto& c) -> auto& { return c.denoiser.channels; }, Scope::ddpm));
        e.push_back(count("denoiser.layers", [](auto& c) -> auto& { return c.denoiser.layers; }, Scope::ddpm));
        e.push_back({"denoiser.dilation_cycle",
                     [](const Config& c) {
                         std::string s;
                         for (auto d : c.denoiser.dilation_cycle) s += (s.empty() ? "" : " ") + std::to_string(d);
                         return s;
                     },
                     [](Config& c, std::string_view v) {
                         std::vector<std::size_t> out;
                         std::istringstream in{std::string(v)};
                         std::string tok;
                         while (in >> tok) out.push_back(parse_number<std::uint64_t>("denoiser.dilation_cycle", tok));
                         c.denoiser.dilation_cycle = std::move(out);
                     },
                     Scope::ddpm});
        e.push_back(count("denoiser.kernel", [](auto& c) -> auto& { return c.denoiser.kernel; }, Scope::ddpm));
        e.push_back(count("denoiser.step_embed_dim", [](auto& c) -> auto& { return c.denoiser.step_embed_dim; }, Scope::ddpm));
        e.push_back(count("denoiser.step_hidden", [](auto& c) -> auto& { return c.denoiser.step_hidden; }, Scope::ddpm));
        e.push_back(count("denoiser.cond_dim", [](auto& c) -> auto& { return c.denoiser.encoder.dim; }, Scope::ddpm));
        e.push_back(count("denoiser.cond_kernel", [](auto& c) -> auto& { return c.denoiser.encoder.kernel; }, Scope::ddpm));

        e.push_back(count("baseline.width", [](auto& c) -> auto& { return c.baseline.width; }, Scope::baseline));
        e.push_back(count("baseline.kernel", [](auto& c) -> auto& { return c.baseline.kernel; }, Scope::baseline));
        e.push_back(real("baseline.dropout", [](auto& c) -> auto& { return c.baseline.dropout; }, Scope::baseline));
        e.push_back(count("baseline.cond_dim", [](auto& c) -> auto& { return c.baseline.encoder.dim; }, Scope::baseline));
        e.push_back(count("baseline.cond_kernel", [](auto& c) -> auto& { return c.baseline.encoder.kernel; }, Scope::baseline));

        // One vocabulary feeds both condition encoders.
        e.push_back({"data.vocab", [](const Config& c) { return show(c.denoiser.encoder.vocab); },
                     [](Config& c, std::string_view v) {
                         c.denoiser.encoder.vocab = c.baseline.encoder.vocab = parse_number<std::uint64_t>("data.vocab", v);
                     },
                     Scope::both});
        e.push_back(text("data.corpus", [](auto& c) -> auto& { return c.data.corpus; }));
        e.push_back(text("data.spec", [](auto& c) -> auto& { return c.data.spec; }));
        e.push_back(count("data.n_utterances", [](auto& c) -> auto& { return c.data.n_utterances; }));
        e.push_back(count("data.min_length", [](auto& c) -> auto& { return c.data.min_length; }));
        e.push_back(count("data.max_length", [](auto& c) -> auto& { return c.data.max_length; }));
        e.push_back(count("data.seed", [](auto& c) -> auto& { return c.data.seed; }));
        e.push_back(count("data.split_seed", [](auto& c) -> auto& { return c.data.split_seed; }));
        e.push_back(real("data.test_fraction", [](auto& c) -> auto& { return c.data.test_fraction; }));

        e.push_back(count("train.steps", [](auto& c) -> auto& { return c.train.steps; }));
        e.push_back(count("train.seed", [](auto& c) -> auto& { return c.train.seed; }));
        e.push_back(count("train.batch_size", [](auto& c) -> auto& { return c.train.batch_size; }));
        e.push_back(count("train.checkpoint_every", [](auto& c) -> auto& { return c.train.checkpoint_every; }));
        e.push_back(real("train.learning_rate", [](auto& c) -> auto& { return c.train.adam.learning_rate; }));
        e.push_back(real("train.adam_beta1", [](auto& c) -> auto& { return c.train.adam.beta1; }));
        e.push_back(real("train.adam_beta2", [](auto& c) -> auto& { return c.train.adam.beta2; }));
        e.push_back(real("train.adam_epsilon", [](auto& c) -> auto& { return c.train.adam.epsilon; }));
        e.push_back(real("train.ema_decay", [](auto& c) -> auto& { return c.train.ema_decay; }));

        e.push_back(count("eval.bins", [](auto& c) -> auto& { return c.eval.bins; }));
        e.push_back(count("eval.n_samples", [](auto& c) -> auto& { return c.eval.n_samples; }));
        e.push_back(count("eval.seed", [](auto& c) -> auto& { return c.eval.seed; }));
        e.push_back(real("eval.mode_radius", [](auto& c) -> auto& { return c.eval.mode_radius; }));
        e.push_back(real("eval.frame_period", [](auto& c) -> auto& { return c.eval.frame_period; }));
        e.push_back(count("eval.rtf_utterances", [](auto& c) -> auto& { return c.eval.rtf_utterances; }));
        return e;
    }();
    return entries;
}

const Entry& find_entry(std::string_view key) {
    for (const auto& e : table())
        if (e.key == key) return e;
    throw Error(fmt::format("unknown config key '{}'", key));
}

} // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::ddpm ? "ddpm" : "baseline"; }

ModelKind parse_model_kind(std::string_view name) {
    if (name == "ddpm") return ModelKind::ddpm;
    if (name == "baseline") return ModelKind::baseline;
    throw Error(fmt::format("unknown model kind '{}' (expected ddpm or baseline)", name));
}

void Config::validate() const {
    if (schedule.steps < 2) throw Error("schedule.steps must be >= 2");
    (void)schedule.make();
    denoiser.validate();
    baseline.validate();
    if (data.min_length < 1 || data.min_length > data.max_length)
        throw Error("data.min_length must be >= 1 and <= data.max_length");
    if (data.n_utterances < 2) throw Error("data.n_utterances must be >= 2");
    if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) throw Error("data.test_fraction must be in (0, 1)");
    if (train.batch_size == 0) throw Error("train.batch_size must be >= 1");
    if (!(train.adam.learning_rate > 0.0)) throw Error("train.learning_rate must be positive");
    if (!(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0 && train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0))
        throw Error("train.adam_beta1 and train.adam_beta2 must be in [0, 1)");
    if (!(train.adam.epsilon > 0.0)) throw Error("train.adam_epsilon must be positive");
    if (!(train.ema_decay >= 0.0 && train.ema_decay < 1.0)) throw Error("train.ema_decay must be in [0, 1)");
    if (eval.bins < 2) throw Error("eval.bins must be >= 2");
    if (eval.n_samples == 0) throw Error("eval.n_samples must be >= 1");
    if (!(eval.mode_radius > 0.0)) throw Error("eval.mode_radius must be positive");
    if (!(eval.frame_period > 0.0)) throw Error("eval.frame_period must be positive");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& e : table()) k.push_back(e.key);
        return k;
    }();
    return keys;
}

Config parse_config(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(fmt::format("config line {}: {}", e.line(), e.message()));
    }
    Config config;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw Error(fmt::format("config key '{}' is outside any [section]", section));
        for (const auto& [key, value] : body) apply_override(config, section + "." + key, value.data());
    }
    return config;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void apply_override(Config& config, std::string_view key, std::string_view value) {
    find_entry(key).set(config, trim(value));
}

std::string config_value(const Config& config, std::string_view key) { return find_entry(key).get(config); }

std::string to_text(const Config& config) {
    std::string out, section;
    for (const auto& e : table()) {
        const std::string s = e.key.substr(0, e.key.find('.'));
        if (s != section) {
            out += (section.empty() ? "[" : "\n[") + s + "]\n";
            section = s;
        }
        out += e.key.substr(s.size() + 1) + " = " + e.get(config) + "\n";
    }
    return out;
}

std::string config_hash(const Config& config) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : to_text(config)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return fmt::format("{:016x}", h);
}

std::vector<std::string> model_conflicts(const Config& a, const Config& b, ModelKind kind) {
    const Scope own = kind == ModelKind::ddpm ? Scope::ddpm : Scope::baseline;
    std::vector<std::string> out;
    for (const auto& e : table())
        if ((e.scope == own || e.scope == Scope::both) && e.get(a) != e.get(b)) out.push_back(e.key);
    return out;
}

} // namespace prosody
