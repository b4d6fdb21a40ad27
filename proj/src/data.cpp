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

#include "prosody/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace prosody {

namespace {

constexpr double kMinPitch = 1e-3;

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("cannot format value");
    return std::string(buf, ptr);
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> words(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

} // namespace

std::vector<const Utterance*> Corpus::select(Split split) const {
    std::vector<const Utterance*> out;
    for (const auto& u : utterances)
        if (u.split == split) out.push_back(&u);
    return out;
}

void validate(const Utterance& utt, std::size_t vocab) {
    const auto fail = [&](const std::string& what) { throw Error("utterance '" + utt.id + "': " + what); };
    if (utt.id.empty() || utt.id.find_first_of("\t\n") != std::string::npos) fail("invalid id");
    const std::size_t n = utt.tokens.size();
    if (n == 0) fail("no tokens");
    const auto& p = utt.prosody;
    if (p.pitch.size() != n || p.energy.size() != n || p.duration.size() != n)
        fail("feature lists must match the token count " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (vocab && utt.tokens[i] >= vocab) fail("token id " + std::to_string(utt.tokens[i]) + " outside vocabulary");
        if (!(p.pitch[i] > 0.0) || !std::isfinite(p.pitch[i])) fail("pitch must be > 0 at token " + std::to_string(i));
        if (!(p.energy[i] >= 0.0) || !std::isfinite(p.energy[i]))
            fail("energy must be >= 0 at token " + std::to_string(i));
        if (p.duration[i] < 1) fail("duration must be >= 1 frame at token " + std::to_string(i));
    }
}

// --- feature transforms ---------------------------------------------------

Array to_features(const ProsodySequence& seq) {
    const std::size_t n = seq.size();
    Array f({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        f(i, 0) = seq.pitch[i];
        f(i, 1) = seq.energy[i];
        f(i, 2) = std::log(static_cast<double>(seq.duration[i]));
    }
    return f;
}

ProsodySequence from_features(const Array& features) {
    if (features.rank() != 2 || features.cols() != 3)
        throw Error("from_features: expected [len, 3], got " + shape_string(features.shape()));
    ProsodySequence seq;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        seq.pitch.push_back(std::max(features(i, 0), kMinPitch));
        seq.energy.push_back(std::max(features(i, 1), 0.0));
        const double frames = std::floor(std::exp(features(i, 2)) + 0.5);
        seq.duration.push_back(std::max(1L, static_cast<long>(std::min(frames, 1e9))));
    }
    return seq;
}

NormStats compute_stats(const Corpus& corpus) {
    std::array<double, 3> sum{}, sumsq{};
    double n = 0.0;
    for (const Utterance* u : corpus.select(Split::train)) {
        const Array f = to_features(u->prosody);
        for (std::size_t r = 0; r < f.rows(); ++r)
            for (std::size_t c = 0; c < 3; ++c) sum[c] += f(r, c);
        n += static_cast<double>(f.rows());
    }
    if (n < 2) throw Error("normalization needs at least two train tokens");
    NormStats s;
    for (std::size_t c = 0; c < 3; ++c) s.mean[c] = sum[c] / n;
    for (const Utterance* u : corpus.select(Split::train)) {
        const Array f = to_features(u->prosody);
        for (std::size_t r = 0; r < f.rows(); ++r)
            for (std::size_t c = 0; c < 3; ++c) sumsq[c] += (f(r, c) - s.mean[c]) * (f(r, c) - s.mean[c]);
    }
    static constexpr const char* kNames[] = {"pitch", "energy", "log-duration"};
    for (std::size_t c = 0; c < 3; ++c) {
        s.std[c] = std::sqrt(sumsq[c] / n);
        if (!(s.std[c] > 1e-12)) throw Error(std::string("zero variance in ") + kNames[c] + " over the train split");
    }
    return s;
}

Array normalize(const Array& features, const NormStats& stats) {
    Array out(features.shape());
    for (std::size_t r = 0; r < features.rows(); ++r)
        for (std::size_t c = 0; c < 3; ++c) out(r, c) = (features(r, c) - stats.mean[c]) / stats.std[c];
    return out;
}

Array denormalize(const Array& model_space, const NormStats& stats) {
    Array out(model_space.shape());
    for (std::size_t r = 0; r < model_space.rows(); ++r)
        for (std::size_t c = 0; c < 3; ++c) out(r, c) = model_space(r, c) * stats.std[c] + stats.mean[c];
    return out;
}

void assign_split(Corpus& corpus, std::uint64_t seed, double test_fraction) {
    const std::size_t n = corpus.utterances.size();
    if (n < 2) throw Error("splitting needs at least two utterances");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test fraction must be in (0, 1)");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng.engine());
    const auto n_test =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n))), 1,
                                n - 1);
    for (std::size_t i = 0; i < n; ++i) corpus.utterances[order[i]].split = i < n_test ? Split::test : Split::train;
}

// --- corpus file ----------------------------------------------------------

std::string format_utterance(const Utterance& utt) {
    std::string line = utt.id;
    auto append_list = [&](const auto& values, auto fmt) {
        line += '\t';
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line += ' ';
            line += fmt(values[i]);
        }
    };
    append_list(utt.tokens, [](std::size_t v) { return std::to_string(v); });
    append_list(utt.prosody.pitch, format_double);
    append_list(utt.prosody.energy, format_double);
    append_list(utt.prosody.duration, [](long v) { return std::to_string(v); });
    return line;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write corpus file " + path.string());
    for (const auto& u : corpus.utterances) {
        validate(u);
        out << format_utterance(u) << '\n';
    }
    if (!out) throw Error("failed writing corpus file " + path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus file " + path.string());
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto bad = [&](const std::string& what) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + what);
        };
        const auto fields = split_on(line, '\t');
        if (fields.size() != 5) bad("expected 5 tab-separated fields, found " + std::to_string(fields.size()));
        Utterance u;
        u.id = std::string(fields[0]);
        for (auto w : words(fields[1])) {
            std::size_t v;
            if (!parse_number(w, v)) bad("bad token id '" + std::string(w) + "'");
            u.tokens.push_back(v);
        }
        for (auto w : words(fields[2])) {
            double v;
            if (!parse_number(w, v)) bad("bad pitch value '" + std::string(w) + "'");
            u.prosody.pitch.push_back(v);
        }
        for (auto w : words(fields[3])) {
            double v;
            if (!parse_number(w, v)) bad("bad energy value '" + std::string(w) + "'");
            u.prosody.energy.push_back(v);
        }
        for (auto w : words(fields[4])) {
            long v;
            if (!parse_number(w, v)) bad("bad duration '" + std::string(w) + "' (integer frames expected)");
            u.prosody.duration.push_back(v);
        }
        try {
            validate(u);
        } catch (const Error& e) {
            bad(e.what());
        }
        corpus.utterances.push_back(std::move(u));
    }
    if (corpus.utterances.empty()) throw Error(path.string() + ": no utterances");
    return corpus;
}

// --- synthetic data -------------------------------------------------------

namespace {

// Lower Cholesky factor; throws unless positive definite.
std::array<std::array<double, 3>, 3> cholesky(const std::array<std::array<double, 3>, 3>& a) {
    std::array<std::array<double, 3>, 3> l{};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 0.0)) throw Error("covariance is not positive definite");
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return l;
}

} // namespace

void SyntheticSpec::validate() const {
    if (classes.empty()) throw Error("synthetic spec has no token classes");
    for (std::size_t k = 0; k < classes.size(); ++k) {
        const auto& cls = classes[k];
        const std::string where = "token class " + std::to_string(k) + ": ";
        if (cls.components.empty()) throw Error(where + "no mixture components");
        double total = 0.0;
        for (const auto& comp : cls.components) {
            if (!(comp.weight > 0.0)) throw Error(where + "mixture weights must be positive");
            total += comp.weight;
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j)
                    if (comp.cov[i][j] != comp.cov[j][i]) throw Error(where + "covariance is not symmetric");
            try {
                cholesky(comp.cov);
            } catch (const Error& e) {
                throw Error(where + e.what());
            }
        }
        if (std::abs(total - 1.0) > 1e-9) throw Error(where + "mixture weights sum to " + format_double(total));
    }
}

SyntheticSpec desk_bench_spec() {
    constexpr std::size_t kClasses = 20;
    constexpr double kPitchSigma = 6.0;
    constexpr double kEnergySigma = 0.01;
    constexpr double kLogDurSigma = 0.25;
    SyntheticSpec spec;
    for (std::size_t k = 0; k < kClasses; ++k) {
        const double u_energy = static_cast<double>((7 * k) % kClasses) / (kClasses - 1);
        const double u_shift = static_cast<double>((13 * k) % kClasses) / (kClasses - 1);
        const double u_dur = static_cast<double>((11 * k) % kClasses) / (kClasses - 1);
        const double pitch = 120.0 + 7.5 * static_cast<double>(k);
        const double energy = 0.4 + 0.8 * u_energy;
        const double log_dur = std::log(3.0) + (std::log(12.0) - std::log(3.0)) * u_dur;

        GaussianComponent base;
        base.cov = {{{kPitchSigma * kPitchSigma, 0, 0},
                     {0, kEnergySigma * kEnergySigma, 0},
                     {0, 0, kLogDurSigma * kLogDurSigma}}};
        base.mean = {pitch, energy, log_dur};

        TokenClassSpec cls;
        cls.neighbour_shift = {0.0, 0.1 * (u_shift - 0.5), 0.0};
        if (k % 2 == 0) {
            GaussianComponent lo = base, hi = base;
            lo.weight = hi.weight = 0.5;
            lo.mean[0] = pitch - 3.0 * kPitchSigma;
            hi.mean[0] = pitch + 3.0 * kPitchSigma;
            cls.components = {lo, hi};
        } else {
            cls.components = {base};
        }
        spec.classes.push_back(std::move(cls));
    }
    return spec;
}

std::vector<PitchModes> pitch_modes(const SyntheticSpec& spec) {
    std::vector<PitchModes> out;
    for (std::size_t k = 0; k < spec.classes.size(); ++k) {
        const auto& comps = spec.classes[k].components;
        if (comps.size() < 2) continue;
        PitchModes m;
        m.token_class = k;
        for (const auto& c : comps) {
            m.centers.push_back(c.mean[0]);
            m.spread = std::max(m.spread, std::sqrt(c.cov[0][0]));
        }
        out.push_back(std::move(m));
    }
    return out;
}

Corpus generate_corpus(const SyntheticSpec& spec, std::size_t n_utterances, LengthRange lengths, Rng& rng) {
    spec.validate();
    if (n_utterances == 0) throw Error("n_utterances must be >= 1");
    if (lengths.min < 1 || lengths.min > lengths.max) throw Error("invalid length range");
    std::vector<std::vector<std::array<std::array<double, 3>, 3>>> factors;
    for (const auto& cls : spec.classes) {
        factors.emplace_back();
        for (const auto& comp : cls.components) factors.back().push_back(cholesky(comp.cov));
    }

    Corpus corpus;
    const long vocab = static_cast<long>(spec.vocab());
    for (std::size_t u = 0; u < n_utterances; ++u) {
        Utterance utt;
        char id[32];
        std::snprintf(id, sizeof(id), "utt%06zu", u);
        utt.id = id;
        const auto len = static_cast<std::size_t>(
            rng.uniform_int(static_cast<long>(lengths.min), static_cast<long>(lengths.max)));
        for (std::size_t i = 0; i < len; ++i) utt.tokens.push_back(static_cast<std::size_t>(rng.uniform_int(0, vocab - 1)));

        Array features({len, 3});
        for (std::size_t i = 0; i < len; ++i) {
            const auto& cls = spec.classes[utt.tokens[i]];
            double pick = rng.uniform();
            std::size_t c = 0;
            while (c + 1 < cls.components.size() && pick >= cls.components[c].weight) pick -= cls.components[c++].weight;
            const auto& comp = cls.components[c];
            const auto& l = factors[utt.tokens[i]][c];
            const double z[3] = {rng.normal(), rng.normal(), rng.normal()};
            for (std::size_t d = 0; d < 3; ++d) {
                double v = comp.mean[d];
                for (std::size_t k = 0; k <= d; ++k) v += l[d][k] * z[k];
                if (i > 0) v += spec.classes[utt.tokens[i - 1]].neighbour_shift[d];
                if (i + 1 < len) v += spec.classes[utt.tokens[i + 1]].neighbour_shift[d];
                features(i, d) = v;
            }
        }
        utt.prosody = from_features(features);
        corpus.utterances.push_back(std::move(utt));
    }
    return corpus;
}

std::string spec_to_json(const SyntheticSpec& spec) {
    nlohmann::json j;
    j["format"] = "prosody-synthetic-spec";
    j["version"] = 1;
    j["classes"] = nlohmann::json::array();
    for (const auto& cls : spec.classes) {
        nlohmann::json jc;
        jc["neighbour_shift"] = cls.neighbour_shift;
        jc["components"] = nlohmann::json::array();
        for (const auto& comp : cls.components)
            jc["components"].push_back({{"weight", comp.weight}, {"mean", comp.mean}, {"cov", comp.cov}});
        j["classes"].push_back(std::move(jc));
    }
    return j.dump(2) + "\n";
}

SyntheticSpec spec_from_json(const std::string& text) {
    SyntheticSpec spec;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format") != "prosody-synthetic-spec") throw Error("not a synthetic spec document");
        for (const auto& jc : j.at("classes")) {
            TokenClassSpec cls;
            cls.neighbour_shift = jc.at("neighbour_shift").get<std::array<double, 3>>();
            for (const auto& comp : jc.at("components")) {
                GaussianComponent g;
                g.weight = comp.at("weight").get<double>();
                g.mean = comp.at("mean").get<std::array<double, 3>>();
                g.cov = comp.at("cov").get<std::array<std::array<double, 3>, 3>>();
                cls.components.push_back(g);
            }
            spec.classes.push_back(std::move(cls));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed synthetic spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

} // namespace prosody
