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

// prosody: command-line front end.
//
//   prosody gen-data [--out corpus.tsv]
//   prosody train --model ddpm|baseline [--resume ckpt.bin]
//   prosody sample --checkpoint ckpt.bin --tokens "1 2 3" [--n 1] [--seed 0]
//   prosody eval --ddpm a.bin --baseline b.bin
//   prosody rtf --checkpoint ckpt.bin
//
// Every verb takes --config file.ini, --out-dir root and any number of
// --section.key value overrides. Outputs go to <out-dir>/<hash>-<timestamp>/.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "prosody/commands.hpp"

namespace {

using namespace prosody;
namespace fs = std::filesystem;

/// Turns leftover arguments into (key, value) pairs. Accepts `--a.b value`
/// and `--a.b=value`.
Overrides parse_overrides(const std::vector<std::string>& extras) {
    Overrides out;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (!arg.starts_with("--") || arg.find('.') == std::string::npos)
            throw Error(fmt::format("unexpected argument '{}'", arg));
        const std::string body = arg.substr(2);
        if (const auto eq = body.find('='); eq != std::string::npos) {
            out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
        } else {
            if (i + 1 >= extras.size()) throw Error(fmt::format("override {} has no value", arg));
            out.emplace_back(body, extras[++i]);
        }
    }
    return out;
}

void write_file(const fs::path& path, const auto& writer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    writer(out);
    if (!out.flush()) throw Error("write failed: " + path.string());
}

// A failed command leaves its run directory behind only if it produced
// something beyond the config files (for example checkpoints before a divergence).
void remove_if_unused(const fs::path& run_dir) {
    if (run_dir.empty()) return;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(run_dir, ec)) {
        const auto name = entry.path().filename();
        if (name != "config.ini" && name != "overrides.txt") return;
    }
    fs::remove_all(run_dir, ec);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion prosody predictor: data generation, training, sampling and evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "runs";
    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "INI config file (defaults apply to missing keys)");
        cmd->add_option("--out-dir", out_dir, "Root under which the run directory is created");
        cmd->allow_extras();
    };

    std::string out_path;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus and its spec sidecar");
    gen->add_option("--out", out_path, "Corpus path (default: <run dir>/corpus.tsv)");
    common(gen);

    std::string model_name;
    std::string resume_path;
    auto* train = app.add_subcommand("train", "Train a model");
    train->add_option("--model", model_name, "ddpm or baseline")->required()->check(CLI::IsMember({"ddpm", "baseline"}));
    train->add_option("--resume", resume_path, "Checkpoint to continue from");
    common(train);

    std::string checkpoint_path;
    std::string tokens_text;
    std::size_t n_samples = 1;
    std::uint64_t seed = 0;
    auto* sample = app.add_subcommand("sample", "Draw prosody for one token sequence");
    sample->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
    sample->add_option("--tokens", tokens_text, "Token ids, space or comma separated")->required();
    sample->add_option("--n", n_samples, "Number of independent samples");
    sample->add_option("--seed", seed, "Sampling seed");
    common(sample);

    std::string ddpm_path;
    std::string baseline_path;
    auto* eval = app.add_subcommand("eval", "Score both systems against the test split");
    eval->add_option("--ddpm", ddpm_path, "DDPM checkpoint")->required();
    eval->add_option("--baseline", baseline_path, "Baseline checkpoint")->required();
    common(eval);

    auto* rtf = app.add_subcommand("rtf", "Measure the real-time factor of one model");
    rtf->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
    common(rtf);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    CLI::App* cmd = app.get_subcommands().front();
    fs::path run_dir;
    try {
        Config config = config_path.empty() ? Config{} : load_config(config_path);
        const Overrides overrides = parse_overrides(cmd->remaining());
        for (const auto& [key, value] : overrides) apply_override(config, key, value);
        config.validate();

        run_dir = create_run_dir(out_dir, config);
        write_run_config(run_dir, config, overrides);

        if (cmd == gen) {
            const fs::path out = out_path.empty() ? run_dir / "corpus.tsv" : fs::path(out_path);
            generate_data(config, out);
            std::cout << out.string() << '\n';
        } else if (cmd == train) {
            const ModelKind kind = parse_model_kind(model_name);
            const Dataset data = load_dataset(config);
            std::optional<Checkpoint> resume;
            if (!resume_path.empty()) resume = load_checkpoint(resume_path);
            const TrainResult result = run_training(config, kind, data, run_dir, resume ? &*resume : nullptr);
            if (!result.losses.empty())
                std::cerr << fmt::format("step {} loss {:.6f}\n", result.losses.back().first,
                                         result.losses.back().second);
            std::cout << result.final_path.string() << '\n';
        } else if (cmd == sample) {
            const LoadedModel model(load_checkpoint(checkpoint_path));
            const auto records = run_sampling(model, parse_tokens(tokens_text), n_samples, seed);
            const fs::path out = run_dir / "samples.tsv";
            save_corpus(Corpus{records}, out);
            std::cout << out.string() << '\n';
        } else if (cmd == eval) {
            const LoadedModel ddpm(load_checkpoint(ddpm_path));
            const LoadedModel baseline(load_checkpoint(baseline_path));
            const Dataset data = load_dataset(config);
            const auto reports = run_eval(ddpm, baseline, data, config);
            write_file(run_dir / "report.txt", [&](std::ostream& o) { write_eval_report(o, reports, overrides); });
            for (const auto& r : reports)
                write_file(run_dir / ("histograms_" + r.system + ".tsv"),
                           [&](std::ostream& o) { write_histograms(o, r); });
            for (const auto& r : reports)
                std::cout << fmt::format("{}\tjs_pitch={:.4f}\tjs_energy={:.4f}\tjs_log_duration={:.4f}\n", r.system,
                                         r.js_pooled[0], r.js_pooled[1], r.js_pooled[2]);
            std::cout << (run_dir / "report.txt").string() << '\n';
        } else if (cmd == rtf) {
            const LoadedModel model(load_checkpoint(checkpoint_path));
            const Dataset data = load_dataset(config);
            const RtfResult r = run_rtf(model, data, config);
            const std::string text =
                fmt::format("[timing]\nsystem = {}\nrtf = {:.17g}\nseconds_per_utterance = {:.17g}\nutterances = {}\n",
                            model.predictor().name(), r.rtf, r.seconds_per_utterance, r.utterances);
            write_file(run_dir / "rtf.txt", [&](std::ostream& o) { o << text; });
            std::cout << text;
        }
    } catch (const std::exception& e) {
        std::cerr << fmt::format("error: {}: {}\n", cmd->get_name(), e.what());
        remove_if_unused(run_dir);
        return 1;
    }
    return 0;
}
