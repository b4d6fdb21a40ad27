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

#include "prosody/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "prosody/training.hpp"

namespace prosody {
namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw Error("write failed: " + path.string());
}

std::size_t vocab_of(const Config& config) { return config.denoiser.encoder.vocab; }

SyntheticSpec configured_spec(const Config& config) {
    if (config.data.spec.empty()) return desk_bench_spec();
    SyntheticSpec spec = spec_from_json(read_text(config.data.spec));
    spec.validate();
    return spec;
}

// The rng state in a checkpoint carries the algorithm name so a file written
// by a different generator is rejected instead of silently misread.
std::string save_rng(const Rng& rng) { return std::string(Rng::kAlgorithm) + ' ' + rng.state(); }

void load_rng(Rng& rng, const std::string& saved) {
    const std::string prefix = std::string(Rng::kAlgorithm) + ' ';
    if (saved.compare(0, prefix.size(), prefix) != 0)
        throw Error(fmt::format("checkpoint rng is not {}", Rng::kAlgorithm));
    rng.restore(saved.substr(prefix.size()));
}

// One loop for both model kinds; `Trainer` is DdpmTrainer or BaselineTrainer.
template <class Model, class Trainer>
TrainResult train_loop(const Config& config, ModelKind kind, Model& model, Trainer& trainer, const Dataset& data,
                       const fs::path& run_dir, const Checkpoint* resume) {
    std::uint64_t step = 0;
    if (resume) {
        restore_params(model.mutable_params(), resume->params);
        if (!resume->first_moments.empty()) {
            trainer.optimizer().first_moments() = resume->first_moments;
            trainer.optimizer().second_moments() = resume->second_moments;
        }
        trainer.optimizer().set_steps(resume->optimizer_step);
        if (trainer.average().enabled()) {
            if (resume->averaged.size() != trainer.average().values().size())
                throw Error("checkpoint has no parameter average but train.ema_decay is set");
            trainer.average().values() = resume->averaged;
        }
        load_rng(trainer.rng(), resume->rng_state);
        step = resume->step;
    }

    const auto examples = make_examples(data.corpus, data.stats, Split::train);
    if (examples.empty()) throw Error("the train split is empty");

    auto snapshot = [&](std::uint64_t at) {
        Checkpoint c;
        c.kind = kind;
        c.config = to_text(config);
        c.stats = data.stats;
        c.step = at;
        c.rng_state = save_rng(trainer.rng());
        c.params = model.params();
        c.optimizer_step = trainer.optimizer().steps();
        c.first_moments = trainer.optimizer().first_moments();
        c.second_moments = trainer.optimizer().second_moments();
        c.averaged = trainer.average().values();
        return c;
    };

    TrainResult result;
    std::ofstream log(run_dir / "loss.tsv", std::ios::trunc);
    if (!log) throw Error("cannot write " + (run_dir / "loss.tsv").string());
    std::string last_checkpoint = "none";

    while (step < config.train.steps) {
        ++step;
        double loss = 0.0;
        try {
            loss = trainer.step(examples);
        } catch (const NumericError& e) {
            throw NumericError(fmt::format("training diverged at step {} ({}); last checkpoint: {}", step, e.what(),
                                           last_checkpoint));
        }
        if (!std::isfinite(loss))
            throw NumericError(
                fmt::format("training diverged at step {} (loss {}); last checkpoint: {}", step, loss, last_checkpoint));
        result.losses.emplace_back(step, loss);
        log << fmt::format("{}\t{:.17g}\n", step, loss);

        if (config.train.checkpoint_every > 0 && step % config.train.checkpoint_every == 0) {
            const fs::path path = run_dir / fmt::format("ckpt_{:08d}.bin", step);
            save_checkpoint(snapshot(step), path);
            last_checkpoint = path.string();
            log.flush();
        }
    }
    if (!log.flush()) throw Error("write failed: " + (run_dir / "loss.tsv").string());

    result.final_checkpoint = snapshot(step);
    result.final_path = run_dir / "final.bin";
    save_checkpoint(result.final_checkpoint, result.final_path);
    return result;
}

} // namespace

fs::path create_run_dir(const fs::path& root, const Config& config, std::string timestamp) {
    if (timestamp.empty()) timestamp = utc_timestamp();
    fs::create_directories(root);
    const std::string base = config_hash(config) + "-" + timestamp;
    for (int n = 1;; ++n) {
        const fs::path dir = root / (n == 1 ? base : fmt::format("{}-{}", base, n));
        // create_directory reports false when the directory already exists.
        if (fs::create_directory(dir)) return dir;
    }
}

void write_run_config(const fs::path& run_dir, const Config& config, const Overrides& overrides) {
    write_text(run_dir / "config.ini", to_text(config));
    std::string text;
    for (const auto& [key, value] : overrides) text += key + " = " + value + "\n";
    write_text(run_dir / "overrides.txt", text);
}

fs::path spec_sidecar(const fs::path& corpus_path) { return fs::path(corpus_path.string() + ".spec.json"); }

Dataset load_dataset(const Config& config) {
    Dataset data;
    if (!config.data.corpus.empty()) {
        data.corpus = load_corpus(config.data.corpus);
        const fs::path sidecar = spec_sidecar(config.data.corpus);
        if (fs::exists(sidecar)) data.spec = spec_from_json(read_text(sidecar));
    } else {
        data.spec = configured_spec(config);
        Rng rng(config.data.seed);
        data.corpus = generate_corpus(*data.spec, config.data.n_utterances,
                                      LengthRange{config.data.min_length, config.data.max_length}, rng);
    }
    if (data.corpus.utterances.size() < 2) throw Error("the corpus needs at least two utterances");

    const std::size_t vocab = vocab_of(config);
    if (data.spec && data.spec->vocab() > vocab)
        throw Error(fmt::format("the data spec has {} token classes but data.vocab is {}", data.spec->vocab(), vocab));
    for (const auto& utt : data.corpus.utterances) validate(utt, vocab);

    assign_split(data.corpus, config.data.split_seed, config.data.test_fraction);
    data.stats = compute_stats(data.corpus);
    return data;
}

void generate_data(const Config& config, const fs::path& out) {
    if (!config.data.corpus.empty())
        throw Error("gen-data writes a synthetic corpus; data.corpus must be empty");
    const SyntheticSpec spec = configured_spec(config);
    if (spec.vocab() > vocab_of(config))
        throw Error(fmt::format("the data spec has {} token classes but data.vocab is {}", spec.vocab(),
                                vocab_of(config)));
    Rng rng(config.data.seed);
    const Corpus corpus = generate_corpus(spec, config.data.n_utterances,
                                          LengthRange{config.data.min_length, config.data.max_length}, rng);
    save_corpus(corpus, out);
    write_text(spec_sidecar(out), spec_to_json(spec));
}

LoadedModel::LoadedModel(const Checkpoint& ckpt)
    : kind_(ckpt.kind), config_(parse_config(ckpt.config)), stats_(ckpt.stats) {
    config_.validate();
    // Inference uses the moving average when the checkpoint carries one.
    auto load = [&](ParamStore& store) {
        restore_params(store, ckpt.params);
        if (ckpt.averaged.empty()) return;
        if (ckpt.averaged.size() != store.size()) throw Error("checkpoint parameter average is incomplete");
        for (ParamId p = 0; p < store.size(); ++p) store.value(p) = ckpt.averaged[p];
    };
    // Initial values are overwritten by the checkpoint; the seed is irrelevant.
    Rng init(0);
    if (kind_ == ModelKind::ddpm) {
        ddpm_ = std::make_unique<DenoiserModel>(config_.denoiser, init);
        load(ddpm_->mutable_params());
        predictor_ = std::make_unique<DdpmPredictor>(*ddpm_, config_.schedule.make(), stats_);
    } else {
        baseline_ = std::make_unique<BaselineModel>(config_.baseline, init);
        load(baseline_->mutable_params());
        predictor_ = std::make_unique<BaselinePredictor>(*baseline_, stats_);
    }
}

std::size_t LoadedModel::vocab() const noexcept {
    return kind_ == ModelKind::ddpm ? config_.denoiser.encoder.vocab : config_.baseline.encoder.vocab;
}

std::vector<std::string> resume_conflicts(const Config& saved, const Config& requested, ModelKind kind) {
    std::vector<std::string> out = model_conflicts(saved, requested, kind);
    // Anything that shapes the training trajectory must match too, otherwise
    // the resumed run could not equal an uninterrupted one.
    for (const auto& key : config_keys()) {
        const bool trajectory = (key.starts_with("data.") && key != "data.vocab") ||
                                (key.starts_with("train.") && key != "train.steps" && key != "train.checkpoint_every");
        if (trajectory && config_value(saved, key) != config_value(requested, key)) out.push_back(key);
    }
    return out;
}

TrainResult run_training(const Config& config, ModelKind kind, const Dataset& data, const fs::path& run_dir,
                         const Checkpoint* resume) {
    config.validate();
    if (resume) {
        if (resume->kind != kind)
            throw Error(fmt::format("cannot resume a {} checkpoint as {}", to_string(resume->kind), to_string(kind)));
        const auto conflicts = resume_conflicts(parse_config(resume->config), config, kind);
        if (!conflicts.empty()) {
            std::string keys;
            for (const auto& k : conflicts) keys += (keys.empty() ? "" : ", ") + k;
            throw Error("checkpoint config conflicts with the requested config: " + keys);
        }
        if (resume->stats != data.stats) throw Error("checkpoint normalization statistics differ from the corpus");
        if (resume->step > config.train.steps)
            throw Error(fmt::format("checkpoint is at step {}, past train.steps = {}", resume->step,
                                    config.train.steps));
    }

    // Parameters are drawn from the train seed; the trainer's own stream
    // (batches, noise, dropout) is seeded from the same generator afterwards.
    Rng init(config.train.seed);
    const TrainOptions options{config.train.batch_size, config.train.adam, config.train.ema_decay};
    if (kind == ModelKind::ddpm) {
        DenoiserModel model(config.denoiser, init);
        DdpmTrainer trainer(model, config.schedule.make(), options, init.engine()());
        return train_loop(config, kind, model, trainer, data, run_dir, resume);
    }
    BaselineModel model(config.baseline, init);
    BaselineTrainer trainer(model, options, init.engine()());
    return train_loop(config, kind, model, trainer, data, run_dir, resume);
}

TokenSequence parse_tokens(std::string_view text) {
    TokenSequence out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == ' ' || text[i] == ',' || text[i] == '\t') {
            ++i;
            continue;
        }
        std::size_t value = 0;
        const auto [end, ec] = std::from_chars(text.data() + i, text.data() + text.size(), value);
        if (ec != std::errc() || (end != text.data() + text.size() && *end != ' ' && *end != ',' && *end != '\t'))
            throw Error(fmt::format("malformed token list '{}'", text));
        out.push_back(value);
        i = static_cast<std::size_t>(end - text.data());
    }
    if (out.empty()) throw Error("the token list is empty");
    return out;
}

std::vector<Utterance> run_sampling(const LoadedModel& model, const TokenSequence& tokens, std::size_t n,
                                    std::uint64_t seed) {
    if (n == 0) throw Error("the number of samples must be >= 1");
    if (tokens.empty()) throw Error("the token list is empty");
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i] >= model.vocab())
            throw Error(fmt::format("token {} at position {} is outside the vocabulary of {}", tokens[i], i,
                                    model.vocab()));
    if (model.kind() == ModelKind::baseline && n > 1)
        throw Error(fmt::format("the baseline is deterministic: {} samples would be identical; use n = 1", n));

    Rng rng(seed);
    const std::vector<TokenSequence> batch{tokens};
    std::vector<Utterance> out;
    for (std::size_t i = 0; i < n; ++i) {
        Utterance utt;
        utt.id = fmt::format("sample_{}", i);
        utt.tokens = tokens;
        utt.prosody = model.predictor().predict(batch, rng).front();
        out.push_back(std::move(utt));
    }
    return out;
}

std::vector<EvalReport> run_eval(const LoadedModel& ddpm, const LoadedModel& baseline, const Dataset& data,
                                 const Config& config) {
    if (ddpm.kind() != ModelKind::ddpm) throw Error("the first checkpoint must be a ddpm model");
    if (baseline.kind() != ModelKind::baseline) throw Error("the second checkpoint must be a baseline model");
    if (ddpm.stats() != baseline.stats())
        throw Error("the checkpoints were trained with different normalization statistics");

    EvalOptions options;
    options.bins = config.eval.bins;
    options.n_samples = config.eval.n_samples;
    options.seed = config.eval.seed;
    options.vocab = vocab_of(config);
    options.mode_radius = config.eval.mode_radius;
    if (data.spec) options.modes = pitch_modes(*data.spec);

    std::vector<EvalReport> reports;
    for (const LoadedModel* model : {&ddpm, &baseline}) {
        EvalReport report = evaluate_predictor(model->predictor(), data.corpus, options);
        report.config_hash = config_hash(config);
        if (model->stats() != data.stats)
            report.warnings.push_back("checkpoint normalization statistics differ from the evaluation corpus");
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_eval_report(std::ostream& out, const std::vector<EvalReport>& reports, const Overrides& overrides) {
    out << "[overrides]\n";
    for (const auto& [key, value] : overrides) out << key << " = " << value << '\n';
    for (const auto& report : reports) {
        out << '\n';
        write_report(out, report);
    }
}

RtfResult run_rtf(const LoadedModel& model, const Dataset& data, const Config& config) {
    return measure_rtf(model.predictor(), data.corpus, config.eval.frame_period, config.eval.rtf_utterances,
                       config.eval.seed);
}

} // namespace prosody
