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

#pragma once

// Experiment orchestration behind the command-line verbs. Every function here
// is a pure function of its arguments and input files; the CLI only parses
// arguments, creates the run directory and prints errors.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prosody/checkpoint.hpp"
#include "prosody/config.hpp"
#include "prosody/data.hpp"
#include "prosody/evaluation.hpp"
#include "prosody/predictor.hpp"

namespace prosody {

using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Creates `<root>/<config hash>-<timestamp>`, appending `-2`, `-3`, ... if
/// that name is taken. An empty timestamp means the current UTC time.
std::filesystem::path create_run_dir(const std::filesystem::path& root, const Config& config,
                                     std::string timestamp = {});

/// Writes the effective config and the overrides that produced it.
void write_run_config(const std::filesystem::path& run_dir, const Config& config, const Overrides& overrides);

/// A split, normalized corpus plus its generating spec when one is known.
struct Dataset {
    Corpus corpus;
    NormStats stats;
    std::optional<SyntheticSpec> spec;
};

/// Sidecar holding the ground-truth spec of a generated corpus.
std::filesystem::path spec_sidecar(const std::filesystem::path& corpus_path);

/// Loads `data.corpus` (and its sidecar if present) or generates from the
/// configured spec, then splits and computes statistics. Token ids must fit
/// the configured vocabulary.
Dataset load_dataset(const Config& config);

/// Generates the configured synthetic corpus into `out` and its spec into
/// the sidecar. Byte-identical for a fixed config.
void generate_data(const Config& config, const std::filesystem::path& out);

/// A model rebuilt from a checkpoint, ready for inference.
class LoadedModel {
public:
    explicit LoadedModel(const Checkpoint& ckpt);

    ModelKind kind() const noexcept { return kind_; }
    const Config& config() const noexcept { return config_; }
    const NormStats& stats() const noexcept { return stats_; }
    const ProsodyPredictor& predictor() const noexcept { return *predictor_; }
    std::size_t vocab() const noexcept;

private:
    ModelKind kind_;
    Config config_;
    NormStats stats_;
    std::unique_ptr<DenoiserModel> ddpm_;
    std::unique_ptr<BaselineModel> baseline_;
    std::unique_ptr<ProsodyPredictor> predictor_;
};

struct TrainResult {
    Checkpoint final_checkpoint;
    std::filesystem::path final_path;
    std::vector<std::pair<std::uint64_t, double>> losses;
};

/// Trains `kind` up to `train.steps`, starting from `resume` if given.
/// Writes `loss.tsv` (step, loss; no header), `ckpt_<step>.bin` every
/// `train.checkpoint_every` steps and `final.bin` at the end. A resumed run
/// ends in the same state as an uninterrupted one. A non-finite loss aborts
/// with the step number and leaves earlier checkpoints in place.
TrainResult run_training(const Config& config, ModelKind kind, const Dataset& data,
                         const std::filesystem::path& run_dir, const Checkpoint* resume = nullptr);

/// Keys that must agree between a checkpoint and the config used to resume it.
std::vector<std::string> resume_conflicts(const Config& saved, const Config& requested, ModelKind kind);

/// Parses whitespace- or comma-separated token ids.
TokenSequence parse_tokens(std::string_view text);

/// `n` independent predictions for one token sequence, ids `sample_<i>`.
/// Every token is checked against the vocabulary before any sampling.
std::vector<Utterance> run_sampling(const LoadedModel& model, const TokenSequence& tokens, std::size_t n,
                                    std::uint64_t seed);

/// Side-by-side evaluation of both systems on the dataset's test split.
/// The checkpoints must share normalization statistics.
std::vector<EvalReport> run_eval(const LoadedModel& ddpm, const LoadedModel& baseline, const Dataset& data,
                                 const Config& config);

/// Report text: the overrides, then one report per system. Contains no timestamps.
void write_eval_report(std::ostream& out, const std::vector<EvalReport>& reports, const Overrides& overrides);

/// Real-time factor of one model over the test split.
RtfResult run_rtf(const LoadedModel& model, const Dataset& data, const Config& config);

} // namespace prosody
