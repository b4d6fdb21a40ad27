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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prosody/data.hpp"
#include "prosody/metrics.hpp"
#include "prosody/predictor.hpp"

namespace prosody {

inline constexpr std::array<const char*, 3> kFeatureNames{"pitch", "energy", "log_duration"};

/// Frame period assumed when turning durations into audio time (hop 256 at 22.05 kHz).
inline constexpr double kDefaultFramePeriod = 256.0 / 22050.0;

struct EvalOptions {
    std::size_t bins = 128;
    /// Predictions drawn per test utterance; forced to 1 for deterministic predictors.
    std::size_t n_samples = 8;
    std::uint64_t seed = 0;
    /// Classes expected in the per-class table; 0 means one past the largest token id seen.
    std::size_t vocab = 0;
    /// Known pitch modes (from a synthetic spec) for the coverage statistic; may be empty.
    std::vector<PitchModes> modes;
    /// Mode radius in units of the within-mode spread.
    double mode_radius = 2.0;
};

/// A predicted and a ground-truth histogram over the same bins.
struct HistogramPair {
    std::vector<double> p;  // predictions
    std::vector<double> q;  // ground truth

    friend bool operator==(const HistogramPair&, const HistogramPair&) = default;
};

struct ClassScore {
    std::size_t token_class = 0;
    std::size_t truth_count = 0;
    std::size_t predicted_count = 0;
    std::array<double, 3> js{};
    std::array<HistogramPair, 3> hist;

    friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

/// Pitch occupancy for one multimodal class: one entry per mode, then the out-of-mode share.
struct ModeScore {
    std::size_t token_class = 0;
    std::vector<double> occupancy;

    friend bool operator==(const ModeScore&, const ModeScore&) = default;
};

struct EvalReport {
    std::string system;
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    std::size_t test_utterances = 0;
    std::string config_hash;

    std::array<BinningSpec, 3> binning{};
    std::array<double, 3> js_pooled{};
    /// Mean of the per-class values over the classes present.
    std::array<double, 3> js_class_mean{};
    std::array<HistogramPair, 3> pooled_hist;
    std::vector<ClassScore> per_class;

    std::vector<ModeScore> modes;
    /// Occupancy pooled over all multimodal classes, modes ordered by pitch (low, high, ..., outside).
    std::vector<double> mode_pooled;

    std::optional<double> rtf;
    std::vector<std::string> warnings;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Predicts the test split (n samples per utterance for stochastic systems),
/// pools per token class and per dimension, and scores against ground truth.
/// Bins span the ground-truth train+test pool. Pure in (predictor, corpus, options).
EvalReport evaluate_predictor(const ProsodyPredictor& predictor, const Corpus& corpus, const EvalOptions& options);

struct RtfResult {
    double rtf = 0.0;               // mean over utterances of compute time / audio time
    double seconds_per_utterance = 0.0;
    std::size_t utterances = 0;
};

/// Times one prediction per test utterance (batch of one) against the audio
/// length implied by its ground-truth durations. Utterances with zero frames
/// are skipped; `max_utterances` = 0 times the whole split.
RtfResult measure_rtf(const ProsodyPredictor& predictor, const Corpus& corpus, double frame_period = kDefaultFramePeriod,
                      std::size_t max_utterances = 0, std::uint64_t seed = 0);

/// Structured text: key = value sections plus tab-separated tables.
void write_report(std::ostream& out, const EvalReport& report);
/// Long-format histogram dump: support, feature, bin, lo, hi, predicted, truth.
void write_histograms(std::ostream& out, const EvalReport& report);

} // namespace prosody
