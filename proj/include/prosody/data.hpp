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
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prosody/array.hpp"
#include "prosody/rng.hpp"

namespace prosody {

using TokenSequence = std::vector<std::size_t>;

/// Per-token prosody in physical units.
struct ProsodySequence {
    std::vector<double> pitch;    // Hz, > 0
    std::vector<double> energy;   // >= 0
    std::vector<long> duration;   // frames, >= 1

    std::size_t size() const noexcept { return pitch.size(); }
    friend bool operator==(const ProsodySequence&, const ProsodySequence&) = default;
};

enum class Split { train, test };

struct Utterance {
    std::string id;
    TokenSequence tokens;
    ProsodySequence prosody;
    Split split = Split::train;

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Corpus {
    std::vector<Utterance> utterances;

    std::vector<const Utterance*> select(Split split) const;
    friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Throws with the utterance id if any per-token invariant is broken.
void validate(const Utterance& utt, std::size_t vocab = 0);

// --- feature transforms ---------------------------------------------------

/// Feature space: (pitch, energy, ln duration) per token, [len, 3].
Array to_features(const ProsodySequence& seq);
/// Inverse of to_features with duration = max(1, round-half-up(exp(ld))),
/// energy clamped at 0 and pitch floored at a small positive value.
ProsodySequence from_features(const Array& features);

/// Per-dimension z-score statistics of the feature space.
struct NormStats {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> std{1.0, 1.0, 1.0};

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Statistics over the train split; zero variance in any dimension is an error.
NormStats compute_stats(const Corpus& corpus);
Array normalize(const Array& features, const NormStats& stats);
Array denormalize(const Array& model_space, const NormStats& stats);

/// Marks a `test_fraction` share (at least one utterance) as test; a pure
/// function of (corpus, seed).
void assign_split(Corpus& corpus, std::uint64_t seed, double test_fraction = 0.05);

// --- corpus file ----------------------------------------------------------

/// One utterance per line: id \t tokens \t pitches \t energies \t durations.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);
std::string format_utterance(const Utterance& utt);

// --- synthetic data -------------------------------------------------------

/// One Gaussian component over the feature triple (pitch, energy, ln duration).
struct GaussianComponent {
    double weight = 1.0;
    std::array<double, 3> mean{};
    std::array<std::array<double, 3>, 3> cov{};

    friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;
};

struct TokenClassSpec {
    std::vector<GaussianComponent> components;
    /// Added to a token's feature mean for each neighbour (left and right) of this class.
    std::array<double, 3> neighbour_shift{0.0, 0.0, 0.0};

    friend bool operator==(const TokenClassSpec&, const TokenClassSpec&) = default;
};

struct SyntheticSpec {
    std::vector<TokenClassSpec> classes;

    std::size_t vocab() const noexcept { return classes.size(); }
    /// Weights sum to 1, covariances positive definite.
    void validate() const;

    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Radius-free description of a class's pitch modes, used by mode coverage.
struct PitchModes {
    std::size_t token_class = 0;
    std::vector<double> centers;
    double spread = 0.0;  // within-mode standard deviation
};

/// The built-in benchmark: 20 classes, pitch bimodal for even classes (modes at
/// +-3 within-mode sigma), narrow context-driven energy, lognormal duration.
SyntheticSpec desk_bench_spec();
/// Classes whose pitch distribution has more than one component.
std::vector<PitchModes> pitch_modes(const SyntheticSpec& spec);

struct LengthRange {
    std::size_t min = 4;
    std::size_t max = 12;
};

Corpus generate_corpus(const SyntheticSpec& spec, std::size_t n_utterances, LengthRange lengths, Rng& rng);

std::string spec_to_json(const SyntheticSpec& spec);
SyntheticSpec spec_from_json(const std::string& text);

} // namespace prosody
