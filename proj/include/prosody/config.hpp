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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "prosody/baseline.hpp"
#include "prosody/denoiser.hpp"
#include "prosody/evaluation.hpp"
#include "prosody/optimizer.hpp"
#include "prosody/schedule.hpp"

namespace prosody {

enum class ModelKind { ddpm, baseline };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ScheduleConfig {
    std::size_t steps = 500;
    double beta_start = 1e-4;
    double beta_end = 0.06;

    NoiseSchedule make() const { return NoiseSchedule::linear(steps, beta_start, beta_end); }
    friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct DataConfig {
    std::string corpus;  // corpus file; empty means generate from `spec`
    std::string spec;    // synthetic spec JSON; empty means the built-in desk-bench
    std::size_t n_utterances = 2000;
    std::size_t min_length = 4;
    std::size_t max_length = 12;
    std::uint64_t seed = 1;
    std::uint64_t split_seed = 5;
    double test_fraction = 0.05;

    friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct TrainConfig {
    std::size_t steps = 20000;
    std::uint64_t seed = 3;
    std::size_t batch_size = 16;
    std::size_t checkpoint_every = 5000;
    AdamConfig adam;
    /// Parameter moving average used for inference; 0 disables it.
    double ema_decay = 0.0;

    friend bool operator==(const TrainConfig& a, const TrainConfig& b) {
        return a.steps == b.steps && a.seed == b.seed && a.batch_size == b.batch_size &&
               a.checkpoint_every == b.checkpoint_every && a.adam.learning_rate == b.adam.learning_rate &&
               a.adam.beta1 == b.adam.beta1 && a.adam.beta2 == b.adam.beta2 && a.adam.epsilon == b.adam.epsilon &&
               a.ema_decay == b.ema_decay;
    }
};

struct EvalConfig {
    std::size_t bins = 128;
    std::size_t n_samples = 8;
    std::uint64_t seed = 11;
    double mode_radius = 2.0;
    double frame_period = kDefaultFramePeriod;
    std::size_t rtf_utterances = 20;

    friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

/// Everything a command needs. Both models share one vocabulary (`data.vocab`).
struct Config {
    ScheduleConfig schedule;
    DenoiserConfig denoiser;
    BaselineConfig baseline;
    DataConfig data;
    TrainConfig train;
    EvalConfig eval;

    /// Throws on the first invalid value.
    void validate() const;
    friend bool operator==(const Config&, const Config&) = default;
};

/// Every accepted `section.key`, in canonical order.
const std::vector<std::string>& config_keys();

/// INI text with `[section]` headers and `key = value` lines. Keys not in
/// the table are rejected; missing keys keep their defaults.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

/// Sets one `section.key`; unknown keys and malformed values throw.
void apply_override(Config& config, std::string_view key, std::string_view value);
std::string config_value(const Config& config, std::string_view key);

/// Canonical text: every key, fixed order, values printed to round-trip exactly.
std::string to_text(const Config& config);
/// 16 hex digits of a 64-bit FNV-1a hash of the canonical text.
std::string config_hash(const Config& config);

/// Keys whose values differ and that change what a trained model of `kind`
/// means: its topology, the vocabulary and (for the DDPM) the schedule.
std::vector<std::string> model_conflicts(const Config& a, const Config& b, ModelKind kind);

} // namespace prosody
