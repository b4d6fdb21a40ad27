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
#include <span>
#include <vector>

#include "prosody/denoiser.hpp"

namespace prosody {

struct BaselineConfig {
    std::size_t width = 256;
    std::size_t kernel = 3;
    double dropout = 0.5;
    ConditionEncoderConfig encoder;

    void validate() const;
    friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

/// Deterministic MSE-trained variance predictor: one conv stack per feature,
/// 2 x [conv -> SiLU -> layer norm -> dropout] -> linear(1), over the condition vectors.
class BaselineModel {
public:
    BaselineModel(BaselineConfig config, Rng& rng);

    const BaselineConfig& config() const noexcept { return config_; }
    const ParamStore& params() const noexcept { return store_; }
    ParamStore& mutable_params() noexcept { return store_; }

    Var encode(Tape& tape, std::span<const std::size_t> tokens, const SeqLayout& layout) const;
    /// [rows, 3] prediction; dropout is active only when `training` is set.
    Var heads(Tape& tape, Var cond, const SeqLayout& layout, Rng* rng, bool training) const;

    /// Evaluation-mode prediction from condition vectors [len, dim].
    Array predict_from_condition(const Array& cond) const;
    /// Evaluation-mode prediction for a packed token batch.
    Array predict(std::span<const std::size_t> tokens, const SeqLayout& layout) const;

private:
    struct Head {
        nn::Conv1d conv1;
        nn::LayerNorm norm1;
        nn::Conv1d conv2;
        nn::LayerNorm norm2;
        nn::Linear out;
    };

    BaselineConfig config_;
    ParamStore store_;
    ConditionEncoder encoder_;
    std::array<Head, 3> heads_;
};

inline std::size_t count_parameters(const BaselineModel& model) { return model.params().scalar_count(); }

/// Mean squared error over rows with mask[r] != 0; throws if every row is masked.
/// Dropout draws come from `rng` when `training` is set.
LossResult baseline_train_step(const BaselineModel& model, std::span<const std::size_t> tokens,
                               const SeqLayout& layout, const Array& target, std::span<const double> mask,
                               Rng& rng, bool training = true);

} // namespace prosody
