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
#include <vector>

#include "prosody/tape.hpp"

namespace prosody {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive moment estimation with bias correction.
class Adam {
public:
    Adam() = default;
    Adam(AdamConfig config, const ParamStore& store);

    void step(ParamStore& store, const Gradients& grads);

    const AdamConfig& config() const noexcept { return config_; }
    std::uint64_t steps() const noexcept { return t_; }

    // Raw state for checkpointing.
    std::vector<Array>& first_moments() noexcept { return m_; }
    std::vector<Array>& second_moments() noexcept { return v_; }
    const std::vector<Array>& first_moments() const noexcept { return m_; }
    const std::vector<Array>& second_moments() const noexcept { return v_; }
    void set_steps(std::uint64_t t) noexcept { t_ = t; }

private:
    AdamConfig config_;
    std::vector<Array> m_;
    std::vector<Array> v_;
    std::uint64_t t_ = 0;
};

/// Exponential moving average of the parameters. The effective decay is
/// min(decay, (1 + n) / (10 + n)) after n updates so the average leaves the
/// initialization quickly. A decay of 0 disables it.
class ParamAverage {
public:
    ParamAverage() = default;
    ParamAverage(double decay, const ParamStore& store);

    bool enabled() const noexcept { return decay_ > 0.0; }
    /// `updates` counts this update (the optimizer step just taken).
    void update(const ParamStore& store, std::uint64_t updates);

    std::vector<Array>& values() noexcept { return values_; }
    const std::vector<Array>& values() const noexcept { return values_; }

private:
    double decay_ = 0.0;
    std::vector<Array> values_;
};

} // namespace prosody
