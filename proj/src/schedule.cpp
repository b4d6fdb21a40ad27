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

#include "prosody/schedule.hpp"

#include <cmath>
#include <string>

namespace prosody {

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
    if (steps < 2) throw Error("noise schedule needs at least 2 steps, got " + std::to_string(steps));
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw Error("noise schedule requires 0 < beta_start <= beta_end < 1");
    std::vector<double> betas(steps);
    const double span = beta_end - beta_start;
    for (std::size_t i = 0; i < steps; ++i)
        betas[i] = beta_start + static_cast<double>(i) / static_cast<double>(steps - 1) * span;
    betas.back() = beta_end;
    return from_betas(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
    if (betas.size() < 2) throw Error("noise schedule needs at least 2 steps");
    NoiseSchedule s;
    const std::size_t T = betas.size();
    s.beta_.assign(T + 1, 0.0);
    s.alpha_.assign(T + 1, 1.0);
    s.alpha_bar_.assign(T + 1, 1.0);
    s.sigma_.assign(T + 1, 0.0);
    for (std::size_t t = 1; t <= T; ++t) {
        const double b = betas[t - 1];
        if (!(b > 0.0 && b < 1.0)) throw Error("beta_" + std::to_string(t) + " outside (0, 1)");
        s.beta_[t] = b;
        s.alpha_[t] = 1.0 - b;
        s.alpha_bar_[t] = s.alpha_bar_[t - 1] * s.alpha_[t];
        const double var = (1.0 - s.alpha_bar_[t - 1]) / (1.0 - s.alpha_bar_[t]) * b;
        s.sigma_[t] = std::sqrt(var);
        if (!(s.alpha_bar_[t] < s.alpha_bar_[t - 1])) throw Error("alpha_bar must be strictly decreasing");
    }
    return s;
}

std::size_t NoiseSchedule::check(std::size_t t) const {
    if (t < 1 || t > steps())
        throw Error("diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
    return t;
}

} // namespace prosody
