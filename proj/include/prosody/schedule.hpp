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

#include <cstddef>
#include <vector>

#include "prosody/array.hpp"

namespace prosody {

/// Precomputed variance tables for a T-step diffusion chain.
///
/// Steps are 1-based. `alpha_bar(0)` is defined as 1, which makes
/// `sigma(1)` exactly zero.
class NoiseSchedule {
public:
    /// beta_t = beta_start + (t-1)/(T-1) * (beta_end - beta_start).
    static NoiseSchedule linear(std::size_t steps, double beta_start, double beta_end);
    /// Arbitrary betas (beta[0] is step 1).
    static NoiseSchedule from_betas(std::vector<double> betas);

    std::size_t steps() const noexcept { return beta_.size() - 1; }
    double beta(std::size_t t) const { return beta_.at(check(t)); }
    double alpha(std::size_t t) const { return alpha_.at(check(t)); }
    double alpha_bar(std::size_t t) const { return alpha_bar_.at(t == 0 ? 0 : check(t)); }
    double sigma(std::size_t t) const { return sigma_.at(check(t)); }

    double beta_start() const noexcept { return beta_[1]; }
    double beta_end() const noexcept { return beta_.back(); }

    /// Returns t, or throws if it lies outside [1, T].
    std::size_t check(std::size_t t) const;

private:
    NoiseSchedule() = default;

    // index 0 unused except alpha_bar_[0] = 1
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
    std::vector<double> sigma_;
};

} // namespace prosody
