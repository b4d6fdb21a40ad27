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
#include <span>
#include <vector>

#include "prosody/rng.hpp"
#include "prosody/schedule.hpp"
#include "prosody/tape.hpp"

namespace prosody {

/// Number of prosody features per token (pitch, energy, log-duration).
inline constexpr std::size_t kFeatureDim = 3;

/// A network predicting the injected noise from (x_t, condition, t).
///
/// Conditioning is split from denoising so the sampler can encode the
/// tokens once and reuse the result for every reverse step.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;

    virtual const ParamStore& params() const = 0;
    /// Condition vectors for a packed token batch.
    virtual Var encode(Tape& tape, std::span<const std::size_t> tokens, const SeqLayout& layout) const = 0;
    /// Noise estimate with the shape of `x_t`; `steps` holds one step per sequence.
    virtual Var denoise(Tape& tape, Var x_t, Var cond, const SeqLayout& layout,
                        std::span<const std::size_t> steps) const = 0;
};

/// Packed model-space training batch.
struct DiffusionBatch {
    Array x0;                          // [rows, 3]
    std::vector<std::size_t> tokens;   // one class id per row
    SeqLayout layout;
    std::vector<double> mask;          // per-row weight in {0, 1}; empty means all rows count
};

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Array forward_diffuse(const Array& x0, std::size_t t, const Array& eps, const NoiseSchedule& sched);
/// Per-sequence steps over a packed batch.
Array forward_diffuse(const Array& x0, const SeqLayout& layout, std::span<const std::size_t> steps,
                      const Array& eps, const NoiseSchedule& sched);

/// (1/sqrt(alpha_t)) (x_t - beta_t / sqrt(1 - abar_t) * eps_hat).
Array posterior_mean(const Array& x_t, const Array& eps_hat, std::size_t t, const NoiseSchedule& sched);

struct LossResult {
    double loss = 0.0;
    Gradients grads;
};

/// Mean over unmasked elements of (eps - eps_theta(x_t, c, t))^2 with
/// x_t = forward_diffuse(x0, t, eps), plus parameter gradients.
LossResult training_loss(const NoisePredictor& model, const DiffusionBatch& batch,
                         std::span<const std::size_t> steps, const Array& eps, const NoiseSchedule& sched);

/// x_{t-1} = posterior_mean(x_t, eps_hat, t) + sigma_t z, with z ignored at t = 1.
/// `cond` is the encoder output for the batch.
Array reverse_step(const NoisePredictor& model, const Array& x_t, const Array& cond, const SeqLayout& layout,
                   std::size_t t, const Array& z, const NoiseSchedule& sched);

/// Full reverse chain from x_T ~ N(0, I) down to x_0, in model space.
Array sample_model_space(const NoisePredictor& model, std::span<const std::size_t> tokens, const SeqLayout& layout,
                         const NoiseSchedule& sched, Rng& rng);

} // namespace prosody
