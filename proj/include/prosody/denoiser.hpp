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
#include <string>
#include <vector>

#include "prosody/diffusion.hpp"
#include "prosody/nn.hpp"

namespace prosody {

/// Token-class embedding followed by two same-length convolutions with a
/// residual connection: c = e + conv2(relu(conv1(e))).
struct ConditionEncoderConfig {
    std::size_t vocab = 20;
    std::size_t dim = 64;
    std::size_t kernel = 3;

    void validate() const;
    friend bool operator==(const ConditionEncoderConfig&, const ConditionEncoderConfig&) = default;
};

class ConditionEncoder {
public:
    ConditionEncoder() = default;
    ConditionEncoder(const ConditionEncoderConfig& config, ParamStore& store, const std::string& prefix, Rng& rng);

    const ConditionEncoderConfig& config() const noexcept { return config_; }
    /// Throws on any id outside the vocabulary.
    Var operator()(Tape& tape, const ParamStore& store, std::span<const std::size_t> tokens,
                   const SeqLayout& layout) const;

private:
    ConditionEncoderConfig config_;
    nn::Embedding embed_;
    nn::Conv1d conv1_;
    nn::Conv1d conv2_;
};

struct DenoiserConfig {
    std::size_t channels = 64;
    std::size_t layers = 10;
    std::vector<std::size_t> dilation_cycle{1, 2, 4, 8, 16};
    std::size_t kernel = 3;
    std::size_t step_embed_dim = 64;
    std::size_t step_hidden = 256;
    ConditionEncoderConfig encoder;

    std::size_t dilation(std::size_t layer) const { return dilation_cycle[layer % dilation_cycle.size()]; }
    void validate() const;

    friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

/// Sinusoidal encoding of a diffusion step: [sin(t w_0..w_{h-1}), cos(t w_0..w_{h-1})]
/// with w_i = 10000^(-i/h), h = dim/2.
Array step_encoding(std::span<const std::size_t> steps, std::size_t dim);

/// Conditional non-causal WaveNet noise estimator.
///
/// Each residual layer adds a per-layer projection of the step embedding to
/// its input, runs a gated dilated convolution with the condition projected
/// in before the gate, and splits a 1x1 projection into residual and skip
/// paths. Skips are summed, projected and mapped to the 3 features by a
/// zero-initialized head.
class DenoiserModel final : public NoisePredictor {
public:
    DenoiserModel(DenoiserConfig config, Rng& rng);

    const DenoiserConfig& config() const noexcept { return config_; }
    const ParamStore& params() const override { return store_; }
    ParamStore& mutable_params() noexcept { return store_; }

    Var encode(Tape& tape, std::span<const std::size_t> tokens, const SeqLayout& layout) const override;
    Var denoise(Tape& tape, Var x_t, Var cond, const SeqLayout& layout,
                std::span<const std::size_t> steps) const override;

    /// Convenience single-sequence forward: x_t [len, 3], cond [len, dim].
    Array forward(const Array& x_t, const Array& cond, std::size_t t) const;

private:
    struct ResidualLayer {
        nn::Linear step_proj;
        nn::Conv1d dilated;
        nn::Linear cond_proj;
        nn::Linear out_proj;
    };

    DenoiserConfig config_;
    ParamStore store_;
    ConditionEncoder encoder_;
    nn::Linear input_proj_;
    nn::Linear step_mlp1_;
    nn::Linear step_mlp2_;
    std::vector<ResidualLayer> layers_;
    nn::Linear skip_proj_;
    nn::Linear output_head_;
};

/// Exact number of scalar parameters.
std::size_t count_parameters(const NoisePredictor& model);

} // namespace prosody
