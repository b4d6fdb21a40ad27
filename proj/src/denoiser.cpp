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

#include "prosody/denoiser.hpp"

#include <cmath>

namespace prosody {

ConditionEncoder::ConditionEncoder(const ConditionEncoderConfig& config, ParamStore& store,
                                   const std::string& prefix, Rng& rng)
    : config_(config) {
    if (config.vocab == 0 || config.dim == 0) throw Error("condition encoder needs vocab >= 1 and dim >= 1");
    embed_ = nn::Embedding::create(store, prefix + ".embed", config.vocab, config.dim, rng);
    conv1_ = nn::Conv1d::create(store, prefix + ".conv1", config.dim, config.dim, config.kernel, 1, rng);
    conv2_ = nn::Conv1d::create(store, prefix + ".conv2", config.dim, config.dim, config.kernel, 1, rng);
}

Var ConditionEncoder::operator()(Tape& tape, const ParamStore& store, std::span<const std::size_t> tokens,
                                 const SeqLayout& layout) const {
    for (auto id : tokens)
        if (id >= config_.vocab)
            throw Error("unknown token id " + std::to_string(id) + " (vocabulary size " +
                        std::to_string(config_.vocab) + ")");
    if (tokens.size() != layout.rows()) throw Error("condition encoder: token count does not match layout");
    Var e = embed_(tape, store, tokens);
    Var h = ops::relu(conv1_(tape, store, e, layout));
    return ops::add(e, conv2_(tape, store, h, layout));
}

void ConditionEncoderConfig::validate() const {
    if (vocab == 0 || dim == 0) throw Error("condition encoder needs vocab >= 1 and dim >= 1");
    if (kernel % 2 == 0) throw Error("condition encoder kernel must be odd");
}

void DenoiserConfig::validate() const {
    encoder.validate();
    if (channels == 0 || layers == 0) throw Error("denoiser needs channels >= 1 and layers >= 1");
    if (dilation_cycle.empty()) throw Error("denoiser dilation cycle is empty");
    for (auto d : dilation_cycle)
        if (d == 0) throw Error("denoiser dilations must be >= 1");
    if (kernel % 2 == 0) throw Error("denoiser kernel must be odd");
    if (step_embed_dim < 2 || step_embed_dim % 2) throw Error("step embedding dim must be even and >= 2");
    if (step_hidden == 0) throw Error("step hidden width must be >= 1");
}

Array step_encoding(std::span<const std::size_t> steps, std::size_t dim) {
    const std::size_t half = dim / 2;
    Array out({steps.size(), dim});
    for (std::size_t s = 0; s < steps.size(); ++s) {
        const double t = static_cast<double>(steps[s]);
        for (std::size_t i = 0; i < half; ++i) {
            const double w = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
            out(s, i) = std::sin(t * w);
            out(s, half + i) = std::cos(t * w);
        }
    }
    return out;
}

DenoiserModel::DenoiserModel(DenoiserConfig config, Rng& rng) : config_(std::move(config)) {
    config_.validate();
    const std::size_t C = config_.channels;
    encoder_ = ConditionEncoder(config_.encoder, store_, "encoder", rng);
    input_proj_ = nn::Linear::create(store_, "input_proj", kFeatureDim, C, rng);
    step_mlp1_ = nn::Linear::create(store_, "step_mlp1", config_.step_embed_dim, config_.step_hidden, rng);
    step_mlp2_ = nn::Linear::create(store_, "step_mlp2", config_.step_hidden, config_.step_hidden, rng);
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const std::string p = "layer" + std::to_string(l);
        ResidualLayer layer;
        layer.step_proj = nn::Linear::create(store_, p + ".step_proj", config_.step_hidden, C, rng);
        layer.dilated = nn::Conv1d::create(store_, p + ".dilated", C, 2 * C, config_.kernel, config_.dilation(l), rng);
        layer.cond_proj = nn::Linear::create(store_, p + ".cond_proj", config_.encoder.dim, 2 * C, rng);
        layer.out_proj = nn::Linear::create(store_, p + ".out_proj", C, 2 * C, rng);
        layers_.push_back(layer);
    }
    skip_proj_ = nn::Linear::create(store_, "skip_proj", C, C, rng);
    output_head_ = nn::Linear::create(store_, "output_head", C, kFeatureDim, rng, nn::Init::zeros);
}

Var DenoiserModel::encode(Tape& tape, std::span<const std::size_t> tokens, const SeqLayout& layout) const {
    return encoder_(tape, store_, tokens, layout);
}

Var DenoiserModel::denoise(Tape& tape, Var x_t, Var cond, const SeqLayout& layout,
                           std::span<const std::size_t> steps) const {
    const std::size_t C = config_.channels;
    if (x_t.value().rank() != 2 || x_t.value().cols() != kFeatureDim || x_t.value().rows() != layout.rows())
        throw Error("denoiser: x_t shape " + shape_string(x_t.shape()) + " does not match " +
                    std::to_string(layout.rows()) + " tokens x 3 features");
    if (cond.value().rows() != layout.rows() || cond.value().cols() != config_.encoder.dim)
        throw Error("denoiser: condition shape " + shape_string(cond.shape()) + " does not match feature length " +
                    std::to_string(layout.rows()));
    if (steps.size() != layout.sequences()) throw Error("denoiser: need one diffusion step per sequence");
    for (auto t : steps)
        if (t == 0) throw Error("denoiser: diffusion steps are 1-based");

    const std::vector<std::size_t> row_seq = layout.row_sequence();
    Var temb = tape.constant(step_encoding(steps, config_.step_embed_dim));
    temb = ops::silu(step_mlp1_(tape, store_, temb));
    temb = ops::silu(step_mlp2_(tape, store_, temb));

    Var h = ops::relu(input_proj_(tape, store_, x_t));
    Var skip;
    const double res_scale = 1.0 / std::sqrt(2.0);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const ResidualLayer& layer = layers_[l];
        Var step_bias = ops::embed_lookup(layer.step_proj(tape, store_, temb), row_seq);
        Var y = ops::add(h, step_bias);
        Var z = ops::add(layer.dilated(tape, store_, y, layout), layer.cond_proj(tape, store_, cond));
        Var gated = ops::mul(ops::tanh(ops::slice_cols(z, 0, C)), ops::sigmoid(ops::slice_cols(z, C, 2 * C)));
        Var o = layer.out_proj(tape, store_, gated);
        h = ops::scale(ops::add(h, ops::slice_cols(o, 0, C)), res_scale);
        Var s = ops::slice_cols(o, C, 2 * C);
        skip = l == 0 ? s : ops::add(skip, s);
    }
    Var agg = ops::scale(skip, 1.0 / std::sqrt(static_cast<double>(layers_.size())));
    agg = ops::relu(skip_proj_(tape, store_, agg));
    return output_head_(tape, store_, agg);
}

Array DenoiserModel::forward(const Array& x_t, const Array& cond, std::size_t t) const {
    Tape tape(Tape::Mode::inference);
    const SeqLayout layout = SeqLayout::single(x_t.rows());
    const std::size_t steps[] = {t};
    return denoise(tape, tape.constant(x_t), tape.constant(cond), layout, steps).value();
}

std::size_t count_parameters(const NoisePredictor& model) { return model.params().scalar_count(); }

} // namespace prosody
