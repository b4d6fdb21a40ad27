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

#include "prosody/baseline.hpp"

namespace prosody {

void BaselineConfig::validate() const {
    encoder.validate();
    if (width == 0) throw Error("baseline width must be >= 1");
    if (kernel % 2 == 0) throw Error("baseline kernel must be odd");
    if (dropout < 0.0 || dropout >= 1.0) throw Error("baseline dropout must be in [0, 1)");
}

BaselineModel::BaselineModel(BaselineConfig config, Rng& rng) : config_(std::move(config)) {
    config_.validate();
    encoder_ = ConditionEncoder(config_.encoder, store_, "encoder", rng);
    static constexpr const char* kNames[] = {"pitch", "energy", "duration"};
    const std::size_t W = config_.width;
    for (std::size_t k = 0; k < heads_.size(); ++k) {
        const std::string p = std::string("head.") + kNames[k];
        Head& h = heads_[k];
        h.conv1 = nn::Conv1d::create(store_, p + ".conv1", config_.encoder.dim, W, config_.kernel, 1, rng);
        h.norm1 = nn::LayerNorm::create(store_, p + ".norm1", W);
        h.conv2 = nn::Conv1d::create(store_, p + ".conv2", W, W, config_.kernel, 1, rng);
        h.norm2 = nn::LayerNorm::create(store_, p + ".norm2", W);
        h.out = nn::Linear::create(store_, p + ".out", W, 1, rng);
    }
}

Var BaselineModel::encode(Tape& tape, std::span<const std::size_t> tokens, const SeqLayout& layout) const {
    return encoder_(tape, store_, tokens, layout);
}

Var BaselineModel::heads(Tape& tape, Var cond, const SeqLayout& layout, Rng* rng, bool training) const {
    if (cond.value().rank() != 2 || cond.value().cols() != config_.encoder.dim || cond.value().rows() != layout.rows())
        throw Error("baseline: condition shape " + shape_string(cond.shape()) + " does not match " +
                    std::to_string(layout.rows()) + " tokens x " + std::to_string(config_.encoder.dim));
    if (training && config_.dropout > 0.0 && rng == nullptr) throw Error("baseline: training needs an rng");
    Rng unused(0);
    Rng& r = rng ? *rng : unused;
    std::vector<Var> outs;
    for (const Head& h : heads_) {
        Var y = ops::silu(h.conv1(tape, store_, cond, layout));
        y = ops::dropout(h.norm1(tape, store_, y), config_.dropout, r, training);
        y = ops::silu(h.conv2(tape, store_, y, layout));
        y = ops::dropout(h.norm2(tape, store_, y), config_.dropout, r, training);
        outs.push_back(h.out(tape, store_, y));
    }
    return ops::concat_cols(outs);
}

Array BaselineModel::predict_from_condition(const Array& cond) const {
    Tape tape(Tape::Mode::inference);
    const SeqLayout layout = SeqLayout::single(cond.rows());
    return heads(tape, tape.constant(cond), layout, nullptr, false).value();
}

Array BaselineModel::predict(std::span<const std::size_t> tokens, const SeqLayout& layout) const {
    Tape tape(Tape::Mode::inference);
    return heads(tape, encode(tape, tokens, layout), layout, nullptr, false).value();
}

LossResult baseline_train_step(const BaselineModel& model, std::span<const std::size_t> tokens,
                               const SeqLayout& layout, const Array& target, std::span<const double> mask,
                               Rng& rng, bool training) {
    const std::size_t rows = layout.rows();
    if (target.rank() != 2 || target.rows() != rows || target.cols() != kFeatureDim)
        throw Error("baseline_train_step: target shape " + shape_string(target.shape()) + " does not match " +
                    std::to_string(rows) + " tokens");
    if (!mask.empty() && mask.size() != rows) throw Error("baseline_train_step: mask length mismatch");

    Array m({rows, kFeatureDim}, 1.0);
    double valid = static_cast<double>(rows);
    if (!mask.empty()) {
        valid = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double w = mask[r] != 0.0 ? 1.0 : 0.0;
            valid += w;
            for (std::size_t c = 0; c < kFeatureDim; ++c) m(r, c) = w;
        }
    }
    if (valid == 0.0) throw Error("baseline_train_step: every token is masked");

    Tape tape;
    Var pred = model.heads(tape, model.encode(tape, tokens, layout), layout, &rng, training);
    Var diff = ops::mul(ops::sub(pred, tape.constant(target)), tape.constant(std::move(m)));
    Var loss = ops::scale(ops::sum(ops::mul(diff, diff)), 1.0 / (valid * static_cast<double>(kFeatureDim)));
    LossResult out;
    out.loss = loss.value().item();
    out.grads = tape.backward(loss, model.params());
    return out;
}

} // namespace prosody
