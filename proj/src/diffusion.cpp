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

#include "prosody/diffusion.hpp"

#include <cmath>
#include <string>

namespace prosody {

namespace {

void require_same_shape(const char* what, const Array& a, const Array& b) {
    if (a.shape() != b.shape())
        throw NumericError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                           shape_string(b.shape()));
}

} // namespace

Array forward_diffuse(const Array& x0, std::size_t t, const Array& eps, const NoiseSchedule& sched) {
    require_same_shape("forward_diffuse", x0, eps);
    const double ab = sched.alpha_bar(sched.check(t));
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Array out(x0.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

Array forward_diffuse(const Array& x0, const SeqLayout& layout, std::span<const std::size_t> steps,
                      const Array& eps, const NoiseSchedule& sched) {
    require_same_shape("forward_diffuse", x0, eps);
    if (steps.size() != layout.sequences() || x0.rows() != layout.rows())
        throw NumericError("forward_diffuse: steps/layout do not match the batch");
    Array out(x0.shape());
    const std::size_t cols = x0.cols();
    for (std::size_t s = 0; s < layout.sequences(); ++s) {
        const double ab = sched.alpha_bar(sched.check(steps[s]));
        const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
        for (std::size_t i = layout.begin(s) * cols; i < layout.end(s) * cols; ++i) out[i] = a * x0[i] + b * eps[i];
    }
    return out;
}

Array posterior_mean(const Array& x_t, const Array& eps_hat, std::size_t t, const NoiseSchedule& sched) {
    require_same_shape("posterior_mean", x_t, eps_hat);
    const double coef = sched.beta(t) / std::sqrt(1.0 - sched.alpha_bar(t));
    const double inv = 1.0 / std::sqrt(sched.alpha(t));
    Array out(x_t.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = inv * (x_t[i] - coef * eps_hat[i]);
    return out;
}

LossResult training_loss(const NoisePredictor& model, const DiffusionBatch& batch,
                         std::span<const std::size_t> steps, const Array& eps, const NoiseSchedule& sched) {
    const std::size_t rows = batch.layout.rows();
    if (batch.x0.rank() != 2 || batch.x0.rows() != rows || batch.x0.cols() != kFeatureDim)
        throw NumericError("training_loss: x0 shape " + shape_string(batch.x0.shape()) + " does not match " +
                           std::to_string(rows) + " packed tokens");
    if (batch.tokens.size() != rows)
        throw NumericError("training_loss: " + std::to_string(batch.tokens.size()) +
                           " condition tokens for " + std::to_string(rows) + " feature rows");
    if (!batch.mask.empty() && batch.mask.size() != rows)
        throw NumericError("training_loss: mask length does not match the batch");

    const Array x_t = forward_diffuse(batch.x0, batch.layout, steps, eps, sched);

    Tape tape;
    Var cond = model.encode(tape, batch.tokens, batch.layout);
    Var eps_hat = model.denoise(tape, tape.constant(x_t), cond, batch.layout, steps);
    Var diff = ops::sub(eps_hat, tape.constant(eps));
    Var sq = ops::mul(diff, diff);

    double valid = static_cast<double>(rows);
    if (!batch.mask.empty()) {
        Array m(sq.shape());
        valid = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            valid += batch.mask[r];
            for (std::size_t c = 0; c < kFeatureDim; ++c) m(r, c) = batch.mask[r];
        }
        if (valid <= 0.0) throw NumericError("training_loss: every row is masked");
        sq = ops::mul(sq, tape.constant(std::move(m)));
    }
    Var loss = ops::scale(ops::sum(sq), 1.0 / (valid * static_cast<double>(kFeatureDim)));

    LossResult out;
    out.loss = loss.value().item();
    out.grads = tape.backward(loss, model.params());
    return out;
}

Array reverse_step(const NoisePredictor& model, const Array& x_t, const Array& cond, const SeqLayout& layout,
                   std::size_t t, const Array& z, const NoiseSchedule& sched) {
    require_same_shape("reverse_step", x_t, z);
    const double sigma = sched.sigma(t);
    Tape tape(Tape::Mode::inference);
    const std::vector<std::size_t> steps(layout.sequences(), t);
    Var eps_hat = model.denoise(tape, tape.constant(x_t), tape.constant(cond), layout, steps);
    Array out = posterior_mean(x_t, eps_hat.value(), t, sched);
    if (t > 1)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma * z[i];
    return out;
}

Array sample_model_space(const NoisePredictor& model, std::span<const std::size_t> tokens, const SeqLayout& layout,
                         const NoiseSchedule& sched, Rng& rng) {
    if (tokens.size() != layout.rows()) throw NumericError("sample: token count does not match layout");
    Array cond = [&] {
        Tape tape(Tape::Mode::inference);
        return model.encode(tape, tokens, layout).value();
    }();
    const Shape shape{layout.rows(), kFeatureDim};
    Array x = gaussian(rng, shape);
    for (std::size_t t = sched.steps(); t >= 1; --t) {
        const Array z = t > 1 ? gaussian(rng, shape) : Array(shape, 0.0);
        x = reverse_step(model, x, cond, layout, t, z, sched);
    }
    return x;
}

} // namespace prosody
