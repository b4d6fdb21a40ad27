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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "prosody/denoiser.hpp"
#include "prosody/diffusion.hpp"
#include "prosody/training.hpp"

namespace prosody {
namespace {

const NoiseSchedule kSched = NoiseSchedule::linear(500, 1e-4, 0.06);

// Returns a fixed array plus a zero-valued bias so the loss still reaches a parameter.
class FixedPredictor final : public NoisePredictor {
public:
    explicit FixedPredictor(Array out) : out_(std::move(out)) { bias_ = store_.add("bias", Array({1, 3})); }

    const ParamStore& params() const override { return store_; }
    Var encode(Tape& tape, std::span<const std::size_t> tokens, const SeqLayout&) const override {
        return tape.constant(Array({tokens.size(), 1}));
    }
    Var denoise(Tape& tape, Var x_t, Var, const SeqLayout&, std::span<const std::size_t>) const override {
        ++calls;
        Array out = out_.size() == x_t.value().size() ? out_ : Array(x_t.value().shape());
        return ops::add(tape.constant(std::move(out)), tape.param(store_, bias_));
    }

    mutable std::size_t calls = 0;

private:
    Array out_;
    ParamStore store_;
    ParamId bias_ = 0;
};

DiffusionBatch make_batch(std::vector<std::size_t> lengths, Rng& rng) {
    DiffusionBatch b;
    b.layout = SeqLayout::from_lengths(lengths);
    b.x0 = gaussian(rng, {b.layout.rows(), 3});
    for (std::size_t r = 0; r < b.layout.rows(); ++r) b.tokens.push_back(r % 5);
    return b;
}

TEST(Schedule, DefaultEndpointsAndInvariants) {
    EXPECT_DOUBLE_EQ(kSched.beta(1), 1e-4);
    EXPECT_DOUBLE_EQ(kSched.beta(500), 0.06);
    EXPECT_EQ(kSched.steps(), 500u);
    EXPECT_EQ(kSched.alpha_bar(0), 1.0);
    EXPECT_EQ(kSched.sigma(1), 0.0);
    for (std::size_t t = 1; t <= 500; ++t) {
        EXPECT_GT(kSched.beta(t), 0.0);
        EXPECT_LT(kSched.alpha_bar(t), kSched.alpha_bar(t - 1));
        if (t >= 2) {
            EXPECT_GE(kSched.beta(t), kSched.beta(t - 1));
            EXPECT_GT(kSched.sigma(t), 0.0);
        }
    }
    EXPECT_LT(kSched.alpha_bar(500), 1e-6);
}

TEST(Schedule, TablesMatchIndependentRecomputation) {
    // Long-double product and the closed-form posterior variance.
    long double abar = 1.0L, prev = 1.0L;
    for (std::size_t t = 1; t <= 500; ++t) {
        const long double beta = 1e-4L + (static_cast<long double>(t) - 1) / 499.0L * (0.06L - 1e-4L);
        EXPECT_NEAR(kSched.beta(t), static_cast<double>(beta), 1e-15);
        EXPECT_NEAR(kSched.alpha(t), static_cast<double>(1.0L - beta), 1e-15);
        prev = abar;
        abar *= 1.0L - beta;
        EXPECT_NEAR(kSched.alpha_bar(t) / static_cast<double>(abar), 1.0, 1e-12);
        const long double var = (1.0L - prev) / (1.0L - abar) * beta;
        EXPECT_NEAR(kSched.sigma(t), std::sqrt(static_cast<double>(var)), 1e-12);
    }
    // log-sum estimate of the final product is about e^-15.3
    EXPECT_NEAR(std::log(kSched.alpha_bar(500)), -15.3, 0.1);
}

TEST(Schedule, RejectsBadArguments) {
    EXPECT_THROW(NoiseSchedule::linear(1, 1e-4, 0.06), Error);
    EXPECT_THROW(NoiseSchedule::linear(10, 0.0, 0.06), Error);
    EXPECT_THROW(NoiseSchedule::linear(10, 0.1, 0.05), Error);
    EXPECT_THROW(NoiseSchedule::linear(10, 1e-4, 1.0), Error);
    EXPECT_THROW(kSched.beta(0), Error);
    EXPECT_THROW(kSched.sigma(501), Error);
    EXPECT_NO_THROW(NoiseSchedule::linear(10, 0.02, 0.02));
}

TEST(ForwardDiffuse, ZeroNoiseScalesInput) {
    Rng rng(1);
    const Array x0 = gaussian(rng, {4, 3});
    const Array out = forward_diffuse(x0, 200, Array({4, 3}), kSched);
    for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_DOUBLE_EQ(out[i], std::sqrt(kSched.alpha_bar(200)) * x0[i]);
}

TEST(ForwardDiffuse, FirstStepArithmetic) {
    const Array out = forward_diffuse(Array({1, 3}, 1.0), 1, Array({1, 3}, 1.0), kSched);
    EXPECT_NEAR(out[0], std::sqrt(0.9999) + std::sqrt(0.0001), 1e-15);
    EXPECT_NEAR(out[0], 1.00995, 1e-5);
}

TEST(ForwardDiffuse, RangeAndShapeErrors) {
    EXPECT_THROW(forward_diffuse(Array({2, 3}), 0, Array({2, 3}), kSched), Error);
    EXPECT_THROW(forward_diffuse(Array({2, 3}), 501, Array({2, 3}), kSched), Error);
    EXPECT_THROW(forward_diffuse(Array({2, 3}), 5, Array({3, 3}), kSched), Error);
}

TEST(ForwardDiffuse, MonteCarloMarginal) {
    // x0 ~ N(0.7, 0.5^2) per element; x_t moments follow the closed form.
    Rng rng(7);
    const std::size_t n = 100000, t = 120;
    Array x0 = gaussian(rng, {n, 1});
    for (auto& v : x0.values()) v = 0.7 + 0.5 * v;
    const Array xt = forward_diffuse(x0, t, gaussian(rng, {n, 1}), kSched);
    double m = 0, s = 0;
    for (double v : xt.values()) m += v;
    m /= n;
    for (double v : xt.values()) s += (v - m) * (v - m);
    s /= n - 1;
    const double ab = kSched.alpha_bar(t);
    const double var = ab * 0.25 + (1 - ab);
    EXPECT_NEAR(m, std::sqrt(ab) * 0.7, 3 * std::sqrt(var / n));
    EXPECT_NEAR(s, var, 3 * var * std::sqrt(2.0 / n));
}

TEST(ForwardDiffuse, PerSequenceSteps) {
    Rng rng(3);
    const auto layout = SeqLayout::from_lengths(std::vector<std::size_t>{2, 3});
    const Array x0 = gaussian(rng, {5, 3}), eps = gaussian(rng, {5, 3});
    const std::vector<std::size_t> steps{10, 400};
    const Array out = forward_diffuse(x0, layout, steps, eps, kSched);
    for (std::size_t r = 0; r < 5; ++r) {
        const std::size_t t = r < 2 ? 10 : 400;
        for (std::size_t c = 0; c < 3; ++c)
            EXPECT_DOUBLE_EQ(out(r, c), std::sqrt(kSched.alpha_bar(t)) * x0(r, c) +
                                            std::sqrt(1 - kSched.alpha_bar(t)) * eps(r, c));
    }
}

TEST(PosteriorMean, ZeroPrediction) {
    Rng rng(2);
    const Array xt = gaussian(rng, {3, 3});
    const Array mu = posterior_mean(xt, Array({3, 3}), 77, kSched);
    for (std::size_t i = 0; i < xt.size(); ++i) EXPECT_DOUBLE_EQ(mu[i], xt[i] / std::sqrt(kSched.alpha(77)));
}

TEST(PosteriorMean, FirstStepRecoversCleanSample) {
    Rng rng(4);
    const Array x0 = gaussian(rng, {6, 3}), eps = gaussian(rng, {6, 3});
    const Array mu = posterior_mean(forward_diffuse(x0, 1, eps, kSched), eps, 1, kSched);
    for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_NEAR(mu[i], x0[i], 1e-10);
}

TEST(PosteriorMean, LastStepArithmetic) {
    const double b = kSched.beta(500);
    const double expected = (1 - b / std::sqrt(1 - kSched.alpha_bar(500))) / std::sqrt(kSched.alpha(500));
    const Array mu = posterior_mean(Array({1, 3}, 1.0), Array({1, 3}, 1.0), 500, kSched);
    EXPECT_NEAR(mu[0], expected, 1e-14);
    EXPECT_THROW(posterior_mean(Array({1, 3}), Array({1, 3}), 0, kSched), Error);
}

TEST(TrainingLoss, PerfectPredictorGivesZero) {
    Rng rng(5);
    DiffusionBatch b = make_batch({3, 4}, rng);
    const Array eps = gaussian(rng, b.x0.shape());
    FixedPredictor model(eps);
    const std::vector<std::size_t> steps{5, 300};
    const LossResult res = training_loss(model, b, steps, eps, kSched);
    EXPECT_EQ(res.loss, 0.0);
    for (double g : res.grads[0].values()) EXPECT_EQ(g, 0.0);
}

TEST(TrainingLoss, ZeroPredictorGivesUnitLoss) {
    Rng rng(6);
    DiffusionBatch b = make_batch(std::vector<std::size_t>(2000, 20), rng);
    const Array eps = gaussian(rng, b.x0.shape());
    FixedPredictor model(Array{});
    std::vector<std::size_t> steps(2000, 250);
    const LossResult res = training_loss(model, b, steps, eps, kSched);
    const double n = static_cast<double>(eps.size());
    EXPECT_NEAR(res.loss, 1.0, 3 * std::sqrt(2.0 / n));
    // d loss / d bias_c = -2 mean over rows of eps_c / 3
    for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0;
        for (std::size_t r = 0; r < eps.rows(); ++r) acc += eps(r, c);
        EXPECT_NEAR(res.grads[0][c], -2 * acc / n, 1e-12);
    }
}

TEST(TrainingLoss, MaskExcludesRows) {
    Rng rng(8);
    DiffusionBatch full = make_batch({3, 2}, rng);
    const Array eps = gaussian(rng, full.x0.shape());
    FixedPredictor model(Array{});
    const std::vector<std::size_t> steps{100, 100};
    full.mask = {1, 1, 0, 1, 0};
    const double masked = training_loss(model, full, steps, eps, kSched).loss;
    double acc = 0;
    for (std::size_t r : {0u, 1u, 3u})
        for (std::size_t c = 0; c < 3; ++c) acc += eps(r, c) * eps(r, c);
    EXPECT_NEAR(masked, acc / 9.0, 1e-14);

    full.mask.assign(5, 0.0);
    EXPECT_THROW(training_loss(model, full, steps, eps, kSched), Error);
}

TEST(TrainingLoss, ShapeErrors) {
    Rng rng(9);
    DiffusionBatch b = make_batch({3}, rng);
    FixedPredictor model(Array{});
    const std::vector<std::size_t> steps{10};
    EXPECT_THROW(training_loss(model, b, steps, Array({2, 3}), kSched), Error);
    b.tokens.pop_back();
    EXPECT_THROW(training_loss(model, b, steps, gaussian(rng, {3, 3}), kSched), Error);
    b.tokens.push_back(0);
    const std::vector<std::size_t> bad{0};
    EXPECT_THROW(training_loss(model, b, bad, gaussian(rng, {3, 3}), kSched), Error);
}

DenoiserConfig tiny_config() {
    DenoiserConfig cfg;
    cfg.channels = 4;
    cfg.layers = 2;
    cfg.dilation_cycle = {1, 2};
    cfg.step_embed_dim = 4;
    cfg.step_hidden = 6;
    cfg.encoder = {5, 3, 3};
    return cfg;
}

TEST(TrainingLoss, FullLossMatchesFiniteDifferences) {
    Rng rng(10);
    DenoiserModel model(tiny_config(), rng);
    // Random values everywhere, including the zero-initialized head, so every path is exercised.
    ParamStore& store = model.mutable_params();
    for (ParamId p = 0; p < store.size(); ++p)
        for (auto& v : store.value(p).values()) v = 0.5 * rng.normal();
    DiffusionBatch b = make_batch({4, 1, 3}, rng);
    const Array eps = gaussian(rng, b.x0.shape());
    const std::vector<std::size_t> steps{3, 250, 499};
    const LossResult res = training_loss(model, b, steps, eps, kSched);
    const auto check = testing::check_gradients(store, res.grads, [&] {
        return training_loss(model, b, steps, eps, kSched).loss;
    });
    EXPECT_TRUE(check.ok) << check.first_failure;
    EXPECT_GT(check.checked, 100u);
}

TEST(ReverseStep, FirstStepIgnoresNoise) {
    Rng rng(11);
    FixedPredictor model(Array{});
    const auto layout = SeqLayout::single(4);
    const Array xt = gaussian(rng, {4, 3});
    const Array a = reverse_step(model, xt, Array({4, 1}), layout, 1, gaussian(rng, {4, 3}), kSched);
    const Array b = reverse_step(model, xt, Array({4, 1}), layout, 1, gaussian(rng, {4, 3}), kSched);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, posterior_mean(xt, Array({4, 3}), 1, kSched));
    EXPECT_THROW(reverse_step(model, xt, Array({4, 1}), layout, 0, xt, kSched), Error);
    EXPECT_THROW(reverse_step(model, xt, Array({4, 1}), layout, 501, xt, kSched), Error);
}

TEST(ReverseStep, NoiseVarianceIsSigmaSquared) {
    Rng rng(12);
    FixedPredictor model(Array{});
    const std::size_t n = 50000, t = 40;
    const auto layout = SeqLayout::single(n);
    const Array xt({n, 3}, 0.3);
    const Array out = reverse_step(model, xt, Array({n, 1}), layout, t, gaussian(rng, {n, 3}), kSched);
    const double mu = 0.3 / std::sqrt(kSched.alpha(t));
    double m = 0, s = 0;
    for (double v : out.values()) m += v;
    m /= out.size();
    for (double v : out.values()) s += (v - m) * (v - m);
    s /= out.size() - 1;
    const double var = kSched.sigma(t) * kSched.sigma(t);
    const double N = static_cast<double>(out.size());
    EXPECT_NEAR(m, mu, 3 * std::sqrt(var / N));
    EXPECT_NEAR(s, var, 3 * var * std::sqrt(2.0 / N));
}

TEST(ReverseStep, DeterministicForFixedInputs) {
    Rng init(13);
    DenoiserModel model(tiny_config(), init);
    const std::vector<std::size_t> tokens{0, 1, 2, 3, 4};
    const auto layout = SeqLayout::single(5);
    const auto run = [&] {
        Rng rng(99);
        Tape tape(Tape::Mode::inference);
        const Array cond = model.encode(tape, tokens, layout).value();
        const Array xt = gaussian(rng, {5, 3});
        return reverse_step(model, xt, cond, layout, 321, gaussian(rng, {5, 3}), kSched);
    };
    EXPECT_EQ(run(), run());
}

TEST(Sampling, CallsDenoiserExactlyTTimes) {
    const NoiseSchedule sched = NoiseSchedule::linear(37, 1e-3, 0.2);
    FixedPredictor model(Array{});
    Rng rng(14);
    const std::vector<std::size_t> tokens{0, 1, 2};
    const Array out = sample_model_space(model, tokens, SeqLayout::single(3), sched, rng);
    EXPECT_EQ(model.calls, 37u);
    EXPECT_EQ(out.shape(), (Shape{3, 3}));
}

TEST(Sampling, SeedDeterminismAndDiversity) {
    Rng init(15);
    DenoiserModel model(tiny_config(), init);
    const NoiseSchedule sched = NoiseSchedule::linear(50, 1e-3, 0.2);
    const std::vector<std::size_t> tokens{1, 2, 3, 4};
    const auto layout = SeqLayout::single(4);
    Rng a(1), b(1), c(2);
    const Array xa = sample_model_space(model, tokens, layout, sched, a);
    EXPECT_EQ(xa, sample_model_space(model, tokens, layout, sched, b));
    EXPECT_NE(xa, sample_model_space(model, tokens, layout, sched, c));
}

TEST(Sampling, PointMassTrainingConverges) {
    // Every training target is the same vector v; the trained chain must land near it.
    Rng init(16);
    DenoiserConfig cfg = tiny_config();
    cfg.channels = 16;
    cfg.step_embed_dim = 16;
    cfg.step_hidden = 32;
    cfg.encoder = {1, 8, 3};
    DenoiserModel model(cfg, init);
    const std::array<double, 3> v{0.8, -0.5, 0.3};
    std::vector<TrainingExample> data(1);
    data[0].tokens.assign(6, 0);
    data[0].x0 = Array({6, 3});
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 3; ++c) data[0].x0(r, c) = v[c];
    TrainOptions opts;
    opts.batch_size = 8;
    opts.adam.learning_rate = 3e-3;
    DdpmTrainer trainer(model, kSched, opts, 17);
    for (int s = 0; s < 1500; ++s) trainer.step(data);

    Rng rng(18);
    const std::vector<std::size_t> tokens(6, 0);
    const Array out = sample_model_space(model, tokens, SeqLayout::single(6), kSched, rng);
    for (std::size_t r = 0; r < 6; ++r) {
        double d2 = 0;
        for (std::size_t c = 0; c < 3; ++c) d2 += (out(r, c) - v[c]) * (out(r, c) - v[c]);
        EXPECT_LT(std::sqrt(d2), 0.1) << "row " << r;
    }
}

} // namespace
} // namespace prosody
