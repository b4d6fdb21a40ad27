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

#include "prosody/training.hpp"

#include <algorithm>
#include <cmath>

namespace prosody {

std::vector<TrainingExample> make_examples(const Corpus& corpus, const NormStats& stats, Split split) {
    std::vector<TrainingExample> out;
    for (const Utterance* u : corpus.select(split)) out.push_back({u->tokens, normalize(to_features(u->prosody), stats)});
    return out;
}

PackedBatch draw_batch(std::span<const TrainingExample> data, std::size_t batch_size, Rng& rng) {
    if (data.empty()) throw Error("training data is empty");
    if (batch_size == 0) throw Error("batch size must be >= 1");
    std::vector<std::size_t> picks(batch_size), lengths(batch_size);
    std::size_t rows = 0;
    for (std::size_t b = 0; b < batch_size; ++b) {
        picks[b] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(data.size()) - 1));
        lengths[b] = data[picks[b]].tokens.size();
        rows += lengths[b];
    }
    PackedBatch batch;
    batch.layout = SeqLayout::from_lengths(lengths);
    batch.x0 = Array({rows, kFeatureDim});
    batch.tokens.reserve(rows);
    std::size_t r = 0;
    for (auto p : picks) {
        const auto& ex = data[p];
        std::copy_n(ex.x0.data(), ex.x0.size(), batch.x0.data() + r * kFeatureDim);
        batch.tokens.insert(batch.tokens.end(), ex.tokens.begin(), ex.tokens.end());
        r += ex.tokens.size();
    }
    return batch;
}

DdpmTrainer::DdpmTrainer(DenoiserModel& model, NoiseSchedule sched, TrainOptions options, std::uint64_t seed)
    : model_(model),
      sched_(std::move(sched)),
      options_(options),
      optimizer_(options.adam, model.params()),
      average_(options.ema_decay, model.params()),
      rng_(seed) {}

double DdpmTrainer::step(std::span<const TrainingExample> data) {
    PackedBatch batch = draw_batch(data, options_.batch_size, rng_);
    std::vector<std::size_t> steps(batch.layout.sequences());
    for (auto& t : steps) t = static_cast<std::size_t>(rng_.uniform_int(1, static_cast<long>(sched_.steps())));
    const Array eps = gaussian(rng_, batch.x0.shape());
    const DiffusionBatch db{std::move(batch.x0), std::move(batch.tokens), batch.layout, {}};
    LossResult res = training_loss(model_, db, steps, eps, sched_);
    if (!std::isfinite(res.loss)) throw NumericError("training loss is not finite");
    optimizer_.step(model_.mutable_params(), res.grads);
    average_.update(model_.params(), optimizer_.steps());
    return res.loss;
}

BaselineTrainer::BaselineTrainer(BaselineModel& model, TrainOptions options, std::uint64_t seed)
    : model_(model),
      options_(options),
      optimizer_(options.adam, model.params()),
      average_(options.ema_decay, model.params()),
      rng_(seed) {}

double BaselineTrainer::step(std::span<const TrainingExample> data) {
    PackedBatch batch = draw_batch(data, options_.batch_size, rng_);
    LossResult res = baseline_train_step(model_, batch.tokens, batch.layout, batch.x0, {}, rng_, true);
    if (!std::isfinite(res.loss)) throw NumericError("training loss is not finite");
    optimizer_.step(model_.mutable_params(), res.grads);
    average_.update(model_.params(), optimizer_.steps());
    return res.loss;
}

} // namespace prosody
