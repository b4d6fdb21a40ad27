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
#include <span>
#include <vector>

#include "prosody/baseline.hpp"
#include "prosody/data.hpp"
#include "prosody/denoiser.hpp"
#include "prosody/optimizer.hpp"

namespace prosody {

/// A token sequence with its model-space target [len, 3].
struct TrainingExample {
    TokenSequence tokens;
    Array x0;
};

std::vector<TrainingExample> make_examples(const Corpus& corpus, const NormStats& stats, Split split = Split::train);

struct TrainOptions {
    std::size_t batch_size = 16;
    AdamConfig adam;
    /// Decay of the parameter moving average; 0 disables it.
    double ema_decay = 0.0;
};

/// Mini-batch assembly shared by both trainers: `batch_size` examples drawn
/// uniformly with replacement, packed in draw order.
struct PackedBatch {
    Array x0;
    std::vector<std::size_t> tokens;
    SeqLayout layout;
};
PackedBatch draw_batch(std::span<const TrainingExample> data, std::size_t batch_size, Rng& rng);

/// Noise-prediction training: per sequence t ~ U{1..T}, eps ~ N(0, I), one Adam step.
class DdpmTrainer {
public:
    DdpmTrainer(DenoiserModel& model, NoiseSchedule sched, TrainOptions options, std::uint64_t seed);

    /// Returns the batch loss before the update.
    double step(std::span<const TrainingExample> data);

    std::uint64_t steps_done() const noexcept { return optimizer_.steps(); }
    Rng& rng() noexcept { return rng_; }
    Adam& optimizer() noexcept { return optimizer_; }
    ParamAverage& average() noexcept { return average_; }
    const NoiseSchedule& schedule() const noexcept { return sched_; }

private:
    DenoiserModel& model_;
    NoiseSchedule sched_;
    TrainOptions options_;
    Adam optimizer_;
    ParamAverage average_;
    Rng rng_;
};

/// MSE regression of the baseline with dropout active.
class BaselineTrainer {
public:
    BaselineTrainer(BaselineModel& model, TrainOptions options, std::uint64_t seed);

    double step(std::span<const TrainingExample> data);

    std::uint64_t steps_done() const noexcept { return optimizer_.steps(); }
    Rng& rng() noexcept { return rng_; }
    Adam& optimizer() noexcept { return optimizer_; }
    ParamAverage& average() noexcept { return average_; }

private:
    BaselineModel& model_;
    TrainOptions options_;
    Adam optimizer_;
    ParamAverage average_;
    Rng rng_;
};

} // namespace prosody
