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

#include <span>
#include <string>
#include <vector>

#include "prosody/baseline.hpp"
#include "prosody/data.hpp"
#include "prosody/denoiser.hpp"

namespace prosody {

/// Anything that maps token sequences to physical prosody.
class ProsodyPredictor {
public:
    virtual ~ProsodyPredictor() = default;

    virtual std::string name() const = 0;
    /// Whether repeated predictions on one input may differ.
    virtual bool stochastic() const = 0;
    /// One prediction per input sequence.
    virtual std::vector<ProsodySequence> predict(std::span<const TokenSequence> inputs, Rng& rng) const = 0;
};

/// Packs token sequences into one batch.
SeqLayout pack(std::span<const TokenSequence> inputs, std::vector<std::size_t>& tokens);

/// Runs the reverse chain for one token sequence and maps the result back to physical units.
ProsodySequence sample(const NoisePredictor& model, const TokenSequence& tokens, const NoiseSchedule& sched,
                       const NormStats& stats, Rng& rng);

class DdpmPredictor final : public ProsodyPredictor {
public:
    /// Sequences are sampled in chunks of at most `max_rows` tokens.
    DdpmPredictor(const NoisePredictor& model, NoiseSchedule sched, NormStats stats, std::size_t max_rows = 1024)
        : model_(model), sched_(std::move(sched)), stats_(stats), max_rows_(max_rows) {}

    std::string name() const override { return "ddpm"; }
    bool stochastic() const override { return true; }
    std::vector<ProsodySequence> predict(std::span<const TokenSequence> inputs, Rng& rng) const override;

    const NoiseSchedule& schedule() const noexcept { return sched_; }

private:
    const NoisePredictor& model_;
    NoiseSchedule sched_;
    NormStats stats_;
    std::size_t max_rows_;
};

class BaselinePredictor final : public ProsodyPredictor {
public:
    BaselinePredictor(const BaselineModel& model, NormStats stats) : model_(model), stats_(stats) {}

    std::string name() const override { return "baseline"; }
    bool stochastic() const override { return false; }
    std::vector<ProsodySequence> predict(std::span<const TokenSequence> inputs, Rng& rng) const override;

private:
    const BaselineModel& model_;
    NormStats stats_;
};

/// Splits a packed [rows, 3] model-space array back into per-sequence prosody.
std::vector<ProsodySequence> unpack(const Array& model_space, const SeqLayout& layout, const NormStats& stats);

} // namespace prosody
