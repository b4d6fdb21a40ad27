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

#include "prosody/predictor.hpp"

#include <algorithm>

namespace prosody {

SeqLayout pack(std::span<const TokenSequence> inputs, std::vector<std::size_t>& tokens) {
    std::vector<std::size_t> lengths;
    tokens.clear();
    for (const auto& seq : inputs) {
        if (seq.empty()) throw Error("cannot predict prosody for an empty token sequence");
        lengths.push_back(seq.size());
        tokens.insert(tokens.end(), seq.begin(), seq.end());
    }
    return SeqLayout::from_lengths(lengths);
}

std::vector<ProsodySequence> unpack(const Array& model_space, const SeqLayout& layout, const NormStats& stats) {
    const Array features = denormalize(model_space, stats);
    std::vector<ProsodySequence> out;
    for (std::size_t s = 0; s < layout.sequences(); ++s) {
        Array part({layout.length(s), 3});
        std::copy_n(features.data() + layout.begin(s) * 3, part.size(), part.data());
        out.push_back(from_features(part));
    }
    return out;
}

ProsodySequence sample(const NoisePredictor& model, const TokenSequence& tokens, const NoiseSchedule& sched,
                       const NormStats& stats, Rng& rng) {
    const SeqLayout layout = SeqLayout::single(tokens.size());
    return unpack(sample_model_space(model, tokens, layout, sched, rng), layout, stats).front();
}

std::vector<ProsodySequence> DdpmPredictor::predict(std::span<const TokenSequence> inputs, Rng& rng) const {
    std::vector<ProsodySequence> out;
    std::size_t i = 0;
    while (i < inputs.size()) {
        std::size_t j = i, rows = 0;
        while (j < inputs.size() && (j == i || rows + inputs[j].size() <= max_rows_)) rows += inputs[j++].size();
        std::vector<std::size_t> tokens;
        const SeqLayout layout = pack(inputs.subspan(i, j - i), tokens);
        auto part = unpack(sample_model_space(model_, tokens, layout, sched_, rng), layout, stats_);
        std::move(part.begin(), part.end(), std::back_inserter(out));
        i = j;
    }
    return out;
}

std::vector<ProsodySequence> BaselinePredictor::predict(std::span<const TokenSequence> inputs, Rng&) const {
    std::vector<std::size_t> tokens;
    const SeqLayout layout = pack(inputs, tokens);
    return unpack(model_.predict(tokens, layout), layout, stats_);
}

} // namespace prosody
