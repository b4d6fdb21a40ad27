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
#include <string>

#include "prosody/tape.hpp"

namespace prosody::nn {

/// Weight initialization for new layers.
enum class Init { fan_in_uniform, zeros };

/// Fills an array with U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Array fan_in_uniform(const Shape& shape, std::size_t fan_in, Rng& rng);

/// y = x W + b, W: [in, out].
struct Linear {
    ParamId weight = 0;
    ParamId bias = 0;
    std::size_t in = 0;
    std::size_t out = 0;

    static Linear create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                         Init init = Init::fan_in_uniform);
    static std::size_t parameter_count(std::size_t in, std::size_t out) { return in * out + out; }

    Var operator()(Tape& tape, const ParamStore& store, Var x) const;
};

/// Same-length dilated convolution over a packed batch.
struct Conv1d {
    ParamId weight = 0;
    ParamId bias = 0;
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t kernel = 3;
    std::size_t dilation = 1;

    static Conv1d create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                         std::size_t kernel, std::size_t dilation, Rng& rng);
    static std::size_t parameter_count(std::size_t in, std::size_t out, std::size_t kernel) {
        return kernel * in * out + out;
    }

    Var operator()(Tape& tape, const ParamStore& store, Var x, const SeqLayout& layout) const;
};

struct LayerNorm {
    ParamId gain = 0;
    ParamId bias = 0;
    std::size_t dim = 0;

    static LayerNorm create(ParamStore& store, const std::string& name, std::size_t dim);
    static std::size_t parameter_count(std::size_t dim) { return 2 * dim; }

    Var operator()(Tape& tape, const ParamStore& store, Var x) const;
};

struct Embedding {
    ParamId table = 0;
    std::size_t vocab = 0;
    std::size_t dim = 0;

    static Embedding create(ParamStore& store, const std::string& name, std::size_t vocab, std::size_t dim,
                            Rng& rng);
    static std::size_t parameter_count(std::size_t vocab, std::size_t dim) { return vocab * dim; }

    Var operator()(Tape& tape, const ParamStore& store, std::span<const std::size_t> ids) const;
};

} // namespace prosody::nn
