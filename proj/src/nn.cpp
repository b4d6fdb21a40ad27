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

#include "prosody/nn.hpp"

#include <cmath>

namespace prosody::nn {

Array fan_in_uniform(const Shape& shape, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Array a(shape);
    for (auto& v : a.values()) v = (2.0 * rng.uniform() - 1.0) * bound;
    return a;
}

Linear Linear::create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                      Init init) {
    Linear l;
    l.in = in;
    l.out = out;
    Array w = init == Init::zeros ? Array({in, out}, 0.0) : fan_in_uniform({in, out}, in, rng);
    Array b = init == Init::zeros ? Array({out}, 0.0) : fan_in_uniform({out}, in, rng);
    l.weight = store.add(name + ".weight", std::move(w));
    l.bias = store.add(name + ".bias", std::move(b));
    return l;
}

Var Linear::operator()(Tape& tape, const ParamStore& store, Var x) const {
    return ops::add(ops::matmul(x, tape.param(store, weight)), tape.param(store, bias));
}

Conv1d Conv1d::create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                      std::size_t kernel, std::size_t dilation, Rng& rng) {
    Conv1d c;
    c.in = in;
    c.out = out;
    c.kernel = kernel;
    c.dilation = dilation;
    c.weight = store.add(name + ".weight", fan_in_uniform({kernel * in, out}, kernel * in, rng));
    c.bias = store.add(name + ".bias", fan_in_uniform({out}, kernel * in, rng));
    return c;
}

Var Conv1d::operator()(Tape& tape, const ParamStore& store, Var x, const SeqLayout& layout) const {
    return ops::conv1d_dilated(x, tape.param(store, weight), tape.param(store, bias), kernel, dilation, layout);
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, std::size_t dim) {
    LayerNorm n;
    n.dim = dim;
    n.gain = store.add(name + ".gain", Array({dim}, 1.0));
    n.bias = store.add(name + ".bias", Array({dim}, 0.0));
    return n;
}

Var LayerNorm::operator()(Tape& tape, const ParamStore& store, Var x) const {
    return ops::layer_norm(x, tape.param(store, gain), tape.param(store, bias));
}

Embedding Embedding::create(ParamStore& store, const std::string& name, std::size_t vocab, std::size_t dim,
                            Rng& rng) {
    Embedding e;
    e.vocab = vocab;
    e.dim = dim;
    Array table({vocab, dim});
    for (auto& v : table.values()) v = 2.0 * rng.uniform() - 1.0;
    e.table = store.add(name + ".table", std::move(table));
    return e;
}

Var Embedding::operator()(Tape& tape, const ParamStore& store, std::span<const std::size_t> ids) const {
    return ops::embed_lookup(tape.param(store, table), ids);
}

} // namespace prosody::nn
