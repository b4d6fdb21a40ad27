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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "prosody/array.hpp"
#include "prosody/rng.hpp"

namespace prosody {

using ParamId = std::size_t;

/// Named, ordered collection of trainable arrays. Ids are insertion indices.
class ParamStore {
public:
    ParamId add(std::string name, Array value);

    std::size_t size() const noexcept { return values_.size(); }
    std::size_t scalar_count() const noexcept;

    const Array& value(ParamId id) const { return values_.at(id); }
    Array& value(ParamId id) { return values_.at(id); }
    const std::string& name(ParamId id) const { return names_.at(id); }
    std::optional<ParamId> find(std::string_view name) const;

    friend bool operator==(const ParamStore&, const ParamStore&) = default;

private:
    std::vector<std::string> names_;
    std::vector<Array> values_;
};

/// One gradient array per parameter, indexed by ParamId.
using Gradients = std::vector<Array>;

/// Packed variable-length batch: sequence s occupies rows
/// [offsets[s], offsets[s+1]). Convolutions never mix rows across sequences.
class SeqLayout {
public:
    SeqLayout() : offsets_{0} {}
    static SeqLayout from_lengths(std::span<const std::size_t> lengths);
    static SeqLayout single(std::size_t length);

    std::size_t sequences() const noexcept { return offsets_.size() - 1; }
    std::size_t rows() const noexcept { return offsets_.back(); }
    std::size_t begin(std::size_t s) const { return offsets_[s]; }
    std::size_t end(std::size_t s) const { return offsets_[s + 1]; }
    std::size_t length(std::size_t s) const { return offsets_[s + 1] - offsets_[s]; }
    /// Sequence index for every row.
    std::vector<std::size_t> row_sequence() const;

    friend bool operator==(const SeqLayout&, const SeqLayout&) = default;

private:
    std::vector<std::size_t> offsets_;
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Array& value() const;
    const Shape& shape() const { return value().shape(); }
    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so reverse insertion order is a valid reverse topological order.
class Tape {
public:
    enum class Mode { record, inference };

    explicit Tape(Mode mode = Mode::record) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const noexcept { return mode_ == Mode::record; }
    std::size_t size() const noexcept { return nodes_.size(); }

    Var constant(Array value);
    /// Leaf bound to a parameter; the store must outlive the tape.
    Var param(const ParamStore& store, ParamId id);

    const Array& value(std::size_t id) const;

    /// Gradients of a scalar loss for every parameter in `store`; parameters
    /// not reachable from the loss get zero arrays.
    Gradients backward(Var loss, const ParamStore& store);

    using BackwardFn = std::function<void(Tape&, const Array& out_grad)>;

    /// Appends a primitive result. `backward` receives the node's gradient
    /// and accumulates into its inputs through `grad()`.
    Var push(const char* op, Array value, BackwardFn backward);
    /// Accumulator for node `id`, zero-initialized on first access.
    Array& grad(std::size_t id);

private:
    struct Node {
        const char* op;
        Array owned;
        const Array* borrowed = nullptr;
        std::optional<ParamId> param;
        BackwardFn backward;
        Array grad;
        bool has_grad = false;
    };

    Mode mode_;
    std::vector<Node> nodes_;
};

/// Dense primitives. Each records itself on the tape of its first operand.
namespace ops {

Var matmul(Var a, Var b);
/// Non-causal dilated 1-d convolution over a packed batch.
/// x: [rows, in], w: [kernel*in, out] (tap-major), b: [out]. Kernel must be odd;
/// padding is symmetric so output rows equal input rows.
Var conv1d_dilated(Var x, Var w, Var b, std::size_t kernel, std::size_t dilation,
                   const SeqLayout& layout);
/// Elementwise add; `b` may also be a row vector broadcast over rows of `a`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
/// x * sigmoid(x), composed from primitives.
Var silu(Var a);
/// Row-wise normalization over the last axis with learned gain and bias.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Inverted dropout; identity when `training` is false or rate is 0.
Var dropout(Var x, double rate, Rng& rng, bool training);
/// Gathers rows of `table` ([vocab, dim]) by id.
Var embed_lookup(Var table, std::span<const std::size_t> ids);
Var sum(Var a);
Var mean(Var a);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(std::span<const Var> parts);

} // namespace ops

} // namespace prosody
