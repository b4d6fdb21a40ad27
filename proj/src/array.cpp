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

#include "prosody/array.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace prosody {

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

static void check_shape(const Shape& shape) {
    if (shape.empty()) throw NumericError("array shape must have rank >= 1");
    for (auto e : shape)
        if (e == 0) throw NumericError("array extents must be positive, got " + shape_string(shape));
}

Array::Array(Shape shape, double fill) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
}

Array::Array(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    check_shape(shape_);
    if (shape_size(shape_) != data_.size())
        throw NumericError("array data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
    return Array({rows, cols}, std::vector<double>(values));
}

Array Array::identity(std::size_t n) {
    Array a({n, n});
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
}

std::size_t Array::rows() const noexcept {
    if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
    return data_.size() / shape_.back();
}

std::size_t Array::cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }

double Array::item() const {
    if (data_.size() != 1) throw NumericError("item() on array of shape " + shape_string(shape_));
    return data_[0];
}

bool Array::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Array::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Array Array::reshaped(Shape shape) const {
    check_shape(shape);
    if (shape_size(shape) != data_.size())
        throw NumericError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    Array out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

} // namespace prosody
