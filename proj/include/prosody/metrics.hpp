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
#include <span>
#include <vector>

#include "prosody/array.hpp"

namespace prosody {

/// Uniform bins over [lo, hi]; values outside clamp to the edge bins.
struct BinningSpec {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t bins = 128;

    /// Range taken from the values themselves.
    static BinningSpec covering(std::span<const double> values, std::size_t bins = 128);
    void validate() const;
    std::size_t bin_of(double v) const;
    double edge(std::size_t i) const;

    friend bool operator==(const BinningSpec&, const BinningSpec&) = default;
};

/// Normalized histogram of `values`.
std::vector<double> quantize(std::span<const double> values, const BinningSpec& spec);

/// Jensen-Shannon divergence with natural log, in [0, ln 2].
double js_divergence(std::span<const double> p, std::span<const double> q);

struct Mode {
    double center = 0.0;
    double radius = 0.0;
};

/// Fraction of samples within each mode's radius, followed by the
/// out-of-mode fraction (size modes.size() + 1).
std::vector<double> mode_coverage(std::span<const double> samples, std::span<const Mode> modes);

} // namespace prosody
