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

#include "prosody/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace prosody {

BinningSpec BinningSpec::covering(std::span<const double> values, std::size_t bins) {
    if (values.empty()) throw Error("binning needs at least one value");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    BinningSpec s{*lo, *hi, bins};
    // A degenerate pool still needs a non-empty range.
    if (s.hi == s.lo) {
        s.lo -= 0.5;
        s.hi += 0.5;
    }
    s.validate();
    return s;
}

void BinningSpec::validate() const {
    if (bins < 2) throw Error("bin count must be >= 2");
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw Error("bin edges must be strictly increasing");
}

std::size_t BinningSpec::bin_of(double v) const {
    if (!(v > lo)) return 0;
    if (v >= hi) return bins - 1;
    const auto i = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    return std::min(i, bins - 1);
}

double BinningSpec::edge(std::size_t i) const {
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
}

std::vector<double> quantize(std::span<const double> values, const BinningSpec& spec) {
    spec.validate();
    if (values.empty()) throw Error("quantize: empty input");
    std::vector<double> hist(spec.bins, 0.0);
    for (double v : values) hist[spec.bin_of(v)] += 1.0;
    const double n = static_cast<double>(values.size());
    for (auto& h : hist) h /= n;
    return hist;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty())
        throw Error("js_divergence: length mismatch (" + std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw Error("js_divergence: negative probability");
        sp += p[i];
        sq += q[i];
    }
    if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) throw Error("js_divergence: inputs must sum to 1");
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
    }
    return std::clamp(js, 0.0, std::log(2.0));
}

std::vector<double> mode_coverage(std::span<const double> samples, std::span<const Mode> modes) {
    if (modes.empty()) throw Error("mode_coverage: no modes given");
    if (samples.empty()) throw Error("mode_coverage: no samples");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (!(modes[i].radius > 0.0)) throw Error("mode_coverage: radius must be positive");
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(modes[i].center - modes[j].center) < modes[i].radius + modes[j].radius)
                throw Error("mode_coverage: modes " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
    }
    std::vector<double> occ(modes.size() + 1, 0.0);
    for (double s : samples) {
        std::size_t slot = modes.size();
        for (std::size_t i = 0; i < modes.size(); ++i)
            if (std::abs(s - modes[i].center) <= modes[i].radius) {
                slot = i;
                break;
            }
        occ[slot] += 1.0;
    }
    for (auto& o : occ) o /= static_cast<double>(samples.size());
    return occ;
}

} // namespace prosody
