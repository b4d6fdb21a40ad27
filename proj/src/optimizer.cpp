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

#include "prosody/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace prosody {

Adam::Adam(AdamConfig config, const ParamStore& store) : config_(config) {
    for (ParamId p = 0; p < store.size(); ++p) {
        m_.emplace_back(store.value(p).shape(), 0.0);
        v_.emplace_back(store.value(p).shape(), 0.0);
    }
}

void Adam::step(ParamStore& store, const Gradients& grads) {
    if (grads.size() != store.size() || m_.size() != store.size())
        throw Error("adam: gradient count does not match parameter count");
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (ParamId p = 0; p < store.size(); ++p) {
        Array& w = store.value(p);
        const Array& g = grads[p];
        if (g.shape() != w.shape()) throw Error("adam: gradient shape mismatch for '" + store.name(p) + "'");
        Array& m = m_[p];
        Array& v = v_[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            w[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
        }
    }
}

ParamAverage::ParamAverage(double decay, const ParamStore& store) : decay_(decay) {
    if (!(decay >= 0.0 && decay < 1.0)) throw Error("parameter average decay must be in [0, 1)");
    if (!enabled()) return;
    for (ParamId p = 0; p < store.size(); ++p) values_.push_back(store.value(p));
}

void ParamAverage::update(const ParamStore& store, std::uint64_t updates) {
    if (!enabled()) return;
    if (values_.size() != store.size()) throw Error("parameter average does not match the parameter store");
    const double n = static_cast<double>(updates);
    const double d = std::min(decay_, (1.0 + n) / (10.0 + n));
    for (ParamId p = 0; p < store.size(); ++p) {
        const Array& w = store.value(p);
        Array& a = values_[p];
        for (std::size_t i = 0; i < w.size(); ++i) a[i] = d * a[i] + (1.0 - d) * w[i];
    }
}

} // namespace prosody
