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

#include "prosody/rng.hpp"

#include <sstream>

namespace prosody {

std::string Rng::state() const {
    std::ostringstream os;
    os << seed_ << ' ' << engine_ << ' ' << normal_;
    return os.str();
}

void Rng::restore(const std::string& state) {
    std::istringstream is(state);
    is >> seed_ >> engine_ >> normal_;
    if (!is) throw Error("malformed rng state");
}

Array gaussian(Rng& rng, const Shape& shape) {
    Array out(shape);
    for (auto& v : out.values()) v = rng.normal();
    return out;
}

} // namespace prosody
