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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "prosody/config.hpp"
#include "prosody/data.hpp"
#include "prosody/tape.hpp"

namespace prosody {

/// Complete training state of one model.
///
/// Binary layout, all integers and floats little-endian:
///   magic "PRSDCKPT", u32 version,
///   str kind, str config text, 6 x f64 normalization stats,
///   u64 training step, str rng state,
///   u32 parameter count, then per parameter: str name, u32 rank, rank x u64 extents, f64 values,
///   u64 optimizer step, u8 has moments, then (if set) first and second moments per parameter,
///   u8 has average, then (if set) the parameter moving average per parameter.
/// A str is a u64 byte length followed by the bytes.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    ModelKind kind = ModelKind::ddpm;
    std::string config;
    NormStats stats;
    std::uint64_t step = 0;
    std::string rng_state;
    ParamStore params;
    std::uint64_t optimizer_step = 0;
    std::vector<Array> first_moments;
    std::vector<Array> second_moments;
    /// Moving average of the parameters; when present it is what inference uses.
    std::vector<Array> averaged;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

/// Writes to a temporary file and renames it into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies values into `store` by name; names, count and shapes must all match.
void restore_params(ParamStore& store, const ParamStore& saved);

} // namespace prosody
