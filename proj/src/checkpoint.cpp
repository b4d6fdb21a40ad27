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

#include "prosody/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace prosody {
namespace {

constexpr std::array<char, 8> kMagic{'P', 'R', 'S', 'D', 'C', 'K', 'P', 'T'};
// Guards against absurd lengths in corrupt files.
constexpr std::uint64_t kMaxString = 1u << 26;
constexpr std::uint64_t kMaxElements = 1u << 28;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void values(const Array& a) {
        for (double v : a.values()) f64(v);
    }

private:
    void le(std::uint64_t v, int bytes) {
        char buf[8];
        for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out_.write(buf, bytes);
    }
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint64_t n = u64();
        if (n > kMaxString) throw Error("checkpoint: string length out of range");
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }
    void values(Array& a) {
        for (auto& v : a.values()) v = f64();
    }
    void read(char* dst, std::uint64_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::uint64_t>(in_.gcount()) != n) throw Error("checkpoint: unexpected end of file");
    }

private:
    std::uint64_t le(int bytes) {
        unsigned char buf[8];
        read(reinterpret_cast<char*>(buf), static_cast<std::uint64_t>(bytes));
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }
    std::istream& in_;
};

} // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
    if (!c.first_moments.empty() &&
        (c.first_moments.size() != c.params.size() || c.second_moments.size() != c.params.size()))
        throw Error("checkpoint: optimizer moments do not match the parameters");
    if (!c.averaged.empty() && c.averaged.size() != c.params.size())
        throw Error("checkpoint: parameter average does not match the parameters");
    for (const auto* group : {&c.first_moments, &c.second_moments, &c.averaged})
        for (std::size_t p = 0; p < group->size(); ++p)
            if ((*group)[p].shape() != c.params.value(p).shape())
                throw Error("checkpoint: optimizer state shape differs for " + c.params.name(p));
    Writer w(out);
    out.write(kMagic.data(), kMagic.size());
    w.u32(Checkpoint::kVersion);
    w.str(to_string(c.kind));
    w.str(c.config);
    for (double v : c.stats.mean) w.f64(v);
    for (double v : c.stats.std) w.f64(v);
    w.u64(c.step);
    w.str(c.rng_state);
    w.u32(static_cast<std::uint32_t>(c.params.size()));
    for (ParamId p = 0; p < c.params.size(); ++p) {
        const Array& a = c.params.value(p);
        w.str(c.params.name(p));
        w.u32(static_cast<std::uint32_t>(a.rank()));
        for (auto e : a.shape()) w.u64(e);
        w.values(a);
    }
    w.u64(c.optimizer_step);
    w.u8(c.first_moments.empty() ? 0 : 1);
    for (const auto& m : c.first_moments) w.values(m);
    for (const auto& v : c.second_moments) w.values(v);
    w.u8(c.averaged.empty() ? 0 : 1);
    for (const auto& a : c.averaged) w.values(a);
    if (!out) throw Error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
    Reader r(in);
    std::array<char, 8> magic{};
    r.read(magic.data(), magic.size());
    if (magic != kMagic) throw Error("not a checkpoint file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != Checkpoint::kVersion)
        throw Error(fmt::format("unsupported checkpoint version {} (expected {})", version, Checkpoint::kVersion));
    Checkpoint c;
    c.kind = parse_model_kind(r.str());
    c.config = r.str();
    for (auto& v : c.stats.mean) v = r.f64();
    for (auto& v : c.stats.std) v = r.f64();
    c.step = r.u64();
    c.rng_state = r.str();
    const std::uint32_t n = r.u32();
    for (std::uint32_t p = 0; p < n; ++p) {
        std::string name = r.str();
        const std::uint32_t rank = r.u32();
        if (rank == 0 || rank > 8) throw Error("checkpoint: bad rank for " + name);
        Shape shape(rank);
        std::uint64_t total = 1;
        for (auto& e : shape) {
            e = r.u64();
            total *= e;
            if (e == 0 || total > kMaxElements) throw Error("checkpoint: bad shape for " + name);
        }
        Array a(shape);
        r.values(a);
        c.params.add(std::move(name), std::move(a));
    }
    c.optimizer_step = r.u64();
    if (r.u8() != 0) {
        for (auto* moments : {&c.first_moments, &c.second_moments})
            for (ParamId p = 0; p < c.params.size(); ++p) {
                Array a(c.params.value(p).shape());
                r.values(a);
                moments->push_back(std::move(a));
            }
    }
    if (r.u8() != 0) {
        for (ParamId p = 0; p < c.params.size(); ++p) {
            Array a(c.params.value(p).shape());
            r.values(a);
            c.averaged.push_back(std::move(a));
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) throw Error("checkpoint: trailing bytes after the parameter average");
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write checkpoint " + tmp.string());
        write_checkpoint(out, ckpt);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    try {
        return read_checkpoint(in);
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void restore_params(ParamStore& store, const ParamStore& saved) {
    if (store.size() != saved.size())
        throw Error(fmt::format("checkpoint has {} parameters, model expects {}", saved.size(), store.size()));
    for (ParamId p = 0; p < store.size(); ++p) {
        if (store.name(p) != saved.name(p))
            throw Error(fmt::format("checkpoint parameter {} is '{}', model expects '{}'", p, saved.name(p), store.name(p)));
        if (store.value(p).shape() != saved.value(p).shape())
            throw Error(fmt::format("checkpoint parameter '{}' has shape {}, model expects {}", saved.name(p),
                                    shape_string(saved.value(p).shape()), shape_string(store.value(p).shape())));
        store.value(p) = saved.value(p);
    }
}

} // namespace prosody
