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

#include "prosody/tape.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace prosody {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

MapMat as_mat(Array& a) {
    return MapMat(a.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}
CMapMat as_mat(const Array& a) {
    return CMapMat(a.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
    throw NumericError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return {rows, cols}; }

} // namespace

// --- ParamStore ---------------------------------------------------------

ParamId ParamStore::add(std::string name, Array value) {
    if (find(name)) throw Error("duplicate parameter name '" + name + "'");
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
}

std::size_t ParamStore::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

std::optional<ParamId> ParamStore::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    return std::nullopt;
}

// --- SeqLayout ----------------------------------------------------------

SeqLayout SeqLayout::from_lengths(std::span<const std::size_t> lengths) {
    SeqLayout l;
    for (auto n : lengths) {
        if (n == 0) throw Error("sequence length must be >= 1");
        l.offsets_.push_back(l.offsets_.back() + n);
    }
    return l;
}

SeqLayout SeqLayout::single(std::size_t length) {
    const std::size_t lengths[] = {length};
    return from_lengths(lengths);
}

std::vector<std::size_t> SeqLayout::row_sequence() const {
    std::vector<std::size_t> out(rows());
    for (std::size_t s = 0; s < sequences(); ++s)
        std::fill(out.begin() + static_cast<long>(begin(s)), out.begin() + static_cast<long>(end(s)), s);
    return out;
}

// --- Tape ---------------------------------------------------------------

const Array& Var::value() const { return tape_->value(id_); }

const Array& Tape::value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.borrowed ? *n.borrowed : n.owned;
}

Var Tape::constant(Array value) {
    if (!value.all_finite()) throw NumericError("constant: non-finite input");
    nodes_.push_back(Node{"constant", std::move(value), nullptr, std::nullopt, nullptr, {}, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParamStore& store, ParamId id) {
    nodes_.push_back(Node{"param", {}, &store.value(id), id, nullptr, {}, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::push(const char* op, Array value, BackwardFn backward) {
    if (!value.all_finite())
        throw NumericError(std::string(op) + ": non-finite value in forward pass");
    nodes_.push_back(Node{op, std::move(value), nullptr, std::nullopt,
                          recording() ? std::move(backward) : nullptr, {}, false});
    return Var(this, nodes_.size() - 1);
}

Array& Tape::grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (!n.has_grad) {
        n.grad = Array(value(id).shape(), 0.0);
        n.has_grad = true;
    }
    return n.grad;
}

Gradients Tape::backward(Var loss, const ParamStore& store) {
    if (!recording()) throw Error("backward: tape was created in inference mode");
    if (&loss.tape() != this) throw Error("backward: loss belongs to a different tape");
    if (loss.value().size() != 1)
        throw NumericError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));

    grad(loss.id()).fill(1.0);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.backward) continue;
        // The closure may touch other nodes' accumulators but never this one.
        const Array& g = n.grad;
        n.backward(*this, g);
    }

    Gradients grads;
    grads.reserve(store.size());
    for (ParamId p = 0; p < store.size(); ++p) grads.emplace_back(store.value(p).shape(), 0.0);
    for (std::size_t i = 0; i <= loss.id(); ++i) {
        Node& n = nodes_[i];
        if (!n.param || !n.has_grad) continue;
        if (n.borrowed != &store.value(*n.param))
            throw Error("backward: parameter leaf from a different store");
        if (!n.grad.all_finite())
            throw NumericError("backward: non-finite gradient for parameter '" + store.name(*n.param) + "'");
        auto& dst = grads[*n.param];
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
    }
    return grads;
}

// --- primitives ---------------------------------------------------------

namespace ops {

namespace {

// Gradient checks run after each backward closure so a NaN names its primitive.
void check_grad(Tape& tape, std::size_t id, const char* op) {
    if (!tape.grad(id).all_finite())
        throw NumericError(std::string(op) + ": non-finite gradient in backward pass");
}

template <class F, class D>
Var unary(const char* op, Var a, F f, D dfdx_from_xy) {
    const Array& x = a.value();
    Array y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    const std::size_t ia = a.id();
    return a.tape().push(op, std::move(y), [ia, op, dfdx_from_xy](Tape& t, const Array& g) {
        const Array& xv = t.value(ia);
        Array& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx_from_xy(xv[i]);
        check_grad(t, ia, op);
    });
}

bool is_row_broadcast(const Array& a, const Array& b) {
    return b.rows() == 1 && b.cols() == a.cols() && b.size() == a.cols();
}

} // namespace

Var matmul(Var a, Var b) {
    const Array& av = a.value();
    const Array& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) shape_mismatch("matmul", av.shape(), bv.shape());
    Array y(matrix_shape(av.rows(), bv.cols()));
    as_mat(y).noalias() = as_mat(av) * as_mat(bv);
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().push("matmul", std::move(y), [ia, ib](Tape& t, const Array& g) {
        as_mat(t.grad(ia)).noalias() += as_mat(g) * as_mat(t.value(ib)).transpose();
        as_mat(t.grad(ib)).noalias() += as_mat(t.value(ia)).transpose() * as_mat(g);
        check_grad(t, ia, "matmul");
        check_grad(t, ib, "matmul");
    });
}

namespace {

// Row-gather for a conv tap: cols[r, k*in + c] = x[r + offset_k, c] inside the
// row's own sequence, zero outside.
Array im2col(const Array& x, std::size_t kernel, std::size_t dilation, const SeqLayout& layout) {
    const std::size_t rows = x.rows(), in = x.cols();
    const long half = static_cast<long>(kernel / 2);
    Array cols(matrix_shape(rows, kernel * in), 0.0);
    for (std::size_t s = 0; s < layout.sequences(); ++s) {
        const long lo = static_cast<long>(layout.begin(s)), hi = static_cast<long>(layout.end(s));
        for (long r = lo; r < hi; ++r) {
            double* dst = cols.data() + static_cast<std::size_t>(r) * kernel * in;
            for (std::size_t k = 0; k < kernel; ++k) {
                const long src = r + (static_cast<long>(k) - half) * static_cast<long>(dilation);
                if (src < lo || src >= hi) continue;
                std::copy_n(x.data() + static_cast<std::size_t>(src) * in, in, dst + k * in);
            }
        }
    }
    return cols;
}

void col2im_add(const Array& dcols, Array& dx, std::size_t kernel, std::size_t dilation, const SeqLayout& layout) {
    const std::size_t in = dx.cols();
    const long half = static_cast<long>(kernel / 2);
    for (std::size_t s = 0; s < layout.sequences(); ++s) {
        const long lo = static_cast<long>(layout.begin(s)), hi = static_cast<long>(layout.end(s));
        for (long r = lo; r < hi; ++r) {
            const double* srcrow = dcols.data() + static_cast<std::size_t>(r) * kernel * in;
            for (std::size_t k = 0; k < kernel; ++k) {
                const long src = r + (static_cast<long>(k) - half) * static_cast<long>(dilation);
                if (src < lo || src >= hi) continue;
                double* d = dx.data() + static_cast<std::size_t>(src) * in;
                const double* sv = srcrow + k * in;
                for (std::size_t c = 0; c < in; ++c) d[c] += sv[c];
            }
        }
    }
}

} // namespace

Var conv1d_dilated(Var x, Var w, Var b, std::size_t kernel, std::size_t dilation, const SeqLayout& layout) {
    const Array& xv = x.value();
    const Array& wv = w.value();
    const Array& bv = b.value();
    if (kernel % 2 == 0 || kernel == 0) throw NumericError("conv1d_dilated: kernel must be odd, got " + std::to_string(kernel));
    if (dilation < 1) throw NumericError("conv1d_dilated: dilation must be >= 1");
    if (xv.rank() != 2 || xv.rows() != layout.rows())
        throw NumericError("conv1d_dilated: input " + shape_string(xv.shape()) + " does not match layout of " +
                           std::to_string(layout.rows()) + " rows");
    if (wv.rank() != 2 || wv.rows() != kernel * xv.cols()) shape_mismatch("conv1d_dilated", xv.shape(), wv.shape());
    if (bv.size() != wv.cols()) shape_mismatch("conv1d_dilated", wv.shape(), bv.shape());

    Array cols = im2col(xv, kernel, dilation, layout);
    Array y(matrix_shape(xv.rows(), wv.cols()));
    as_mat(y).noalias() = as_mat(cols) * as_mat(wv);
    as_mat(y).rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size()));

    const std::size_t ix = x.id(), iw = w.id(), ib = b.id();
    Tape& tape = x.tape();
    if (!tape.recording()) return tape.push("conv1d_dilated", std::move(y), nullptr);
    return tape.push("conv1d_dilated", std::move(y),
                     [ix, iw, ib, kernel, dilation, layout, cols = std::move(cols)](Tape& t, const Array& g) {
                         as_mat(t.grad(iw)).noalias() += as_mat(cols).transpose() * as_mat(g);
                         Array& gb = t.grad(ib);
                         Eigen::Map<Eigen::RowVectorXd>(gb.data(), static_cast<Eigen::Index>(gb.size())) +=
                             as_mat(g).colwise().sum();
                         Array dcols(cols.shape());
                         as_mat(dcols).noalias() = as_mat(g) * as_mat(t.value(iw)).transpose();
                         col2im_add(dcols, t.grad(ix), kernel, dilation, layout);
                         check_grad(t, ix, "conv1d_dilated");
                         check_grad(t, iw, "conv1d_dilated");
                     });
}

Var add(Var a, Var b) {
    const Array& av = a.value();
    const Array& bv = b.value();
    const std::size_t ia = a.id(), ib = b.id();
    if (av.shape() == bv.shape()) {
        Array y = av;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
        return a.tape().push("add", std::move(y), [ia, ib](Tape& t, const Array& g) {
            Array& ga = t.grad(ia);
            Array& gb = t.grad(ib);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
            check_grad(t, ia, "add");
        });
    }
    if (!is_row_broadcast(av, bv)) shape_mismatch("add", av.shape(), bv.shape());
    Array y = av;
    const std::size_t cols = av.cols();
    for (std::size_t r = 0; r < y.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] += bv[c];
    return a.tape().push("add", std::move(y), [ia, ib, cols](Tape& t, const Array& g) {
        Array& ga = t.grad(ia);
        Array& gb = t.grad(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i % cols] += g[i];
        }
        check_grad(t, ia, "add");
    });
}

Var sub(Var a, Var b) {
    const Array& av = a.value();
    const Array& bv = b.value();
    if (av.shape() != bv.shape()) shape_mismatch("sub", av.shape(), bv.shape());
    Array y = av;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().push("sub", std::move(y), [ia, ib](Tape& t, const Array& g) {
        Array& ga = t.grad(ia);
        Array& gb = t.grad(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
        check_grad(t, ia, "sub");
    });
}

Var mul(Var a, Var b) {
    const Array& av = a.value();
    const Array& bv = b.value();
    if (av.shape() != bv.shape()) shape_mismatch("mul", av.shape(), bv.shape());
    Array y = av;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().push("mul", std::move(y), [ia, ib](Tape& t, const Array& g) {
        const Array& x1 = t.value(ia);
        const Array& x2 = t.value(ib);
        Array& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * x2[i];
        Array& gb = t.grad(ib);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x1[i];
        check_grad(t, ia, "mul");
        check_grad(t, ib, "mul");
    });
}

Var scale(Var a, double factor) {
    return unary("scale", a, [factor](double x) { return factor * x; }, [factor](double) { return factor; });
}

Var tanh(Var a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); },
                 [](double x) {
                     const double y = std::tanh(x);
                     return 1.0 - y * y;
                 });
}

namespace {
double logistic(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
} // namespace

Var sigmoid(Var a) {
    return unary("sigmoid", a, logistic, [](double x) {
        const double y = logistic(x);
        return y * (1.0 - y);
    });
}

Var relu(Var a) {
    return unary("relu", a, [](double x) { return x > 0 ? x : 0.0; }, [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var silu(Var a) { return mul(a, sigmoid(a)); }

Var layer_norm(Var x, Var gain, Var bias, double eps) {
    const Array& xv = x.value();
    const Array& gv = gain.value();
    const Array& bv = bias.value();
    const std::size_t rows = xv.rows(), cols = xv.cols();
    if (gv.size() != cols || bv.size() != cols) shape_mismatch("layer_norm", xv.shape(), gv.shape());

    Array y(xv.shape());
    Array xhat(xv.shape());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * cols;
        double mu = 0.0;
        for (std::size_t c = 0; c < cols; ++c) mu += row[c];
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
        var /= static_cast<double>(cols);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < cols; ++c) {
            const double h = (row[c] - mu) * inv_std[r];
            xhat[r * cols + c] = h;
            y[r * cols + c] = gv[c] * h + bv[c];
        }
    }
    const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
    return x.tape().push("layer_norm", std::move(y),
                         [ix, ig, ib, rows, cols, xhat = std::move(xhat),
                          inv_std = std::move(inv_std)](Tape& t, const Array& g) {
                             const Array& gv = t.value(ig);
                             Array& gx = t.grad(ix);
                             Array& gg = t.grad(ig);
                             Array& gb = t.grad(ib);
                             const double n = static_cast<double>(cols);
                             for (std::size_t r = 0; r < rows; ++r) {
                                 double mean_d = 0.0, mean_dh = 0.0;
                                 for (std::size_t c = 0; c < cols; ++c) {
                                     const std::size_t k = r * cols + c;
                                     const double d = g[k] * gv[c];
                                     mean_d += d;
                                     mean_dh += d * xhat[k];
                                     gg[c] += g[k] * xhat[k];
                                     gb[c] += g[k];
                                 }
                                 mean_d /= n;
                                 mean_dh /= n;
                                 for (std::size_t c = 0; c < cols; ++c) {
                                     const std::size_t k = r * cols + c;
                                     gx[k] += inv_std[r] * (g[k] * gv[c] - mean_d - xhat[k] * mean_dh);
                                 }
                             }
                             check_grad(t, ix, "layer_norm");
                         });
}

Var dropout(Var x, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw NumericError("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return x;
    Tape& tape = x.tape();
    Array mask(x.shape());
    const double keep = 1.0 - rate;
    for (auto& m : mask.values()) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    return mul(x, tape.constant(std::move(mask)));
}

Var embed_lookup(Var table, std::span<const std::size_t> ids) {
    const Array& tv = table.value();
    if (tv.rank() != 2) throw NumericError("embed_lookup: table must be rank 2, got " + shape_string(tv.shape()));
    if (ids.empty()) throw NumericError("embed_lookup: empty id list");
    const std::size_t dim = tv.cols();
    Array y(matrix_shape(ids.size(), dim));
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] >= tv.rows())
            throw NumericError("embed_lookup: id " + std::to_string(ids[r]) + " outside table of " +
                               std::to_string(tv.rows()) + " rows");
        std::copy_n(tv.data() + ids[r] * dim, dim, y.data() + r * dim);
    }
    const std::size_t it = table.id();
    return table.tape().push("embed_lookup", std::move(y),
                             [it, dim, ids = std::vector<std::size_t>(ids.begin(), ids.end())](Tape& t, const Array& g) {
                                 Array& gt = t.grad(it);
                                 for (std::size_t r = 0; r < ids.size(); ++r)
                                     for (std::size_t c = 0; c < dim; ++c) gt[ids[r] * dim + c] += g[r * dim + c];
                                 check_grad(t, it, "embed_lookup");
                             });
}

Var sum(Var a) {
    const Array& av = a.value();
    double s = 0.0;
    for (double v : av.values()) s += v;
    const std::size_t ia = a.id();
    return a.tape().push("sum", Array::scalar(s), [ia](Tape& t, const Array& g) {
        Array& ga = t.grad(ia);
        for (auto& v : ga.values()) v += g[0];
        check_grad(t, ia, "sum");
    });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    const Array& av = a.value();
    if (av.rank() != 2 || begin >= end || end > av.cols())
        throw NumericError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                           ") invalid for shape " + shape_string(av.shape()));
    const std::size_t rows = av.rows(), cols = av.cols(), w = end - begin;
    Array y(matrix_shape(rows, w));
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(av.data() + r * cols + begin, w, y.data() + r * w);
    const std::size_t ia = a.id();
    return a.tape().push("slice_cols", std::move(y), [ia, rows, cols, begin, w](Tape& t, const Array& g) {
        Array& ga = t.grad(ia);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < w; ++c) ga[r * cols + begin + c] += g[r * w + c];
        check_grad(t, ia, "slice_cols");
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw NumericError("concat_cols: no inputs");
    const std::size_t rows = parts[0].value().rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.value().rank() != 2 || p.value().rows() != rows)
            shape_mismatch("concat_cols", parts[0].shape(), p.shape());
        total += p.value().cols();
    }
    Array y(matrix_shape(rows, total));
    std::vector<std::size_t> ids, widths;
    std::size_t off = 0;
    for (const auto& p : parts) {
        const Array& pv = p.value();
        const std::size_t w = pv.cols();
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(pv.data() + r * w, w, y.data() + r * total + off);
        ids.push_back(p.id());
        widths.push_back(w);
        off += w;
    }
    return parts[0].tape().push("concat_cols", std::move(y), [ids, widths, rows, total](Tape& t, const Array& g) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            Array& gp = t.grad(ids[k]);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < widths[k]; ++c) gp[r * widths[k] + c] += g[r * total + off + c];
            off += widths[k];
            check_grad(t, ids[k], "concat_cols");
        }
    });
}

} // namespace ops

} // namespace prosody
