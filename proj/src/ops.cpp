#include "sparsegan/ops.hpp"

#include <algorithm>
#include <cmath>

namespace sparsegan {

namespace {

void check_rank2(const Tensor& t, const char* op) {
    if (t.shape().size() != 2) {
        throw ShapeError(std::string(op) + ": expected rank-2 tensor, got shape " +
                         shape_str(t.shape()));
    }
}

bool is_scalar(const Tensor& t) { return t.numel() == 1; }

// Collapse a broadcast gradient back to the operand's shape.
Tensor reduce_to(const Tensor& g, const Shape& target) {
    if (g.shape() == target) return g;
    Tensor s = sum(g);
    if (s.shape() == target) return s;
    // scalar shapes may differ ({1,1} vs {1}); reshape via raw copy
    return Tensor::make_node(
        target, {s.item()}, "reshape_scalar", {s},
        [](const BackwardArgs& a) -> std::vector<Tensor> {
            return {spread(a.grad_out, a.parents[0].shape())};
        });
}

void check_elementwise(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape() || is_scalar(a) || is_scalar(b)) return;
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
}

// Forward kernel for elementwise binary ops with scalar broadcast.
template <class F>
std::vector<double> ew_forward(const Tensor& a, const Tensor& b, F f) {
    auto av = a.data();
    auto bv = b.data();
    size_t n = std::max(av.size(), bv.size());
    std::vector<double> out(n);
    if (av.size() == bv.size()) {
        for (size_t i = 0; i < n; ++i) out[i] = f(av[i], bv[i]);
    } else if (av.size() == 1) {
        for (size_t i = 0; i < n; ++i) out[i] = f(av[0], bv[i]);
    } else {
        for (size_t i = 0; i < n; ++i) out[i] = f(av[i], bv[0]);
    }
    return out;
}

Shape ew_shape(const Tensor& a, const Tensor& b) {
    return a.numel() >= b.numel() ? a.shape() : b.shape();
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_rank2(a, "matmul");
    check_rank2(b, "matmul");
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    const int64_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(static_cast<size_t>(m * n), 0.0);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t kk = 0; kk < k; ++kk) {
            const double av = pa[i * k + kk];
            if (av == 0.0) continue;
            const double* brow = pb + kk * n;
            double* orow = out.data() + i * n;
            for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return Tensor::make_node(
        {m, n}, std::move(out), "matmul", {a, b},
        [](const BackwardArgs& args) -> std::vector<Tensor> {
            const Tensor& a = args.parents[0];
            const Tensor& b = args.parents[1];
            return {matmul(args.grad_out, transpose(b)), matmul(transpose(a), args.grad_out)};
        });
}

Tensor transpose(const Tensor& a) {
    check_rank2(a, "transpose");
    const int64_t m = a.rows(), n = a.cols();
    std::vector<double> out(static_cast<size_t>(m * n));
    const double* pa = a.data().data();
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out[static_cast<size_t>(j * m + i)] = pa[i * n + j];
    return Tensor::make_node({n, m}, std::move(out), "transpose", {a},
                             [](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {transpose(args.grad_out)};
                             });
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_elementwise(a, b, "add");
    return Tensor::make_node(
        ew_shape(a, b), ew_forward(a, b, [](double x, double y) { return x + y; }), "add", {a, b},
        [](const BackwardArgs& args) -> std::vector<Tensor> {
            return {reduce_to(args.grad_out, args.parents[0].shape()),
                    reduce_to(args.grad_out, args.parents[1].shape())};
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_elementwise(a, b, "sub");
    return Tensor::make_node(
        ew_shape(a, b), ew_forward(a, b, [](double x, double y) { return x - y; }), "sub", {a, b},
        [](const BackwardArgs& args) -> std::vector<Tensor> {
            return {reduce_to(args.grad_out, args.parents[0].shape()),
                    reduce_to(neg(args.grad_out), args.parents[1].shape())};
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_elementwise(a, b, "mul");
    return Tensor::make_node(
        ew_shape(a, b), ew_forward(a, b, [](double x, double y) { return x * y; }), "mul", {a, b},
        [](const BackwardArgs& args) -> std::vector<Tensor> {
            const Tensor& a = args.parents[0];
            const Tensor& b = args.parents[1];
            return {reduce_to(mul(args.grad_out, b), a.shape()),
                    reduce_to(mul(args.grad_out, a), b.shape())};
        });
}

Tensor div(const Tensor& a, const Tensor& b) {
    check_elementwise(a, b, "div");
    return Tensor::make_node(
        ew_shape(a, b), ew_forward(a, b, [](double x, double y) { return x / y; }), "div", {a, b},
        [](const BackwardArgs& args) -> std::vector<Tensor> {
            const Tensor& a = args.parents[0];
            const Tensor& b = args.parents[1];
            // d(a/b)/db = -a/b^2 = -out/b
            Tensor gb = neg(mul(args.grad_out, div(args.output, b)));
            return {reduce_to(div(args.grad_out, b), a.shape()), reduce_to(gb, b.shape())};
        });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& v : out) v *= c;
    return Tensor::make_node(a.shape(), std::move(out), "scale", {a},
                             [c](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {scale(args.grad_out, c)};
                             });
}

Tensor add_const(const Tensor& a, double c) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& v : out) v += c;
    return Tensor::make_node(a.shape(), std::move(out), "add_const", {a},
                             [](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {args.grad_out};
                             });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor tanh(const Tensor& x) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v = std::tanh(v);
    return Tensor::make_node(x.shape(), std::move(out), "tanh", {x},
                             [](const BackwardArgs& args) -> std::vector<Tensor> {
                                 const Tensor& y = args.output;
                                 return {mul(args.grad_out, add_const(neg(mul(y, y)), 1.0))};
                             });
}

Tensor sigmoid(const Tensor& x) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
    return Tensor::make_node(x.shape(), std::move(out), "sigmoid", {x},
                             [](const BackwardArgs& args) -> std::vector<Tensor> {
                                 const Tensor& y = args.output;
                                 return {mul(args.grad_out, mul(y, add_const(neg(y), 1.0)))};
                             });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.data().begin(), x.data().end());
    std::vector<double> mask(out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        mask[i] = out[i] > 0.0 ? 1.0 : 0.0;
        if (out[i] < 0.0) out[i] = 0.0;
    }
    // The mask is piecewise constant in x, so treating it as a constant in
    // the rule keeps the op valid under double backward.
    Tensor mask_t = Tensor::from_data(x.shape(), std::move(mask));
    return Tensor::make_node(x.shape(), std::move(out), "relu", {x},
                             [mask_t](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {mul(args.grad_out, mask_t)};
                             });
}

Tensor exp(const Tensor& x) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v = std::exp(v);
    return Tensor::make_node(x.shape(), std::move(out), "exp", {x},
                             [](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {mul(args.grad_out, args.output)};
                             });
}

Tensor sqrt(const Tensor& x) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v = std::sqrt(v);
    return Tensor::make_node(x.shape(), std::move(out), "sqrt", {x},
                             [](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {div(scale(args.grad_out, 0.5), args.output)};
                             });
}

namespace {

void check_conv_shapes(const Tensor& filters, const char* op) {
    if (filters.shape().size() != 3) {
        throw ShapeError(std::string(op) + ": filters must be rank-3 {w, d_in, d_out}, got " +
                         shape_str(filters.shape()));
    }
}

} // namespace

Tensor conv1d(const Tensor& x, const Tensor& filters) {
    check_rank2(x, "conv1d");
    check_conv_shapes(filters, "conv1d");
    const int64_t T = x.rows(), di = x.cols();
    const int64_t w = filters.shape()[0], fdi = filters.shape()[1], dout = filters.shape()[2];
    if (di != fdi) {
        throw ShapeError("conv1d: input width mismatch, x " + shape_str(x.shape()) +
                         " vs filters " + shape_str(filters.shape()));
    }
    if (T < w) {
        throw ShapeError("conv1d: sequence too short, " + std::to_string(T) + " steps for window " +
                         std::to_string(w));
    }
    const int64_t To = T - w + 1;
    std::vector<double> out(static_cast<size_t>(To * dout), 0.0);
    const double* px = x.data().data();
    const double* pf = filters.data().data();
    for (int64_t t = 0; t < To; ++t) {
        double* orow = out.data() + t * dout;
        for (int64_t k = 0; k < w; ++k) {
            const double* xrow = px + (t + k) * di;
            const double* fk = pf + k * di * dout;
            for (int64_t i = 0; i < di; ++i) {
                const double xv = xrow[i];
                if (xv == 0.0) continue;
                const double* frow = fk + i * dout;
                for (int64_t o = 0; o < dout; ++o) orow[o] += xv * frow[o];
            }
        }
    }
    return Tensor::make_node(
        {To, dout}, std::move(out), "conv1d", {x, filters},
        [](const BackwardArgs& args) -> std::vector<Tensor> {
            const Tensor& x = args.parents[0];
            const Tensor& f = args.parents[1];
            return {conv1d_input_grad(args.grad_out, f), conv1d_filter_grad(x, args.grad_out)};
        });
}

Tensor conv1d_input_grad(const Tensor& g, const Tensor& filters) {
    check_rank2(g, "conv1d_input_grad");
    check_conv_shapes(filters, "conv1d_input_grad");
    const int64_t To = g.rows(), dout = g.cols();
    const int64_t w = filters.shape()[0], di = filters.shape()[1], fdo = filters.shape()[2];
    if (dout != fdo) {
        throw ShapeError("conv1d_input_grad: channel mismatch, g " + shape_str(g.shape()) +
                         " vs filters " + shape_str(filters.shape()));
    }
    const int64_t T = To + w - 1;
    std::vector<double> out(static_cast<size_t>(T * di), 0.0);
    const double* pg = g.data().data();
    const double* pf = filters.data().data();
    for (int64_t t = 0; t < To; ++t) {
        const double* grow = pg + t * dout;
        for (int64_t k = 0; k < w; ++k) {
            double* xrow = out.data() + (t + k) * di;
            const double* fk = pf + k * di * dout;
            for (int64_t i = 0; i < di; ++i) {
                const double* frow = fk + i * dout;
                double acc = 0.0;
                for (int64_t o = 0; o < dout; ++o) acc += grow[o] * frow[o];
                xrow[i] += acc;
            }
        }
    }
    return Tensor::make_node(
        {T, di}, std::move(out), "conv1d_input_grad", {g, filters},
        [](const BackwardArgs& args) -> std::vector<Tensor> {
            const Tensor& g = args.parents[0];
            const Tensor& f = args.parents[1];
            return {conv1d(args.grad_out, f), conv1d_filter_grad(args.grad_out, g)};
        });
}

Tensor conv1d_filter_grad(const Tensor& x, const Tensor& g) {
    check_rank2(x, "conv1d_filter_grad");
    check_rank2(g, "conv1d_filter_grad");
    const int64_t T = x.rows(), di = x.cols();
    const int64_t To = g.rows(), dout = g.cols();
    if (To > T) {
        throw ShapeError("conv1d_filter_grad: grad rows exceed input rows, x " +
                         shape_str(x.shape()) + " vs g " + shape_str(g.shape()));
    }
    const int64_t w = T - To + 1;
    std::vector<double> out(static_cast<size_t>(w * di * dout), 0.0);
    const double* px = x.data().data();
    const double* pg = g.data().data();
    for (int64_t t = 0; t < To; ++t) {
        const double* grow = pg + t * dout;
        for (int64_t k = 0; k < w; ++k) {
            const double* xrow = px + (t + k) * di;
            double* fk = out.data() + k * di * dout;
            for (int64_t i = 0; i < di; ++i) {
                const double xv = xrow[i];
                if (xv == 0.0) continue;
                double* frow = fk + i * dout;
                for (int64_t o = 0; o < dout; ++o) frow[o] += xv * grow[o];
            }
        }
    }
    return Tensor::make_node(
        {w, di, dout}, std::move(out), "conv1d_filter_grad", {x, g},
        [](const BackwardArgs& args) -> std::vector<Tensor> {
            const Tensor& x = args.parents[0];
            const Tensor& g = args.parents[1];
            return {conv1d_input_grad(g, args.grad_out), conv1d(x, args.grad_out)};
        });
}

Tensor sum(const Tensor& x) {
    if (x.numel() == 0) throw EmptyInputError("sum: empty tensor");
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    return Tensor::make_node({1, 1}, {acc}, "sum", {x},
                             [](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {spread(args.grad_out, args.parents[0].shape())};
                             });
}

Tensor mean(const Tensor& x) {
    if (x.numel() == 0) throw EmptyInputError("mean: empty tensor");
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    const double inv_n = 1.0 / static_cast<double>(x.numel());
    return Tensor::make_node(
        {1, 1}, {acc * inv_n}, "mean", {x},
        [inv_n](const BackwardArgs& args) -> std::vector<Tensor> {
            return {spread(scale(args.grad_out, inv_n), args.parents[0].shape())};
        });
}

Tensor spread(const Tensor& s, Shape shape) {
    if (s.numel() != 1) {
        throw ShapeError("spread: source must be scalar, got shape " + shape_str(s.shape()));
    }
    std::vector<double> out(static_cast<size_t>(shape_numel(shape)), s.data()[0]);
    return Tensor::make_node(std::move(shape), std::move(out), "spread", {s},
                             [](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {reduce_to(sum(args.grad_out), args.parents[0].shape())};
                             });
}

namespace {

Tensor gather_time(const Tensor& u, const std::vector<int64_t>& idx);

// Adjoint pair used by max_over_time: route a {1,F} gradient into the argmax
// rows of a {T,F} map and back.
Tensor scatter_time(const Tensor& g, const std::vector<int64_t>& idx, int64_t rows) {
    check_rank2(g, "scatter_time");
    const int64_t F = g.cols();
    if (g.rows() != 1 || static_cast<int64_t>(idx.size()) != F) {
        throw ShapeError("scatter_time: expected {1,F} gradient, got " + shape_str(g.shape()));
    }
    std::vector<double> out(static_cast<size_t>(rows * F), 0.0);
    for (int64_t f = 0; f < F; ++f) out[static_cast<size_t>(idx[static_cast<size_t>(f)] * F + f)] = g.data()[static_cast<size_t>(f)];
    return Tensor::make_node({rows, F}, std::move(out), "scatter_time", {g},
                             [idx](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {gather_time(args.grad_out, idx)};
                             });
}

Tensor gather_time(const Tensor& u, const std::vector<int64_t>& idx) {
    check_rank2(u, "gather_time");
    const int64_t T = u.rows(), F = u.cols();
    if (static_cast<int64_t>(idx.size()) != F) {
        throw ShapeError("gather_time: index count " + std::to_string(idx.size()) +
                         " does not match columns of " + shape_str(u.shape()));
    }
    std::vector<double> out(static_cast<size_t>(F));
    for (int64_t f = 0; f < F; ++f) out[static_cast<size_t>(f)] = u.data()[static_cast<size_t>(idx[static_cast<size_t>(f)] * F + f)];
    return Tensor::make_node({1, F}, std::move(out), "gather_time", {u},
                             [idx, T](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {scatter_time(args.grad_out, idx, T)};
                             });
}

} // namespace

Tensor max_over_time(const Tensor& x) {
    check_rank2(x, "max_over_time");
    const int64_t T = x.rows(), F = x.cols();
    if (T == 0 || F == 0) throw EmptyInputError("max_over_time: empty tensor");
    std::vector<double> out(static_cast<size_t>(F));
    std::vector<int64_t> idx(static_cast<size_t>(F), 0);
    const double* px = x.data().data();
    for (int64_t f = 0; f < F; ++f) {
        double best = px[f];
        int64_t bt = 0;
        for (int64_t t = 1; t < T; ++t) {
            const double v = px[t * F + f];
            if (v > best) { // strict: ties keep the lowest time index
                best = v;
                bt = t;
            }
        }
        out[static_cast<size_t>(f)] = best;
        idx[static_cast<size_t>(f)] = bt;
    }
    return Tensor::make_node({1, F}, std::move(out), "max_over_time", {x},
                             [idx, T](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {scatter_time(args.grad_out, idx, T)};
                             });
}

Tensor slice_rows(const Tensor& x, int64_t lo, int64_t n) {
    check_rank2(x, "slice_rows");
    const int64_t R = x.rows(), C = x.cols();
    if (lo < 0 || n < 1 || lo + n > R) {
        throw ShapeError("slice_rows: range [" + std::to_string(lo) + ", " + std::to_string(lo + n) +
                         ") out of bounds for " + shape_str(x.shape()));
    }
    std::vector<double> out(x.data().begin() + lo * C, x.data().begin() + (lo + n) * C);
    return Tensor::make_node({n, C}, std::move(out), "slice_rows", {x},
                             [lo, R](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {scatter_rows(args.grad_out, lo, R)};
                             });
}

Tensor scatter_rows(const Tensor& x, int64_t lo, int64_t rows) {
    check_rank2(x, "scatter_rows");
    const int64_t n = x.rows(), C = x.cols();
    if (lo < 0 || lo + n > rows) {
        throw ShapeError("scatter_rows: block [" + std::to_string(lo) + ", " +
                         std::to_string(lo + n) + ") does not fit in " + std::to_string(rows) +
                         " rows");
    }
    std::vector<double> out(static_cast<size_t>(rows * C), 0.0);
    std::copy(x.data().begin(), x.data().end(), out.begin() + lo * C);
    return Tensor::make_node({rows, C}, std::move(out), "scatter_rows", {x},
                             [lo, n](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {slice_rows(args.grad_out, lo, n)};
                             });
}

Tensor slice_cols(const Tensor& x, int64_t lo, int64_t n) {
    check_rank2(x, "slice_cols");
    const int64_t R = x.rows(), C = x.cols();
    if (lo < 0 || n < 1 || lo + n > C) {
        throw ShapeError("slice_cols: range [" + std::to_string(lo) + ", " + std::to_string(lo + n) +
                         ") out of bounds for " + shape_str(x.shape()));
    }
    std::vector<double> out(static_cast<size_t>(R * n));
    const double* px = x.data().data();
    for (int64_t r = 0; r < R; ++r)
        for (int64_t j = 0; j < n; ++j) out[static_cast<size_t>(r * n + j)] = px[r * C + lo + j];
    return Tensor::make_node({R, n}, std::move(out), "slice_cols", {x},
                             [lo, C](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {scatter_cols(args.grad_out, lo, C)};
                             });
}

Tensor scatter_cols(const Tensor& x, int64_t lo, int64_t cols) {
    check_rank2(x, "scatter_cols");
    const int64_t R = x.rows(), n = x.cols();
    if (lo < 0 || lo + n > cols) {
        throw ShapeError("scatter_cols: block [" + std::to_string(lo) + ", " +
                         std::to_string(lo + n) + ") does not fit in " + std::to_string(cols) +
                         " columns");
    }
    std::vector<double> out(static_cast<size_t>(R * cols), 0.0);
    const double* px = x.data().data();
    for (int64_t r = 0; r < R; ++r)
        for (int64_t j = 0; j < n; ++j) out[static_cast<size_t>(r * cols + lo + j)] = px[r * n + j];
    return Tensor::make_node({R, cols}, std::move(out), "scatter_cols", {x},
                             [lo, n](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {slice_cols(args.grad_out, lo, n)};
                             });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw EmptyInputError("concat_rows: no parts");
    const int64_t C = parts[0].cols();
    int64_t R = 0;
    for (const Tensor& p : parts) {
        check_rank2(p, "concat_rows");
        if (p.cols() != C) {
            throw ShapeError("concat_rows: column mismatch, " + shape_str(parts[0].shape()) +
                             " vs " + shape_str(p.shape()));
        }
        R += p.rows();
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(R * C));
    std::vector<int64_t> offsets;
    offsets.reserve(parts.size());
    int64_t off = 0;
    for (const Tensor& p : parts) {
        offsets.push_back(off);
        off += p.rows();
        out.insert(out.end(), p.data().begin(), p.data().end());
    }
    return Tensor::make_node(
        {R, C}, std::move(out), "concat_rows", parts,
        [offsets](const BackwardArgs& args) -> std::vector<Tensor> {
            std::vector<Tensor> grads;
            grads.reserve(args.parents.size());
            for (size_t i = 0; i < args.parents.size(); ++i) {
                grads.push_back(slice_rows(args.grad_out, offsets[i], args.parents[i].rows()));
            }
            return grads;
        });
}

Tensor gather_rows(const Tensor& x, std::vector<int64_t> idx) {
    check_rank2(x, "gather_rows");
    const int64_t R = x.rows(), C = x.cols();
    std::vector<double> out;
    out.reserve(idx.size() * static_cast<size_t>(C));
    for (int64_t i : idx) {
        if (i < 0 || i >= R) {
            throw ShapeError("gather_rows: index " + std::to_string(i) + " out of range for " +
                             shape_str(x.shape()));
        }
        out.insert(out.end(), x.data().begin() + i * C, x.data().begin() + (i + 1) * C);
    }
    const int64_t k = static_cast<int64_t>(idx.size());
    return Tensor::make_node({k, C}, std::move(out), "gather_rows", {x},
                             [idx = std::move(idx), R](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {scatter_rows_at(args.grad_out, idx, R)};
                             });
}

Tensor scatter_rows_at(const Tensor& x, std::vector<int64_t> idx, int64_t rows) {
    check_rank2(x, "scatter_rows_at");
    const int64_t k = x.rows(), C = x.cols();
    if (static_cast<int64_t>(idx.size()) != k) {
        throw ShapeError("scatter_rows_at: " + std::to_string(idx.size()) + " indices for " +
                         shape_str(x.shape()));
    }
    std::vector<double> out(static_cast<size_t>(rows * C), 0.0);
    for (int64_t r = 0; r < k; ++r) {
        const int64_t i = idx[static_cast<size_t>(r)];
        if (i < 0 || i >= rows) {
            throw ShapeError("scatter_rows_at: index " + std::to_string(i) + " out of range for " +
                             std::to_string(rows) + " rows");
        }
        for (int64_t c = 0; c < C; ++c) out[static_cast<size_t>(i * C + c)] += x.data()[static_cast<size_t>(r * C + c)];
    }
    return Tensor::make_node({rows, C}, std::move(out), "scatter_rows_at", {x},
                             [idx = std::move(idx)](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {gather_rows(args.grad_out, idx)};
                             });
}

Tensor gather_cols(const Tensor& x, std::vector<int64_t> idx) {
    check_rank2(x, "gather_cols");
    const int64_t R = x.rows(), C = x.cols();
    const int64_t k = static_cast<int64_t>(idx.size());
    std::vector<double> out(static_cast<size_t>(R * k));
    for (int64_t j = 0; j < k; ++j) {
        const int64_t i = idx[static_cast<size_t>(j)];
        if (i < 0 || i >= C) {
            throw ShapeError("gather_cols: index " + std::to_string(i) + " out of range for " +
                             shape_str(x.shape()));
        }
        for (int64_t r = 0; r < R; ++r) out[static_cast<size_t>(r * k + j)] = x.data()[static_cast<size_t>(r * C + i)];
    }
    return Tensor::make_node({R, k}, std::move(out), "gather_cols", {x},
                             [idx = std::move(idx), C](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {scatter_cols_at(args.grad_out, idx, C)};
                             });
}

Tensor scatter_cols_at(const Tensor& x, std::vector<int64_t> idx, int64_t cols) {
    check_rank2(x, "scatter_cols_at");
    const int64_t R = x.rows(), k = x.cols();
    if (static_cast<int64_t>(idx.size()) != k) {
        throw ShapeError("scatter_cols_at: " + std::to_string(idx.size()) + " indices for " +
                         shape_str(x.shape()));
    }
    std::vector<double> out(static_cast<size_t>(R * cols), 0.0);
    for (int64_t j = 0; j < k; ++j) {
        const int64_t i = idx[static_cast<size_t>(j)];
        if (i < 0 || i >= cols) {
            throw ShapeError("scatter_cols_at: index " + std::to_string(i) + " out of range for " +
                             std::to_string(cols) + " columns");
        }
        for (int64_t r = 0; r < R; ++r) out[static_cast<size_t>(r * cols + i)] += x.data()[static_cast<size_t>(r * k + j)];
    }
    return Tensor::make_node({R, cols}, std::move(out), "scatter_cols_at", {x},
                             [idx = std::move(idx)](const BackwardArgs& args) -> std::vector<Tensor> {
                                 return {gather_cols(args.grad_out, idx)};
                             });
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<double>& weights) {
    check_rank2(logits, "cross_entropy_rows");
    const int64_t T = logits.rows(), N = logits.cols();
    if (static_cast<int64_t>(targets.size()) != T || static_cast<int64_t>(weights.size()) != T) {
        throw ShapeError("cross_entropy_rows: " + std::to_string(targets.size()) + " targets / " +
                         std::to_string(weights.size()) + " weights for " +
                         shape_str(logits.shape()));
    }
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) throw EmptyInputError("cross_entropy_rows: all weights are zero");

    const double* pl = logits.data().data();
    double loss = 0.0;
    for (int64_t t = 0; t < T; ++t) {
        const double w = weights[static_cast<size_t>(t)];
        if (w == 0.0) continue;
        const int y = targets[static_cast<size_t>(t)];
        if (y < 0 || y >= N) {
            throw ConfigError("cross_entropy_rows: target id " + std::to_string(y) +
                              " out of range for " + std::to_string(N) + " classes");
        }
        const double* lrow = pl + t * N;
        double m = lrow[0];
        for (int64_t j = 1; j < N; ++j) m = std::max(m, lrow[j]);
        double lse = 0.0;
        for (int64_t j = 0; j < N; ++j) lse += std::exp(lrow[j] - m);
        lse = m + std::log(lse);
        loss += w * (lse - lrow[y]);
    }
    loss /= wsum;

    return Tensor::make_node(
        {1, 1}, {loss}, "cross_entropy_rows", {logits},
        [targets, weights, wsum](const BackwardArgs& args) -> std::vector<Tensor> {
            const Tensor& logits = args.parents[0];
            const int64_t T = logits.rows(), N = logits.cols();
            const double* pl = logits.data().data();
            const double g = args.grad_out.data()[0];
            std::vector<double> grad(static_cast<size_t>(T * N), 0.0);
            for (int64_t t = 0; t < T; ++t) {
                const double w = weights[static_cast<size_t>(t)];
                if (w == 0.0) continue;
                const double scale_t = g * w / wsum;
                const double* lrow = pl + t * N;
                double m = lrow[0];
                for (int64_t j = 1; j < N; ++j) m = std::max(m, lrow[j]);
                double z = 0.0;
                for (int64_t j = 0; j < N; ++j) z += std::exp(lrow[j] - m);
                double* grow = grad.data() + t * N;
                for (int64_t j = 0; j < N; ++j) grow[j] = scale_t * std::exp(lrow[j] - m) / z;
                grow[targets[static_cast<size_t>(t)]] -= scale_t;
            }
            return {Tensor::from_data(logits.shape(), std::move(grad))};
        },
        /*twice_differentiable=*/false);
}

} // namespace sparsegan
