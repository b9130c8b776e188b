#include "sparsegan/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "json.hpp"
#include "sparsegan/ops.hpp"
#include "sparsegan/tolerances.hpp"

namespace sparsegan {

namespace {

double l2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// In-place lower Cholesky of a k x k row-major SPD matrix. dmin/dmax track
// the factor diagonal for a cheap condition estimate.
struct Chol {
    std::vector<double> fac;
    int64_t k = 0;
    bool ok = false;
    double dmin = 0.0, dmax = 0.0;
};

Chol factor(std::vector<double> g, int64_t k) {
    Chol ch;
    ch.fac = std::move(g);
    ch.k = k;
    double* a = ch.fac.data();
    for (int64_t j = 0; j < k; ++j) {
        double s = a[j * k + j];
        for (int64_t p = 0; p < j; ++p) s -= a[j * k + p] * a[j * k + p];
        if (s <= 0.0 || !std::isfinite(s)) return ch; // not positive definite
        const double dj = std::sqrt(s);
        a[j * k + j] = dj;
        if (j == 0) {
            ch.dmin = ch.dmax = dj;
        } else {
            ch.dmin = std::min(ch.dmin, dj);
            ch.dmax = std::max(ch.dmax, dj);
        }
        for (int64_t i = j + 1; i < k; ++i) {
            double t = a[i * k + j];
            for (int64_t p = 0; p < j; ++p) t -= a[i * k + p] * a[j * k + p];
            a[i * k + j] = t / dj;
        }
    }
    ch.ok = true;
    return ch;
}

void solve_in_place(const Chol& ch, double* b) {
    const int64_t k = ch.k;
    const double* a = ch.fac.data();
    for (int64_t i = 0; i < k; ++i) {
        double s = b[i];
        for (int64_t p = 0; p < i; ++p) s -= a[i * k + p] * b[p];
        b[i] = s / a[i * k + i];
    }
    for (int64_t i = k - 1; i >= 0; --i) {
        double s = b[i];
        for (int64_t p = i + 1; p < k; ++p) s -= a[p * k + i] * b[p];
        b[i] = s / a[i * k + i];
    }
}

// Factor with the documented fallback: if plain Cholesky fails or the
// condition estimate (ratio of extreme factor pivots, squared) exceeds the
// limit, retry once with ridge 1e-8 * trace(G)/k on the diagonal.
struct GramFactor {
    Chol ch;
    bool ridged = false;
};

GramFactor factor_gram(const std::vector<double>& g, int64_t k) {
    GramFactor out;
    out.ch = factor(g, k);
    if (out.ch.ok) {
        const double cond = (out.ch.dmax / out.ch.dmin) * (out.ch.dmax / out.ch.dmin);
        if (cond <= tol::kGramCondLimit) return out;
    }
    double trace = 0.0;
    for (int64_t i = 0; i < k; ++i) trace += g[static_cast<size_t>(i * k + i)];
    const double ridge = tol::kRidgeScale * trace / static_cast<double>(k);
    std::vector<double> g2 = g;
    for (int64_t i = 0; i < k; ++i) g2[static_cast<size_t>(i * k + i)] += ridge;
    out.ch = factor(std::move(g2), k);
    out.ridged = true;
    if (!out.ch.ok) {
        throw Error("least_squares: Gram matrix is not positive definite even with ridge");
    }
    return out;
}

std::vector<double> gram_of(const Tensor& m) {
    const int64_t k = m.rows(), d = m.cols();
    const double* p = m.data().data();
    std::vector<double> g(static_cast<size_t>(k * k));
    for (int64_t i = 0; i < k; ++i) {
        for (int64_t j = i; j < k; ++j) {
            double s = 0.0;
            for (int64_t t = 0; t < d; ++t) s += p[i * d + t] * p[j * d + t];
            g[static_cast<size_t>(i * k + j)] = s;
            g[static_cast<size_t>(j * k + i)] = s;
        }
    }
    return g;
}

// Plain value copy of dictionary rows; deliberately not a graph op.
Tensor atom_rows(const Dictionary& dict, const std::vector<int64_t>& idx) {
    const int64_t d = dict.dim();
    std::vector<double> data;
    data.reserve(idx.size() * static_cast<size_t>(d));
    auto src = dict.atoms.data();
    for (int64_t i : idx) {
        data.insert(data.end(), src.begin() + i * d, src.begin() + (i + 1) * d);
    }
    return Tensor::from_data({static_cast<int64_t>(idx.size()), d}, std::move(data));
}

} // namespace

bool Dictionary::is_banned(int64_t i) const {
    return std::binary_search(banned.begin(), banned.end(), i);
}

Dictionary make_dictionary(Tensor atoms, std::vector<int64_t> banned) {
    if (atoms.shape().size() != 2) {
        throw ShapeError("dictionary: atoms must be {N, d}, got " + shape_str(atoms.shape()));
    }
    const int64_t n = atoms.rows(), d = atoms.cols();
    std::sort(banned.begin(), banned.end());
    banned.erase(std::unique(banned.begin(), banned.end()), banned.end());
    for (int64_t b : banned) {
        if (b < 0 || b >= n) {
            throw ConfigError("dictionary: banned atom id " + std::to_string(b) +
                              " out of range for " + std::to_string(n) + " atoms");
        }
    }
    Dictionary dict{std::move(atoms), std::move(banned)};
    if (n < d) {
        std::fprintf(stderr,
                     "warning: dictionary has %lld atoms of width %lld; not overcomplete\n",
                     static_cast<long long>(n), static_cast<long long>(d));
    }
    auto data = dict.atoms.data();
    for (int64_t i = 0; i < n; ++i) {
        if (dict.is_banned(i)) continue;
        bool all_zero = true;
        for (int64_t j = 0; j < d && all_zero; ++j) all_zero = data[i * d + j] == 0.0;
        if (all_zero) {
            throw ConfigError("dictionary: selectable atom " + std::to_string(i) +
                              " is the zero vector");
        }
    }
    return dict;
}

int64_t select_atom(std::span<const double> residual, const Dictionary& dict,
                    const std::vector<int64_t>& excluded, const SparseOpts& opts) {
    const int64_t n = dict.size(), d = dict.dim();
    if (static_cast<int64_t>(residual.size()) != d) {
        throw ShapeError("select_atom: residual has " + std::to_string(residual.size()) +
                         " entries for atom width " + std::to_string(d));
    }
    std::vector<char> skip(static_cast<size_t>(n), 0);
    for (int64_t b : dict.banned) skip[static_cast<size_t>(b)] = 1;
    for (int64_t e : excluded) {
        if (e < 0 || e >= n) {
            throw ConfigError("select_atom: excluded id " + std::to_string(e) + " out of range");
        }
        skip[static_cast<size_t>(e)] = 1;
    }
    const double* atoms = dict.atoms.data().data();
    int64_t best = -1;
    double best_score = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        if (skip[static_cast<size_t>(i)]) continue;
        double ip = 0.0;
        const double* row = atoms + i * d;
        for (int64_t j = 0; j < d; ++j) ip += residual[static_cast<size_t>(j)] * row[j];
        const double score = opts.abs_selection ? std::abs(ip) : ip;
        if (best < 0 || score > best_score) { // strict: ties keep the lowest index
            best = i;
            best_score = score;
        }
    }
    if (best < 0) throw ExhaustedDictionaryError("select_atom: every atom is excluded");
    return best;
}

LeastSquaresResult least_squares(const Tensor& m, std::span<const double> h) {
    if (m.shape().size() != 2) {
        throw ShapeError("least_squares: M must be {k, d}, got " + shape_str(m.shape()));
    }
    const int64_t k = m.rows(), d = m.cols();
    if (k == 0) throw EmptySupportError("least_squares: empty support");
    if (static_cast<int64_t>(h.size()) != d) {
        throw ShapeError("least_squares: state has " + std::to_string(h.size()) +
                         " entries for atom width " + std::to_string(d));
    }
    GramFactor gf = factor_gram(gram_of(m), k);
    LeastSquaresResult out;
    out.ridged = gf.ridged;
    out.coeffs.resize(static_cast<size_t>(k));
    const double* p = m.data().data();
    for (int64_t i = 0; i < k; ++i) {
        double s = 0.0;
        for (int64_t t = 0; t < d; ++t) s += p[i * d + t] * h[static_cast<size_t>(t)];
        out.coeffs[static_cast<size_t>(i)] = s;
    }
    solve_in_place(gf.ch, out.coeffs.data());
    return out;
}

SparseCode sparse_encode(std::span<const double> h, const Dictionary& dict, int64_t L,
                         const SparseOpts& opts) {
    const int64_t d = dict.dim();
    if (static_cast<int64_t>(h.size()) != d) {
        throw ShapeError("sparse_encode: state has " + std::to_string(h.size()) +
                         " entries for atom width " + std::to_string(d));
    }
    if (L < 1) throw ConfigError("sparse_encode: iteration count must be >= 1");

    SparseCode code;
    code.reconstruction.assign(static_cast<size_t>(d), 0.0);
    code.residual.assign(h.begin(), h.end());
    code.residual_norm_history.push_back(l2(h));

    for (int64_t round = 0; round < L; ++round) {
        if (code.residual_norm_history.back() < tol::kEarlyStopResidual) break;
        const int64_t pick = select_atom(code.residual, dict, code.indices, opts);
        code.indices.push_back(pick);

        Tensor m = atom_rows(dict, code.indices);
        LeastSquaresResult fit = least_squares(m, h);
        code.ridged = code.ridged || fit.ridged;
        code.coeffs = std::move(fit.coeffs);

        const double* p = m.data().data();
        const int64_t k = m.rows();
        for (int64_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (int64_t i = 0; i < k; ++i) s += code.coeffs[static_cast<size_t>(i)] * p[i * d + j];
            code.reconstruction[static_cast<size_t>(j)] = s;
            code.residual[static_cast<size_t>(j)] = h[static_cast<size_t>(j)] - s;
        }
        code.residual_norm_history.push_back(l2(code.residual));
    }
    return code;
}

SeqEncodeResult sparse_encode_seq(const Tensor& H, const Dictionary& dict, int64_t L,
                                  const SparseOpts& opts) {
    if (H.shape().size() != 2) {
        throw ShapeError("sparse_encode_seq: H must be {T, d}, got " + shape_str(H.shape()));
    }
    const int64_t t_len = H.rows(), d = H.cols();
    if (t_len < 1) throw EmptyInputError("sparse_encode_seq: no states");
    SeqEncodeResult out;
    out.codes.reserve(static_cast<size_t>(t_len));
    std::vector<double> s(static_cast<size_t>(t_len * d));
    auto hv = H.data();
    for (int64_t t = 0; t < t_len; ++t) {
        SparseCode code = sparse_encode(hv.subspan(static_cast<size_t>(t * d),
                                                   static_cast<size_t>(d)),
                                        dict, L, opts);
        std::copy(code.reconstruction.begin(), code.reconstruction.end(), s.begin() + t * d);
        out.codes.push_back(std::move(code));
    }
    out.S = Tensor::from_data({t_len, d}, std::move(s));
    return out;
}

std::vector<double> sparse_backward(std::span<const double> grad_s, const SparseCode& code,
                                    const Dictionary& dict) {
    if (code.indices.empty()) throw EmptySupportError("sparse_backward: empty support");
    const int64_t d = dict.dim();
    if (static_cast<int64_t>(grad_s.size()) != d) {
        throw ShapeError("sparse_backward: gradient has " + std::to_string(grad_s.size()) +
                         " entries for atom width " + std::to_string(d));
    }
    Tensor m = atom_rows(dict, code.indices);
    const int64_t k = m.rows();
    GramFactor gf = factor_gram(gram_of(m), k);

    const double* p = m.data().data();
    std::vector<double> w(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i) {
        double s = 0.0;
        for (int64_t t = 0; t < d; ++t) s += p[i * d + t] * grad_s[static_cast<size_t>(t)];
        w[static_cast<size_t>(i)] = s;
    }
    solve_in_place(gf.ch, w.data());

    std::vector<double> grad_h(static_cast<size_t>(d), 0.0);
    for (int64_t i = 0; i < k; ++i) {
        const double wi = w[static_cast<size_t>(i)];
        for (int64_t t = 0; t < d; ++t) grad_h[static_cast<size_t>(t)] += wi * p[i * d + t];
    }
    return grad_h;
}

namespace {

// Frozen per-row context for the reconstruction backward: everything here
// is a forward-time constant, so the rule below is linear in the upstream
// gradient and therefore differentiable again.
struct RowCtx {
    std::vector<int64_t> idx;
    Tensor m;    // {k, d} selected atom values
    Tensor ginv; // {k, k} inverse of (possibly ridged) Gram matrix
    Tensor c;    // {k, 1} coefficients
    Tensor r;    // {1, d} residual
};

Tensor gram_inverse(const Tensor& m) {
    const int64_t k = m.rows();
    GramFactor gf = factor_gram(gram_of(m), k);
    std::vector<double> inv(static_cast<size_t>(k * k), 0.0);
    std::vector<double> col(static_cast<size_t>(k));
    for (int64_t j = 0; j < k; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[static_cast<size_t>(j)] = 1.0;
        solve_in_place(gf.ch, col.data());
        for (int64_t i = 0; i < k; ++i) inv[static_cast<size_t>(i * k + j)] = col[static_cast<size_t>(i)];
    }
    return Tensor::from_data({k, k}, std::move(inv));
}

} // namespace

Tensor sparse_reconstruct_seq(const Tensor& H, const Dictionary& dict, int64_t L,
                              const SparseOpts& opts, std::vector<SparseCode>* codes_out) {
    SeqEncodeResult enc = sparse_encode_seq(H, dict, L, opts);
    const int64_t t_len = H.rows(), d = H.cols();
    const int64_t n = dict.size();

    auto ctxs = std::make_shared<std::vector<RowCtx>>();
    ctxs->reserve(enc.codes.size());
    for (const SparseCode& code : enc.codes) {
        RowCtx ctx;
        ctx.idx = code.indices;
        if (!code.indices.empty()) {
            const int64_t k = static_cast<int64_t>(code.indices.size());
            ctx.m = atom_rows(dict, code.indices);
            ctx.ginv = gram_inverse(ctx.m);
            ctx.c = Tensor::from_data({k, 1}, code.coeffs);
            ctx.r = Tensor::from_data({1, d}, code.residual);
        }
        ctxs->push_back(std::move(ctx));
    }
    if (codes_out) *codes_out = std::move(enc.codes);

    std::vector<double> s_data(enc.S.data().begin(), enc.S.data().end());
    return Tensor::make_node(
        {t_len, d}, std::move(s_data), "sparse_reconstruct_seq", {H, dict.atoms},
        [ctxs, n, d](const BackwardArgs& args) -> std::vector<Tensor> {
            const bool want_h = args.parents[0].requires_grad();
            const bool want_e = args.parents[1].requires_grad();
            std::vector<Tensor> h_rows;
            h_rows.reserve(ctxs->size());
            Tensor e_grad;
            for (size_t t = 0; t < ctxs->size(); ++t) {
                const RowCtx& ctx = (*ctxs)[t];
                Tensor g = slice_rows(args.grad_out, static_cast<int64_t>(t), 1);
                if (ctx.idx.empty()) {
                    if (want_h) h_rows.push_back(Tensor::zeros({1, d}));
                    continue;
                }
                // w = G^{-1} M g^T; projection of g onto the support span
                Tensor w = matmul(ctx.ginv, matmul(ctx.m, transpose(g)));
                Tensor pg = matmul(transpose(w), ctx.m);
                if (want_h) h_rows.push_back(pg);
                if (want_e) {
                    // d s / d(atom rows): c (g - Pg)^T + (G^{-1} M g) r^T
                    Tensor term = add(matmul(ctx.c, sub(g, pg)), matmul(w, ctx.r));
                    Tensor scattered = scatter_rows_at(term, ctx.idx, n);
                    e_grad = e_grad.defined() ? add(e_grad, scattered) : scattered;
                }
            }
            std::vector<Tensor> out(2);
            if (want_h) out[0] = concat_rows(h_rows);
            if (want_e && e_grad.defined()) out[1] = e_grad;
            if (want_e && !e_grad.defined()) out[1] = Tensor::zeros(args.parents[1].shape());
            return out;
        });
}

std::string sparse_code_json(int64_t step, const SparseCode& code) {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["indices"] = code.indices;
    j["coeffs"] = code.coeffs;
    j["residual_norm_history"] = code.residual_norm_history;
    return j.dump();
}

} // namespace sparsegan
