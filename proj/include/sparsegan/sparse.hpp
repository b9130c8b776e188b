#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparsegan/tensor.hpp"

namespace sparsegan {

// Overcomplete dictionary view over a (possibly live, in-place updated)
// embedding matrix. Banned rows exist in the matrix but are never selected
// as atoms (the pad embedding is the standard case: it is pinned at zero).
struct Dictionary {
    Tensor atoms;                // {N, d}; row i is the embedding of word i
    std::vector<int64_t> banned; // sorted, deduplicated

    int64_t size() const { return atoms.rows(); }
    int64_t dim() const { return atoms.cols(); }
    bool is_banned(int64_t i) const;
};

// Validates shape, bans, and the no-zero-selectable-atom rule; warns on
// stderr when the dictionary is not overcomplete (N < d).
Dictionary make_dictionary(Tensor atoms, std::vector<int64_t> banned = {});

struct SparseOpts {
    // Select by |<r, e>| instead of the raw inner product.
    bool abs_selection = false;
};

// Result of greedily approximating one state h as a combination of k <= L
// atoms with a full least-squares refit after every selection.
struct SparseCode {
    std::vector<int64_t> indices;              // selection order, no duplicates
    std::vector<double> coeffs;                // refit over the whole support
    std::vector<double> reconstruction;        // s = M^T c, d values
    std::vector<double> residual;              // r = h - s, d values
    std::vector<double> residual_norm_history; // k+1 values, starts at ||h||
    bool ridged = false;                       // a Gram solve needed the ridge retry
};

// Argmax of <residual, atom> over atoms not banned and not in `excluded`;
// ties break to the lowest index. Throws ExhaustedDictionaryError when no
// candidate remains.
int64_t select_atom(std::span<const double> residual, const Dictionary& dict,
                    const std::vector<int64_t>& excluded, const SparseOpts& opts = {});

struct LeastSquaresResult {
    std::vector<double> coeffs;
    bool ridged = false;
};

// Minimizes ||h - M^T c|| via the k x k Gram system (M is k x d, rows are
// the selected atoms). If the Cholesky factorization fails or the condition
// estimate exceeds the configured limit, retries once with a ridge of
// 1e-8 * trace(G)/k on the diagonal and reports it.
LeastSquaresResult least_squares(const Tensor& M, std::span<const double> h);

// Greedy encode of a d-vector: up to L rounds of select + refit + residual
// update, stopping early once ||r|| drops below the exact-representation
// threshold. A state with ||h|| already below it yields an empty support.
SparseCode sparse_encode(std::span<const double> h, const Dictionary& dict, int64_t L,
                         const SparseOpts& opts = {});

struct SeqEncodeResult {
    Tensor S; // {T, d}, plain values (no graph)
    std::vector<SparseCode> codes;
};

// Encodes each row of H independently.
SeqEncodeResult sparse_encode_seq(const Tensor& H, const Dictionary& dict, int64_t L,
                                  const SparseOpts& opts = {});

// Gradient of the reconstruction w.r.t. the input state with the support
// frozen: s = P h with P = M^T (M M^T)^{-1} M, so grad_h = P grad_s.
// Throws EmptySupportError when the code selected nothing.
std::vector<double> sparse_backward(std::span<const double> grad_s, const SparseCode& code,
                                    const Dictionary& dict);

// Graph-op version of encode: the forward value of row t is the sparse
// reconstruction of H[t]; the backward rule freezes each row's support and
// routes gradients both to H (projection, as sparse_backward) and to the
// selected atom rows of dict.atoms. The rule is linear in the upstream
// gradient, so it stays valid under double backward. When codes_out is
// non-null it receives the per-row codes.
Tensor sparse_reconstruct_seq(const Tensor& H, const Dictionary& dict, int64_t L,
                              const SparseOpts& opts = {},
                              std::vector<SparseCode>* codes_out = nullptr);

// One JSON object {"step": step, "indices": [...], "coeffs": [...],
// "residual_norm_history": [...]} on a single line.
std::string sparse_code_json(int64_t step, const SparseCode& code);

} // namespace sparsegan
