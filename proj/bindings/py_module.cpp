#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "sparsegan/bleu.hpp"
#include "sparsegan/errors.hpp"
#include "sparsegan/nets.hpp"
#include "sparsegan/sparse.hpp"
#include "sparsegan/synth_grammar.hpp"
#include "sparsegan/tensor.hpp"

namespace py = pybind11;
using namespace sparsegan;

namespace {

Tensor tensor_from_rows(const std::vector<std::vector<double>>& rows, const char* what) {
    if (rows.empty()) throw EmptyInputError(std::string(what) + ": no rows");
    const int64_t d = static_cast<int64_t>(rows.front().size());
    std::vector<double> flat;
    flat.reserve(rows.size() * static_cast<size_t>(d));
    for (const auto& r : rows) {
        if (static_cast<int64_t>(r.size()) != d)
            throw ShapeError(std::string(what) + ": ragged rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return Tensor::from_data({static_cast<int64_t>(rows.size()), d}, flat);
}

Tensor tensor_from_vec(const std::vector<double>& v, const char* what) {
    if (v.empty()) throw EmptyInputError(std::string(what) + ": empty vector");
    return Tensor::from_data({1, static_cast<int64_t>(v.size())}, v);
}

py::dict code_to_dict(const SparseCode& code) {
    py::dict out;
    out["indices"] = code.indices;
    out["coeffs"] = code.coeffs;
    out["reconstruction"] = code.reconstruction;
    out["residual"] = code.residual;
    out["residual_norm_history"] = code.residual_norm_history;
    out["ridged"] = code.ridged;
    return out;
}

std::vector<double> tensor_row_values(const Tensor& t) {
    return {t.data().begin(), t.data().end()};
}

} // namespace

PYBIND11_MODULE(_sparsegan, m) {
    m.doc() = "Greedy sparse coding over word embeddings, with the evaluation helpers";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ShapeError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ConfigError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const EmptyInputError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def(
        "sparse_encode",
        [](const std::vector<double>& h, const std::vector<std::vector<double>>& atoms,
           int64_t max_atoms, bool abs_selection, const std::vector<int64_t>& banned) {
            Dictionary dict = make_dictionary(tensor_from_rows(atoms, "atoms"), banned);
            SparseOpts opts;
            opts.abs_selection = abs_selection;
            return code_to_dict(sparse_encode(h, dict, max_atoms, opts));
        },
        py::arg("h"), py::arg("atoms"), py::arg("max_atoms"), py::arg("abs_selection") = false,
        py::arg("banned") = std::vector<int64_t>{},
        "Greedily approximate `h` with at most `max_atoms` dictionary rows, refitting the\n"
        "coefficients by least squares after every selection. Returns the support, the\n"
        "refit coefficients, the reconstruction, the residual, and the residual-norm\n"
        "history (one entry per round, starting at ||h||).");

    m.def(
        "least_squares",
        [](const std::vector<std::vector<double>>& m_rows, const std::vector<double>& h) {
            LeastSquaresResult r = least_squares(tensor_from_rows(m_rows, "m"), h);
            py::dict out;
            out["coeffs"] = r.coeffs;
            out["ridged"] = r.ridged;
            return out;
        },
        py::arg("m"), py::arg("h"),
        "Coefficients minimizing ||h - m^T c|| via the Gram system, with a ridge retry\n"
        "when the system is ill-conditioned.");

    m.def(
        "topk_static",
        [](const std::vector<double>& h, const std::vector<std::vector<double>>& atoms, int64_t k,
           const std::vector<int64_t>& banned) {
            Dictionary dict = make_dictionary(tensor_from_rows(atoms, "atoms"), banned);
            return tensor_row_values(topk_static_encode(tensor_from_vec(h, "h"), dict, k));
        },
        py::arg("h"), py::arg("atoms"), py::arg("k"),
        py::arg("banned") = std::vector<int64_t>{},
        "Softmax-weighted average of the k highest-scoring embedding rows.");

    m.def(
        "topk_dynamic",
        [](const std::vector<double>& h, const std::vector<std::vector<double>>& atoms,
           double delta, const std::vector<int64_t>& banned) {
            Dictionary dict = make_dictionary(tensor_from_rows(atoms, "atoms"), banned);
            return tensor_row_values(topk_dynamic_encode(tensor_from_vec(h, "h"), dict, delta));
        },
        py::arg("h"), py::arg("atoms"), py::arg("delta"),
        py::arg("banned") = std::vector<int64_t>{},
        "Softmax-weighted average of the rows whose score exceeds delta; falls back to\n"
        "the single best row when none do.");

    m.def(
        "bleu",
        [](const std::vector<TokenSentence>& candidates, const std::vector<TokenSentence>& refs,
           int n) {
            BleuResult r = bleu_n(candidates, refs, n);
            py::dict out;
            out["score"] = r.score;
            out["skipped"] = r.skipped;
            return out;
        },
        py::arg("candidates"), py::arg("references"), py::arg("n"),
        "Corpus score: mean modified n-gram precision (geometric over orders 1..n) with\n"
        "the closest-reference brevity penalty. Empty candidates are skipped.");

    m.def("self_bleu",
          [](const std::vector<TokenSentence>& candidates, int n) {
              return self_bleu(candidates, n);
          },
          py::arg("candidates"), py::arg("n"),
          "Mean leave-one-out score of each candidate against the others.");

    m.def(
        "synth_sentences",
        [](uint64_t seed, int64_t n) {
            return synth_grammar(seed, static_cast<int>(n)).sentences;
        },
        py::arg("seed"), py::arg("n"), "Sample sentences from the built-in toy grammar.");

    m.def("grammar_accepts",
          [](const std::string& sentence) { return grammar_accepts(sentence); },
          py::arg("sentence"), "Whether the toy grammar accepts the sentence.");

    m.def("grammar_membership_rate", &grammar_membership_rate, py::arg("sentences"),
          "Fraction of the sentences the toy grammar accepts.");
}
