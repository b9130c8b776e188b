#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsegan/corpus.hpp"
#include "sparsegan/rng.hpp"
#include "sparsegan/sparse.hpp"
#include "sparsegan/tensor.hpp"

namespace sparsegan {

// Ordered name -> tensor registry; the unit Adam and checkpoints work over.
class ParamSet {
public:
    void add(const std::string& name, const Tensor& t);
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    Tensor find(const std::string& name) const; // throws ConfigError when absent
    void set_requires_grad(bool v);
    void zero_grads();

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

// ---- LSTM ----------------------------------------------------------------

// Fused gate layout along the 4H axis: input, forget, cell, output.
struct LstmLayer {
    Tensor wx; // {d_in, 4H}
    Tensor wh; // {H, 4H}
    Tensor b;  // {1, 4H}
};

struct LstmState {
    Tensor h; // {1, H}
    Tensor c; // {1, H}
};

LstmLayer make_lstm_layer(int64_t d_in, int64_t hidden, Rng& rng);
LstmState zero_state(int64_t hidden);

LstmState lstm_step(const LstmLayer& layer, const Tensor& x, const LstmState& prev);

// One step of a stacked LSTM; x feeds the bottom layer, each layer's h feeds
// the next. Returns the new per-layer states (top h = states.back().h).
std::vector<LstmState> stack_step(const std::vector<LstmLayer>& layers, const Tensor& x,
                                  const std::vector<LstmState>& prev);

// ---- Encoders over hidden states ------------------------------------------

enum class EncoderKind { kSparse, kTopkStatic, kTopkDynamic, kNone };

EncoderKind parse_encoder_kind(const std::string& name); // sparse | topk-static | ...
std::string encoder_kind_name(EncoderKind k);

struct EncoderSpec {
    EncoderKind kind = EncoderKind::kSparse;
    int64_t sparse_iters = 10; // greedy rounds per state
    SparseOpts sparse_opts;
    int64_t topk = 10;
    double delta = 0.0;
};

// logits = E h (one inner product per vocabulary word), shape {1, N}.
Tensor vocab_logits(const Tensor& h, const Tensor& embedding);

// Softmax-weighted average of the K highest-logit embeddings (banned atoms
// never qualify; ties prefer the lower index). Coefficients are nonnegative
// and sum to one.
Tensor topk_static_encode(const Tensor& h, const Dictionary& dict, int64_t k);

// Same, but over the words whose logit exceeds delta; falls back to the
// single argmax word when none do.
Tensor topk_dynamic_encode(const Tensor& h, const Dictionary& dict, double delta);

// Dispatch on spec.kind; kNone passes h through unchanged. For the sparse
// kind, *code_out (when non-null) receives the per-state code.
Tensor encode_state(const Tensor& h, const Dictionary& dict, const EncoderSpec& spec,
                    SparseCode* code_out = nullptr);
Tensor encode_states(const Tensor& H, const Dictionary& dict, const EncoderSpec& spec,
                     std::vector<SparseCode>* codes_out = nullptr);

// ---- Generator -------------------------------------------------------------

struct GeneratorParams {
    std::vector<LstmLayer> layers; // input width d, hidden width d
};

GeneratorParams make_generator(int64_t d, int64_t n_layers, Rng& rng);
void register_params(const GeneratorParams& p, const std::string& prefix, ParamSet& out);

struct GenStepOut {
    std::vector<LstmState> states;
    Tensor h; // top-layer hidden, {1, d}
};

GenStepOut generator_step(const GeneratorParams& gen, const std::vector<LstmState>& prev,
                          const Tensor& v_prev);

// Feedback wiring for the unrolled generator: reconstruction mode feeds each
// step the encoded version of the previous hidden state (differentiable
// end-to-end); argmax mode feeds the embedding of the previous greedy word.
enum class FeedbackMode { kReconstruction, kArgmax };

struct GenRollout {
    Tensor H;               // {T, d}
    Tensor S;               // {T, d} encoded states
    std::vector<int> words; // greedy word ids per step (specials masked, EOS allowed)
    std::vector<SparseCode> codes;
};

// z {1, d} seeds the hidden state of every layer (cells start at zero);
// the first input is the BOS embedding.
GenRollout generate_sequence(const GeneratorParams& gen, const Tensor& embedding,
                             const Tensor& z, int64_t t_len, const Dictionary& dict,
                             const EncoderSpec& spec, FeedbackMode mode);

// ---- Denoising auto-encoder -------------------------------------------------

struct DaeParams {
    std::vector<LstmLayer> enc_fwd; // bidirectional encoder, forward direction
    std::vector<LstmLayer> enc_bwd; // backward direction
    std::vector<LstmLayer> dec;
};

DaeParams make_dae(int64_t d, int64_t n_layers, Rng& rng);
void register_params(const DaeParams& p, const std::string& prefix, ParamSet& out);

// Deterministic core of the corruption: keep[i] marks survivors, survivors
// are grouped into consecutive pairs (last may be a singleton), and groups
// are emitted in group_order. Within-pair order is preserved.
std::vector<int> corrupt_core(const std::vector<int>& sentence, const std::vector<char>& keep,
                              const std::vector<int64_t>& group_order);

// Random corruption: each token dropped with p = 1/2 (one uniformly chosen
// survivor is forced if the coin drops everything), then the pair groups are
// shuffled. Draw order: n coins, the rescue pick if needed, then the shuffle.
std::vector<int> corrupt(const std::vector<int>& sentence, Rng& rng);

struct DaeOutput {
    Tensor H; // {T, d}, one decoder state per content token
    Tensor S; // {T, d} encoded
    std::vector<SparseCode> codes;
};

// Encodes [BOS, content, EOS] with the bi-LSTM (directions summed per layer;
// the decoder's layer-l hidden starts from the sum of both directions' final
// states), then teacher-forces the decoder on the clean sentence: step t
// consumes the embedding of token t-1 (BOS first) and its state h'_t is row
// t of H. `sentence` must be BOS/EOS-wrapped. With corrupt_input set the
// encoder sees a corrupted copy (pretraining); the decoder targets stay
// clean either way.
DaeOutput dae_reconstruct(const DaeParams& dae, const Tensor& embedding,
                          const std::vector<int>& sentence, const Dictionary& dict,
                          const EncoderSpec& spec, bool corrupt_input = false,
                          Rng* rng = nullptr);

// ---- Critic -----------------------------------------------------------------

struct CriticParams {
    Tensor filters; // {width, d, feature_maps}
    Tensor w;       // {feature_maps, 1}
    Tensor b;       // {1, 1}
};

CriticParams make_critic(int64_t d, int64_t feature_maps, int64_t width, Rng& rng);
void register_params(const CriticParams& p, const std::string& prefix, ParamSet& out);

// conv -> relu -> max over time -> affine, no squashing. Sequences shorter
// than the filter are padded with zero rows (the pad embedding).
Tensor critic_score(const CriticParams& critic, const Tensor& s);

// Content slice of a BOS/EOS-wrapped sentence.
std::vector<int> content_tokens(const std::vector<int>& sentence);

// Greedy word at state h; PAD/BOS/UNK are never produced, EOS may be.
int argmax_word(const Tensor& h, const Tensor& embedding);

} // namespace sparsegan
