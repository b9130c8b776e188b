#include "sparsegan/nets.hpp"

#include <algorithm>
#include <cmath>

#include "sparsegan/ops.hpp"

namespace sparsegan {

void ParamSet::add(const std::string& name, const Tensor& t) {
    for (const auto& [existing, unused] : items_) {
        if (existing == name) throw ConfigError("param set: duplicate name '" + name + "'");
    }
    items_.emplace_back(name, t);
}

Tensor ParamSet::find(const std::string& name) const {
    for (const auto& [n, t] : items_) {
        if (n == name) return t;
    }
    throw ConfigError("param set: no parameter named '" + name + "'");
}

void ParamSet::set_requires_grad(bool v) {
    for (auto& [n, t] : items_) t.set_requires_grad(v);
}

void ParamSet::zero_grads() {
    for (auto& [n, t] : items_) t.zero_grad();
}

// ---- LSTM ----------------------------------------------------------------

LstmLayer make_lstm_layer(int64_t d_in, int64_t hidden, Rng& rng) {
    LstmLayer l;
    l.wx = Tensor::randn({d_in, 4 * hidden}, rng, 1.0 / std::sqrt(static_cast<double>(d_in)));
    l.wh = Tensor::randn({hidden, 4 * hidden}, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
    std::vector<double> bias(static_cast<size_t>(4 * hidden), 0.0);
    // positive forget bias keeps early cell states alive
    for (int64_t i = hidden; i < 2 * hidden; ++i) bias[static_cast<size_t>(i)] = 1.0;
    l.b = Tensor::from_data({1, 4 * hidden}, std::move(bias));
    return l;
}

LstmState zero_state(int64_t hidden) {
    return {Tensor::zeros({1, hidden}), Tensor::zeros({1, hidden})};
}

LstmState lstm_step(const LstmLayer& layer, const Tensor& x, const LstmState& prev) {
    const int64_t hidden = layer.wh.rows();
    if (x.cols() != layer.wx.rows()) {
        throw ShapeError("lstm_step: input width " + std::to_string(x.cols()) +
                         " does not match weight rows " + std::to_string(layer.wx.rows()));
    }
    Tensor pre = add(add(matmul(x, layer.wx), matmul(prev.h, layer.wh)), layer.b);
    Tensor i = sigmoid(slice_cols(pre, 0, hidden));
    Tensor f = sigmoid(slice_cols(pre, hidden, hidden));
    Tensor g = tanh(slice_cols(pre, 2 * hidden, hidden));
    Tensor o = sigmoid(slice_cols(pre, 3 * hidden, hidden));
    Tensor c = add(mul(f, prev.c), mul(i, g));
    Tensor h = mul(o, tanh(c));
    return {h, c};
}

std::vector<LstmState> stack_step(const std::vector<LstmLayer>& layers, const Tensor& x,
                                  const std::vector<LstmState>& prev) {
    if (layers.size() != prev.size()) {
        throw ShapeError("stack_step: " + std::to_string(prev.size()) + " states for " +
                         std::to_string(layers.size()) + " layers");
    }
    std::vector<LstmState> next;
    next.reserve(layers.size());
    Tensor input = x;
    for (size_t l = 0; l < layers.size(); ++l) {
        next.push_back(lstm_step(layers[l], input, prev[l]));
        input = next.back().h;
    }
    return next;
}

// ---- Encoders over hidden states ------------------------------------------

EncoderKind parse_encoder_kind(const std::string& name) {
    if (name == "sparse") return EncoderKind::kSparse;
    if (name == "topk-static" || name == "topk_static") return EncoderKind::kTopkStatic;
    if (name == "topk-dynamic" || name == "topk_dynamic") return EncoderKind::kTopkDynamic;
    if (name == "none") return EncoderKind::kNone;
    throw ConfigError("unknown encoder kind '" + name + "'");
}

std::string encoder_kind_name(EncoderKind k) {
    switch (k) {
        case EncoderKind::kSparse: return "sparse";
        case EncoderKind::kTopkStatic: return "topk-static";
        case EncoderKind::kTopkDynamic: return "topk-dynamic";
        case EncoderKind::kNone: return "none";
    }
    throw ConfigError("unknown encoder kind value");
}

Tensor vocab_logits(const Tensor& h, const Tensor& embedding) {
    return matmul(h, transpose(embedding));
}

namespace {

// Raw logit values (no graph) for discrete selections.
std::vector<double> logit_values(const Tensor& h, const Tensor& embedding) {
    const int64_t n = embedding.rows(), d = embedding.cols();
    auto hv = h.data();
    auto ev = embedding.data();
    std::vector<double> out(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < d; ++j) s += hv[static_cast<size_t>(j)] * ev[i * d + j];
        out[static_cast<size_t>(i)] = s;
    }
    return out;
}

// Softmax-weighted average of the chosen embedding rows, differentiable in
// both h and the embedding matrix; the choice itself is frozen.
Tensor weighted_embedding(const Tensor& h, const Dictionary& dict,
                          const std::vector<int64_t>& idx) {
    Tensor logits = vocab_logits(h, dict.atoms);
    Tensor sel = gather_cols(logits, idx);
    double m = sel.data()[0];
    for (double v : sel.data()) m = std::max(m, v);
    Tensor e = exp(add_const(sel, -m));
    Tensor p = div(e, sum(e));
    return matmul(p, gather_rows(dict.atoms, idx));
}

} // namespace

Tensor topk_static_encode(const Tensor& h, const Dictionary& dict, int64_t k) {
    if (k <= 0) throw ConfigError("topk_static_encode: K must be positive");
    std::vector<double> scores = logit_values(h, dict.atoms);
    std::vector<int64_t> cand;
    for (int64_t i = 0; i < dict.size(); ++i)
        if (!dict.is_banned(i)) cand.push_back(i);
    if (k > static_cast<int64_t>(cand.size())) {
        throw ConfigError("topk_static_encode: K = " + std::to_string(k) + " exceeds the " +
                          std::to_string(cand.size()) + " selectable words");
    }
    std::stable_sort(cand.begin(), cand.end(), [&scores](int64_t a, int64_t b) {
        return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    });
    cand.resize(static_cast<size_t>(k));
    std::sort(cand.begin(), cand.end());
    return weighted_embedding(h, dict, cand);
}

Tensor topk_dynamic_encode(const Tensor& h, const Dictionary& dict, double delta) {
    std::vector<double> scores = logit_values(h, dict.atoms);
    std::vector<int64_t> chosen;
    int64_t best = -1;
    for (int64_t i = 0; i < dict.size(); ++i) {
        if (dict.is_banned(i)) continue;
        if (scores[static_cast<size_t>(i)] > delta) chosen.push_back(i);
        if (best < 0 || scores[static_cast<size_t>(i)] > scores[static_cast<size_t>(best)]) best = i;
    }
    if (chosen.empty()) {
        if (best < 0) throw ConfigError("topk_dynamic_encode: every word is banned");
        chosen.push_back(best);
    }
    return weighted_embedding(h, dict, chosen);
}

Tensor encode_state(const Tensor& h, const Dictionary& dict, const EncoderSpec& spec,
                    SparseCode* code_out) {
    switch (spec.kind) {
        case EncoderKind::kSparse: {
            std::vector<SparseCode> codes;
            Tensor s = sparse_reconstruct_seq(h, dict, spec.sparse_iters, spec.sparse_opts,
                                              code_out ? &codes : nullptr);
            if (code_out) *code_out = std::move(codes[0]);
            return s;
        }
        case EncoderKind::kTopkStatic: return topk_static_encode(h, dict, spec.topk);
        case EncoderKind::kTopkDynamic: return topk_dynamic_encode(h, dict, spec.delta);
        case EncoderKind::kNone: return h;
    }
    throw ConfigError("encode_state: unknown encoder kind");
}

Tensor encode_states(const Tensor& H, const Dictionary& dict, const EncoderSpec& spec,
                     std::vector<SparseCode>* codes_out) {
    if (spec.kind == EncoderKind::kSparse) {
        return sparse_reconstruct_seq(H, dict, spec.sparse_iters, spec.sparse_opts, codes_out);
    }
    if (spec.kind == EncoderKind::kNone) return H;
    std::vector<Tensor> rows;
    rows.reserve(static_cast<size_t>(H.rows()));
    for (int64_t t = 0; t < H.rows(); ++t) {
        rows.push_back(encode_state(slice_rows(H, t, 1), dict, spec, nullptr));
    }
    return concat_rows(rows);
}

// ---- Generator -------------------------------------------------------------

GeneratorParams make_generator(int64_t d, int64_t n_layers, Rng& rng) {
    if (n_layers < 1) throw ConfigError("make_generator: need at least one layer");
    GeneratorParams p;
    for (int64_t l = 0; l < n_layers; ++l) p.layers.push_back(make_lstm_layer(d, d, rng));
    return p;
}

namespace {

void register_stack(const std::vector<LstmLayer>& layers, const std::string& prefix,
                    ParamSet& out) {
    for (size_t l = 0; l < layers.size(); ++l) {
        const std::string base = prefix + ".l" + std::to_string(l) + ".";
        out.add(base + "wx", layers[l].wx);
        out.add(base + "wh", layers[l].wh);
        out.add(base + "b", layers[l].b);
    }
}

} // namespace

void register_params(const GeneratorParams& p, const std::string& prefix, ParamSet& out) {
    register_stack(p.layers, prefix, out);
}

GenStepOut generator_step(const GeneratorParams& gen, const std::vector<LstmState>& prev,
                          const Tensor& v_prev) {
    GenStepOut out;
    out.states = stack_step(gen.layers, v_prev, prev);
    out.h = out.states.back().h;
    return out;
}

int argmax_word(const Tensor& h, const Tensor& embedding) {
    std::vector<double> scores = logit_values(h, embedding);
    int best = -1;
    for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
        if (i == Vocab::kPad || i == Vocab::kBos || i == Vocab::kUnk) continue;
        if (best < 0 || scores[static_cast<size_t>(i)] > scores[static_cast<size_t>(best)]) best = i;
    }
    if (best < 0) throw ConfigError("argmax_word: vocabulary has no selectable words");
    return best;
}

GenRollout generate_sequence(const GeneratorParams& gen, const Tensor& embedding,
                             const Tensor& z, int64_t t_len, const Dictionary& dict,
                             const EncoderSpec& spec, FeedbackMode mode) {
    if (t_len < 1) throw ConfigError("generate_sequence: need at least one step");
    if (z.shape() != Shape{1, embedding.cols()}) {
        throw ShapeError("generate_sequence: z must be {1, d}, got " + shape_str(z.shape()));
    }
    std::vector<LstmState> states;
    for (size_t l = 0; l < gen.layers.size(); ++l) {
        states.push_back({z, Tensor::zeros({1, z.cols()})});
    }

    GenRollout out;
    std::vector<Tensor> h_rows, s_rows;
    Tensor v = slice_rows(embedding, Vocab::kBos, 1);
    for (int64_t t = 0; t < t_len; ++t) {
        GenStepOut step = generator_step(gen, states, v);
        states = std::move(step.states);
        h_rows.push_back(step.h);
        out.words.push_back(argmax_word(step.h, embedding));
        if (mode == FeedbackMode::kReconstruction) {
            SparseCode code;
            Tensor s = encode_state(step.h, dict, spec,
                                    spec.kind == EncoderKind::kSparse ? &code : nullptr);
            if (spec.kind == EncoderKind::kSparse) out.codes.push_back(std::move(code));
            s_rows.push_back(s);
            v = s;
        } else {
            v = slice_rows(embedding, out.words.back(), 1);
        }
    }
    out.H = concat_rows(h_rows);
    if (mode == FeedbackMode::kReconstruction) {
        out.S = concat_rows(s_rows);
    } else {
        out.S = encode_states(out.H, dict, spec,
                              spec.kind == EncoderKind::kSparse ? &out.codes : nullptr);
    }
    return out;
}

// ---- Denoising auto-encoder -------------------------------------------------

DaeParams make_dae(int64_t d, int64_t n_layers, Rng& rng) {
    if (n_layers < 1) throw ConfigError("make_dae: need at least one layer");
    DaeParams p;
    for (int64_t l = 0; l < n_layers; ++l) p.enc_fwd.push_back(make_lstm_layer(d, d, rng));
    for (int64_t l = 0; l < n_layers; ++l) p.enc_bwd.push_back(make_lstm_layer(d, d, rng));
    for (int64_t l = 0; l < n_layers; ++l) p.dec.push_back(make_lstm_layer(d, d, rng));
    return p;
}

void register_params(const DaeParams& p, const std::string& prefix, ParamSet& out) {
    register_stack(p.enc_fwd, prefix + ".enc_fwd", out);
    register_stack(p.enc_bwd, prefix + ".enc_bwd", out);
    register_stack(p.dec, prefix + ".dec", out);
}

std::vector<int> corrupt_core(const std::vector<int>& sentence, const std::vector<char>& keep,
                              const std::vector<int64_t>& group_order) {
    if (sentence.empty()) throw EmptyInputError("corrupt: empty sentence");
    if (keep.size() != sentence.size()) {
        throw ShapeError("corrupt: keep mask has " + std::to_string(keep.size()) +
                         " entries for " + std::to_string(sentence.size()) + " tokens");
    }
    std::vector<int> survivors;
    for (size_t i = 0; i < sentence.size(); ++i)
        if (keep[i]) survivors.push_back(sentence[i]);
    if (survivors.empty()) throw ConfigError("corrupt: keep mask drops every token");

    const size_t n_groups = (survivors.size() + 1) / 2;
    if (group_order.size() != n_groups) {
        throw ShapeError("corrupt: " + std::to_string(group_order.size()) + " group slots for " +
                         std::to_string(n_groups) + " groups");
    }
    std::vector<int> out;
    out.reserve(survivors.size());
    std::vector<char> visited(n_groups, 0);
    for (int64_t g : group_order) {
        if (g < 0 || g >= static_cast<int64_t>(n_groups)) {
            throw ConfigError("corrupt: group index " + std::to_string(g) + " out of range");
        }
        if (visited[static_cast<size_t>(g)]) {
            throw ConfigError("corrupt: group order visits group " + std::to_string(g) +
                              " more than once");
        }
        visited[static_cast<size_t>(g)] = 1;
        const size_t at = static_cast<size_t>(g) * 2;
        out.push_back(survivors[at]);
        if (at + 1 < survivors.size()) out.push_back(survivors[at + 1]);
    }
    return out;
}

std::vector<int> corrupt(const std::vector<int>& sentence, Rng& rng) {
    if (sentence.empty()) throw EmptyInputError("corrupt: empty sentence");
    std::vector<char> keep(sentence.size(), 0);
    size_t kept = 0;
    for (size_t i = 0; i < sentence.size(); ++i) {
        if (rng.bernoulli(0.5)) {
            keep[i] = 1;
            ++kept;
        }
    }
    if (kept == 0) keep[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(sentence.size())))] = 1, kept = 1;

    const size_t n_groups = (kept + 1) / 2;
    std::vector<int64_t> order(n_groups);
    for (size_t i = 0; i < n_groups; ++i) order[i] = static_cast<int64_t>(i);
    rng.shuffle(order);
    return corrupt_core(sentence, keep, order);
}

std::vector<int> content_tokens(const std::vector<int>& sentence) {
    std::vector<int> out;
    for (int id : sentence) {
        if (id == Vocab::kBos || id == Vocab::kEos || id == Vocab::kPad) continue;
        out.push_back(id);
    }
    return out;
}

namespace {

// One bidirectional layer: forward and backward passes over the row
// sequence, outputs summed per position. Returns the sequence for the next
// layer plus both directions' final hidden states.
struct BiLayerOut {
    std::vector<Tensor> seq;
    Tensor final_fwd;
    Tensor final_bwd;
};

BiLayerOut bi_layer(const LstmLayer& fwd, const LstmLayer& bwd, const std::vector<Tensor>& xs) {
    const int64_t hidden = fwd.wh.rows();
    BiLayerOut out;
    std::vector<Tensor> f_seq, b_seq;
    LstmState s = zero_state(hidden);
    for (const Tensor& x : xs) {
        s = lstm_step(fwd, x, s);
        f_seq.push_back(s.h);
    }
    out.final_fwd = s.h;
    s = zero_state(hidden);
    b_seq.resize(xs.size());
    for (size_t i = xs.size(); i-- > 0;) {
        s = lstm_step(bwd, xs[i], s);
        b_seq[i] = s.h;
    }
    out.final_bwd = s.h;
    for (size_t i = 0; i < xs.size(); ++i) out.seq.push_back(add(f_seq[i], b_seq[i]));
    return out;
}

} // namespace

DaeOutput dae_reconstruct(const DaeParams& dae, const Tensor& embedding,
                          const std::vector<int>& sentence, const Dictionary& dict,
                          const EncoderSpec& spec, bool corrupt_input, Rng* rng) {
    std::vector<int> content = content_tokens(sentence);
    if (content.empty()) throw EmptyInputError("dae_reconstruct: sentence has no content tokens");

    std::vector<int> enc_content = content;
    if (corrupt_input) {
        if (!rng) throw ConfigError("dae_reconstruct: corruption requested without a generator");
        enc_content = corrupt(content, *rng);
    }
    std::vector<int64_t> enc_ids;
    enc_ids.push_back(Vocab::kBos);
    for (int id : enc_content) enc_ids.push_back(id);
    enc_ids.push_back(Vocab::kEos);

    Tensor enc_x = gather_rows(embedding, enc_ids);
    std::vector<Tensor> xs;
    for (int64_t t = 0; t < enc_x.rows(); ++t) xs.push_back(slice_rows(enc_x, t, 1));

    std::vector<Tensor> dec_init;
    for (size_t l = 0; l < dae.enc_fwd.size(); ++l) {
        BiLayerOut layer = bi_layer(dae.enc_fwd[l], dae.enc_bwd[l], xs);
        dec_init.push_back(add(layer.final_fwd, layer.final_bwd));
        xs = std::move(layer.seq);
    }

    std::vector<LstmState> states;
    const int64_t hidden = dae.dec[0].wh.rows();
    for (size_t l = 0; l < dae.dec.size(); ++l) {
        states.push_back({dec_init[l], Tensor::zeros({1, hidden})});
    }

    // teacher forcing: step t sees the clean token t-1 (BOS for the first)
    std::vector<int64_t> dec_inputs;
    dec_inputs.push_back(Vocab::kBos);
    for (size_t i = 0; i + 1 < content.size(); ++i) dec_inputs.push_back(content[i]);

    std::vector<Tensor> h_rows;
    for (int64_t id : dec_inputs) {
        Tensor v = slice_rows(embedding, id, 1);
        states = stack_step(dae.dec, v, states);
        h_rows.push_back(states.back().h);
    }

    DaeOutput out;
    out.H = concat_rows(h_rows);
    out.S = encode_states(out.H, dict, spec,
                          spec.kind == EncoderKind::kSparse ? &out.codes : nullptr);
    return out;
}

// ---- Critic -----------------------------------------------------------------

CriticParams make_critic(int64_t d, int64_t feature_maps, int64_t width, Rng& rng) {
    if (width < 1 || feature_maps < 1) {
        throw ConfigError("make_critic: filter width and feature maps must be positive");
    }
    CriticParams p;
    p.filters = Tensor::randn({width, d, feature_maps}, rng,
                              1.0 / std::sqrt(static_cast<double>(width * d)));
    p.w = Tensor::randn({feature_maps, 1}, rng,
                        1.0 / std::sqrt(static_cast<double>(feature_maps)));
    p.b = Tensor::zeros({1, 1});
    return p;
}

void register_params(const CriticParams& p, const std::string& prefix, ParamSet& out) {
    out.add(prefix + ".filters", p.filters);
    out.add(prefix + ".w", p.w);
    out.add(prefix + ".b", p.b);
}

Tensor critic_score(const CriticParams& critic, const Tensor& s) {
    const int64_t width = critic.filters.shape()[0];
    Tensor input = s;
    if (s.rows() < width) {
        // pad embedding rows are pinned at zero
        input = concat_rows({s, Tensor::zeros({width - s.rows(), s.cols()})});
    }
    Tensor fm = max_over_time(relu(conv1d(input, critic.filters)));
    return add(matmul(fm, critic.w), critic.b);
}

} // namespace sparsegan
