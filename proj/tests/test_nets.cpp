#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "sparsegan/corpus.hpp"
#include "sparsegan/gradcheck.hpp"
#include "sparsegan/nets.hpp"
#include "sparsegan/ops.hpp"
#include "sparsegan/rng.hpp"
#include "sparsegan/tolerances.hpp"

using namespace sparsegan;

namespace {

LstmLayer zero_layer(int64_t d_in, int64_t hidden) {
    return LstmLayer{Tensor::zeros({d_in, 4 * hidden}), Tensor::zeros({hidden, 4 * hidden}),
                     Tensor::zeros({1, 4 * hidden})};
}

// Orthonormal-ish dictionary: the identity rows behind a zero pad row, so
// coefficients of any encoding can be read off by plain dot products.
Dictionary axis_dict(int64_t d) {
    std::vector<double> rows(static_cast<size_t>((d + 1) * d), 0.0);
    for (int64_t i = 0; i < d; ++i) rows[static_cast<size_t>((i + 1) * d + i)] = 1.0;
    return make_dictionary(Tensor::from_data({d + 1, d}, std::move(rows)), {0});
}

double dot_row(const Tensor& a, int64_t row, std::span<const double> v) {
    double s = 0.0;
    for (int64_t c = 0; c < a.cols(); ++c) s += a.at(row, c) * v[static_cast<size_t>(c)];
    return s;
}

} // namespace

TEST_CASE("parameter sets are ordered registries") {
    ParamSet set;
    Tensor a = Tensor::scalar(1.0), b = Tensor::scalar(2.0);
    set.add("net.a", a);
    set.add("net.b", b);
    REQUIRE(set.items().size() == 2);
    CHECK(set.items()[0].first == "net.a");
    CHECK(same_data(set.find("net.b"), b));
    CHECK_THROWS_AS(set.find("missing"), ConfigError);

    set.set_requires_grad(true);
    CHECK(a.requires_grad());
    backward(add(sum(a), sum(b)));
    CHECK(a.grad().defined());
    set.zero_grads();
    CHECK_FALSE(a.grad().defined());
}

TEST_CASE("an all-zero lstm keeps the zero state as a fixed point") {
    LstmLayer layer = zero_layer(3, 2);
    Tensor x = Tensor::from_data({1, 3}, {5.0, -2.0, 1.0});
    LstmState s = lstm_step(layer, x, zero_state(2));
    for (int64_t i = 0; i < 2; ++i) {
        CHECK(s.h.data()[i] == 0.0);
        CHECK(s.c.data()[i] == 0.0);
    }
}

TEST_CASE("single-unit lstm matches hand-computed gate arithmetic") {
    // gate order along the 4H axis: input, forget, cell, output
    LstmLayer layer{Tensor::from_data({1, 4}, {0.5, 0.25, 1.0, 0.75}),
                    Tensor::zeros({1, 4}), Tensor::zeros({1, 4})};
    Tensor x = Tensor::scalar(1.0);

    LstmState s1 = lstm_step(layer, x, zero_state(1));
    CHECK(s1.c.item() == doctest::Approx(0.47406138896346633).epsilon(1e-14));
    CHECK(s1.h.item() == doctest::Approx(0.29984041192851946).epsilon(1e-14));

    // second step with the same input: forget gate mixes the old cell in
    LstmState s2 = lstm_step(layer, x, s1);
    CHECK(s2.c.item() == doctest::Approx(0.74056756181600913).epsilon(1e-13));
    CHECK(s2.h.item() == doctest::Approx(0.42753480459027465).epsilon(1e-13));
}

TEST_CASE("lstm step gradients match finite differences") {
    Rng rng(71);
    LstmLayer layer = make_lstm_layer(3, 2, rng);
    Tensor x = Tensor::randn({1, 3}, rng);
    Tensor h0 = Tensor::randn({1, 2}, rng);
    Tensor c0 = Tensor::randn({1, 2}, rng);

    auto fn = [&](const std::vector<Tensor>& in) {
        LstmLayer l{in[0], in[1], in[2]};
        LstmState out = lstm_step(l, in[3], {in[4], in[5]});
        return add(sum(out.h), scale(sum(out.c), 0.5));
    };
    CHECK(grad_check(fn, {layer.wx, layer.wh, layer.b, x, h0, c0}) < tol::kFdRelTol);
}

TEST_CASE("stacked steps feed each hidden state upward") {
    Rng rng(72);
    std::vector<LstmLayer> layers = {make_lstm_layer(3, 3, rng), make_lstm_layer(3, 3, rng)};
    Tensor x = Tensor::randn({1, 3}, rng);
    std::vector<LstmState> prev = {zero_state(3), zero_state(3)};

    std::vector<LstmState> out = stack_step(layers, x, prev);
    REQUIRE(out.size() == 2);
    // layer 0 must agree with a direct single-layer step
    LstmState direct = lstm_step(layers[0], x, prev[0]);
    for (int64_t i = 0; i < 3; ++i) CHECK(out[0].h.data()[i] == direct.h.data()[i]);
    // layer 1 consumes layer 0's fresh h, not the input
    LstmState top = lstm_step(layers[1], direct.h, prev[1]);
    for (int64_t i = 0; i < 3; ++i) CHECK(out[1].h.data()[i] == top.h.data()[i]);

    auto fn = [&](const std::vector<Tensor>& in) {
        std::vector<LstmLayer> ls = {{in[0], in[1], in[2]}, {in[3], in[4], in[5]}};
        return sum(stack_step(ls, in[6], prev).back().h);
    };
    CHECK(grad_check(fn, {layers[0].wx, layers[0].wh, layers[0].b, layers[1].wx, layers[1].wh,
                          layers[1].b, x}) < tol::kFdRelTol);
}

TEST_CASE("corruption core follows the keep mask and group order exactly") {
    std::vector<int> sent = {10, 11, 12, 13, 14};

    // survivors 10,12,13,14 pair into (10,12)(13,14); order swaps the pairs
    CHECK(corrupt_core(sent, {1, 0, 1, 1, 1}, {1, 0}) == std::vector<int>({13, 14, 10, 12}));
    // identity order keeps the original arrangement
    CHECK(corrupt_core(sent, {1, 0, 1, 1, 1}, {0, 1}) == std::vector<int>({10, 12, 13, 14}));
    // odd survivor count leaves a singleton last group
    CHECK(corrupt_core(sent, {1, 1, 1, 0, 0}, {1, 0}) == std::vector<int>({12, 10, 11}));
    // single survivor
    CHECK(corrupt_core(sent, {0, 0, 0, 1, 0}, {0}) == std::vector<int>({13}));

    CHECK_THROWS_AS(corrupt_core(sent, {1, 1}, {0}), ShapeError);
    CHECK_THROWS_AS(corrupt_core(sent, {0, 0, 0, 0, 0}, {}), ConfigError);
    CHECK_THROWS_AS(corrupt_core(sent, {1, 1, 1, 1, 0}, {0, 0}), ConfigError);
    CHECK_THROWS_AS(corrupt_core({}, {}, {}), EmptyInputError);
}

TEST_CASE("random corruption keeps a nonempty multiset subset near half size") {
    std::vector<int> sent = {1, 2, 3, 4, 5, 6};
    Rng rng(73);
    int64_t total_kept = 0;
    bool any_reordered = false;
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<int> out = corrupt(sent, rng);
        REQUIRE_FALSE(out.empty());
        total_kept += static_cast<int64_t>(out.size());

        // multiset containment in the original sentence
        std::multiset<int> orig(sent.begin(), sent.end());
        for (int w : out) {
            auto it = orig.find(w);
            REQUIRE(it != orig.end());
            orig.erase(it);
        }
        std::vector<int> sorted = out;
        std::sort(sorted.begin(), sorted.end());
        bool is_sorted_subseq = std::is_sorted(out.begin(), out.end());
        any_reordered = any_reordered || (!is_sorted_subseq && sorted != out);
    }
    double keep_rate = static_cast<double>(total_kept) / (2000.0 * 6.0);
    CHECK(keep_rate > 0.45);
    CHECK(keep_rate < 0.55);
    CHECK(any_reordered); // the group shuffle must actually permute sometimes

    // all-dropped coins force a single survivor instead of an empty output
    for (uint64_t seed = 0; seed < 4000; ++seed) {
        Rng probe(seed);
        bool all_dropped = true;
        for (int i = 0; i < 3; ++i) all_dropped = all_dropped && !probe.bernoulli(0.5);
        if (!all_dropped) continue;
        Rng replay(seed);
        std::vector<int> out = corrupt({7, 8, 9}, replay);
        CHECK(out.size() == 1);
        return;
    }
    FAIL("no all-drop seed found");
}

TEST_CASE("vocabulary logits are plain inner products") {
    Tensor emb = Tensor::from_data({3, 2}, {0, 0, 1, 2, -1, 1});
    Tensor h = Tensor::from_data({1, 2}, {2, 3});
    Tensor logits = vocab_logits(h, emb);
    REQUIRE(logits.shape() == Shape{1, 3});
    CHECK(logits.at(0, 0) == 0.0);
    CHECK(logits.at(0, 1) == 8.0);
    CHECK(logits.at(0, 2) == 1.0);
}

TEST_CASE("greedy word lookup masks structural specials but allows the end marker") {
    // embedding rows: pad, bos, eos, unk, then two words; h aligns best with
    // the masked rows, so the first selectable winner must be row eos
    Tensor emb = Tensor::from_data({6, 2},
                                   {9, 9,   // pad
                                    8, 8,   // bos
                                    2, 0,   // eos
                                    7, 7,   // unk
                                    1, 0,   // word 4
                                    0, 1}); // word 5
    Tensor h = Tensor::from_data({1, 2}, {1.0, 0.9});
    CHECK(argmax_word(h, emb) == Vocab::kEos);

    Tensor h2 = Tensor::from_data({1, 2}, {-1.0, 1.0});
    CHECK(argmax_word(h2, emb) == 5);
}

TEST_CASE("static top-k encoding is the softmax mix of the best embeddings") {
    Dictionary dict = axis_dict(2);
    // logits over selectable rows: <h, e1> = ln 5, <h, e2> = ln 3
    Tensor h = Tensor::from_data({1, 2}, {std::log(5.0), std::log(3.0)});
    Tensor s = topk_static_encode(h, dict, 2);
    CHECK(s.at(0, 0) == doctest::Approx(0.625).epsilon(1e-12)); // 5/8
    CHECK(s.at(0, 1) == doctest::Approx(0.375).epsilon(1e-12)); // 3/8

    // K = 1 returns exactly the top embedding row
    Tensor s1 = topk_static_encode(h, dict, 1);
    CHECK(s1.at(0, 0) == 1.0);
    CHECK(s1.at(0, 1) == 0.0);

    // softmax(1, 0) mix
    Tensor h10 = Tensor::from_data({1, 2}, {1.0, 0.0});
    Tensor s10 = topk_static_encode(h10, dict, 2);
    CHECK(s10.at(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(s10.at(0, 1) == doctest::Approx(0.2689414213699951).epsilon(1e-12));

    CHECK_THROWS_AS(topk_static_encode(h, dict, 0), ConfigError);
    CHECK_THROWS_AS(topk_static_encode(h, dict, 3), ConfigError); // only 2 selectable
}

TEST_CASE("top-k coefficients are convex for both encoder variants") {
    const int64_t d = 6;
    Dictionary dict = axis_dict(d);
    Rng rng(74);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor h = Tensor::randn({1, d}, rng);
        for (int64_t k : {int64_t(1), int64_t(3), int64_t(6)}) {
            Tensor s = topk_static_encode(h, dict, k);
            double sum = 0.0;
            int64_t nonzero = 0;
            for (int64_t i = 0; i < d; ++i) {
                double coeff = dot_row(dict.atoms, i + 1, s.data());
                CHECK(coeff >= -tol::kConvexSumTol);
                sum += coeff;
                if (coeff > tol::kConvexSumTol) ++nonzero;
            }
            CHECK(std::abs(sum - 1.0) <= tol::kConvexSumTol);
            CHECK(nonzero <= k);
        }
        for (double delta : {-100.0, 0.0, 0.4}) {
            Tensor s = topk_dynamic_encode(h, dict, delta);
            double sum = 0.0;
            for (int64_t i = 0; i < d; ++i) {
                double coeff = dot_row(dict.atoms, i + 1, s.data());
                CHECK(coeff >= -tol::kConvexSumTol);
                sum += coeff;
            }
            CHECK(std::abs(sum - 1.0) <= tol::kConvexSumTol);
        }
    }
}

TEST_CASE("dynamic top-k thresholds logits and falls back to the argmax row") {
    Dictionary dict = axis_dict(2);
    Tensor h = Tensor::from_data({1, 2}, {0.3, 0.1});

    // threshold above every logit: exactly the best single row comes back
    Tensor s = topk_dynamic_encode(h, dict, 0.5);
    CHECK(s.at(0, 0) == 1.0);
    CHECK(s.at(0, 1) == 0.0);

    // threshold between the logits keeps only the first word
    Tensor mid = topk_dynamic_encode(h, dict, 0.2);
    CHECK(mid.at(0, 0) == 1.0);
    CHECK(mid.at(0, 1) == 0.0);

    // threshold below both: softmax over the pair
    Tensor both = topk_dynamic_encode(h, dict, 0.05);
    double z = std::exp(0.3) + std::exp(0.1);
    CHECK(both.at(0, 0) == doctest::Approx(std::exp(0.3) / z).epsilon(1e-12));
    CHECK(both.at(0, 1) == doctest::Approx(std::exp(0.1) / z).epsilon(1e-12));
}

TEST_CASE("encoder dispatch covers every kind") {
    CHECK(parse_encoder_kind("sparse") == EncoderKind::kSparse);
    CHECK(parse_encoder_kind("topk-static") == EncoderKind::kTopkStatic);
    CHECK(parse_encoder_kind("topk-dynamic") == EncoderKind::kTopkDynamic);
    CHECK(parse_encoder_kind("none") == EncoderKind::kNone);
    CHECK_THROWS_AS(parse_encoder_kind("fancy"), ConfigError);
    for (auto k : {EncoderKind::kSparse, EncoderKind::kTopkStatic, EncoderKind::kTopkDynamic,
                   EncoderKind::kNone})
        CHECK(parse_encoder_kind(encoder_kind_name(k)) == k);

    Rng rng(75);
    Dictionary dict = axis_dict(4);
    Tensor h = Tensor::randn({1, 4}, rng);

    EncoderSpec none;
    none.kind = EncoderKind::kNone;
    Tensor passthrough = encode_state(h, dict, none);
    for (int64_t i = 0; i < 4; ++i) CHECK(passthrough.data()[i] == h.data()[i]);

    EncoderSpec sparse_spec;
    sparse_spec.kind = EncoderKind::kSparse;
    sparse_spec.sparse_iters = 2;
    SparseCode code;
    Tensor s = encode_state(h, dict, sparse_spec, &code);
    SparseCode direct = sparse_encode(h.data(), dict, 2);
    CHECK(code.indices == direct.indices);
    for (int64_t i = 0; i < 4; ++i)
        CHECK(s.data()[i] == doctest::Approx(direct.reconstruction[static_cast<size_t>(i)])
                                 .epsilon(1e-14));

    // sequence version = row-wise single version
    Tensor H = Tensor::randn({3, 4}, rng);
    std::vector<SparseCode> codes;
    Tensor S = encode_states(H, dict, sparse_spec, &codes);
    CHECK(codes.size() == 3);
    for (int64_t t = 0; t < 3; ++t) {
        Tensor one = encode_state(slice_rows(H, t, 1), dict, sparse_spec);
        for (int64_t i = 0; i < 4; ++i)
            CHECK(S.at(t, i) == doctest::Approx(one.data()[static_cast<size_t>(i)])
                                    .epsilon(1e-14));
    }
}

TEST_CASE("gradients flow through the static top-k mix") {
    Dictionary dict = axis_dict(3);
    // well-separated logits keep the selected set stable under perturbation
    Tensor h = Tensor::from_data({1, 3}, {2.0, 0.5, -1.0});
    Rng prng(76);
    Tensor probe = Tensor::randn({1, 3}, prng);
    auto fn = [&](const std::vector<Tensor>& in) {
        return sum(mul(topk_static_encode(in[0], dict, 2), probe));
    };
    CHECK(grad_check(fn, {h}) < tol::kFdRelTol);
}

TEST_CASE("critic scores reduce to the bias for zero weights") {
    CriticParams critic{Tensor::zeros({3, 4, 5}), Tensor::zeros({5, 1}),
                        Tensor::from_data({1, 1}, {-2.5})};
    Rng rng(77);
    Tensor s = Tensor::randn({6, 4}, rng);
    CHECK(critic_score(critic, s).item() == -2.5);
}

TEST_CASE("sequences shorter than the filter window are padded with zero rows") {
    Rng rng(78);
    CriticParams critic = make_critic(4, 5, 3, rng);
    Tensor one_row = Tensor::randn({1, 4}, rng);

    std::vector<double> padded(3 * 4, 0.0);
    for (int64_t c = 0; c < 4; ++c) padded[static_cast<size_t>(c)] = one_row.at(0, c);
    Tensor explicit_pad = Tensor::from_data({3, 4}, padded);

    CHECK(critic_score(critic, one_row).item() ==
          doctest::Approx(critic_score(critic, explicit_pad).item()).epsilon(1e-14));
}

TEST_CASE("critic gradients match finite differences") {
    Rng rng(79);
    CriticParams critic = make_critic(3, 4, 2, rng);
    Tensor s = Tensor::randn({5, 3}, rng);
    for (auto& v : s.raw()) v *= 1.5; // keep relu inputs off their kinks

    auto fn = [&](const std::vector<Tensor>& in) {
        CriticParams c{in[0], in[1], in[2]};
        return critic_score(c, in[3]);
    };
    CHECK(grad_check(fn, {critic.filters, critic.w, critic.b, s}) < tol::kFdRelTol);
}

TEST_CASE("generator rollouts produce one state, encoding, and word per step") {
    Rng rng(80);
    const int64_t d = 6;
    GeneratorParams gen = make_generator(d, 2, rng);
    Vocab vocab = build_vocab({{"red", "cat", "dog", "runs"}});
    Tensor emb = random_embeddings(vocab, d, rng);
    Dictionary dict = make_dictionary(emb, {Vocab::kPad});
    EncoderSpec spec;
    spec.sparse_iters = 2;

    Tensor z = Tensor::randn({1, d}, rng);
    GenRollout roll = generate_sequence(gen, emb, z, 5, dict, spec, FeedbackMode::kReconstruction);
    CHECK(roll.H.shape() == Shape{5, d});
    CHECK(roll.S.shape() == Shape{5, d});
    CHECK(roll.words.size() == 5);
    CHECK(roll.codes.size() == 5);
    for (int w : roll.words) {
        CHECK(w != Vocab::kPad);
        CHECK(w != Vocab::kBos);
        CHECK(w != Vocab::kUnk);
        CHECK(w < vocab.size());
    }

    // same z, argmax feedback: states may diverge but shapes and words hold
    GenRollout greedy = generate_sequence(gen, emb, z, 5, dict, spec, FeedbackMode::kArgmax);
    CHECK(greedy.H.shape() == Shape{5, d});
    CHECK(greedy.words.size() == 5);

    // deterministic: the same inputs replay the same rollout
    GenRollout again = generate_sequence(gen, emb, z, 5, dict, spec, FeedbackMode::kReconstruction);
    CHECK(again.words == roll.words);
    for (int64_t i = 0; i < roll.S.numel(); ++i) CHECK(again.S.data()[i] == roll.S.data()[i]);

    CHECK_THROWS_AS(generate_sequence(gen, emb, z, 0, dict, spec, FeedbackMode::kArgmax),
                    ConfigError);
    CHECK_THROWS_AS(
        generate_sequence(gen, emb, Tensor::zeros({1, d + 1}), 3, dict, spec, FeedbackMode::kArgmax),
        ShapeError);
}

TEST_CASE("adversarial rollouts backpropagate into generator weights and atoms") {
    Rng rng(81);
    const int64_t d = 5;
    GeneratorParams gen = make_generator(d, 1, rng);
    Vocab vocab = build_vocab({{"a", "b", "c"}});
    Tensor emb = random_embeddings(vocab, d, rng);
    Dictionary dict = make_dictionary(emb, {Vocab::kPad});
    emb.set_requires_grad(true);
    ParamSet params;
    register_params(gen, "gen", params);
    params.set_requires_grad(true);

    EncoderSpec spec;
    spec.sparse_iters = 2;
    Tensor z = Tensor::randn({1, d}, rng);
    GenRollout roll = generate_sequence(gen, emb, z, 4, dict, spec, FeedbackMode::kReconstruction);
    backward(sum(roll.S));

    CHECK(emb.grad().defined()); // feedback and atom routes both reach it
    for (auto& [name, t] : params.items()) {
        INFO(name);
        CHECK(t.grad().defined());
    }
}

TEST_CASE("the denoising reconstruction is shaped by the clean content") {
    Rng rng(82);
    const int64_t d = 6;
    DaeParams dae = make_dae(d, 2, rng);
    Vocab vocab = build_vocab({{"red", "cat", "sees", "dog"}});
    Tensor emb = random_embeddings(vocab, d, rng);
    Dictionary dict = make_dictionary(emb, {Vocab::kPad});
    EncoderSpec spec;
    spec.sparse_iters = 2;

    auto ids = tokenize({"red", "cat", "sees"}, vocab, 40, nullptr);
    DaeOutput out = dae_reconstruct(dae, emb, ids, dict, spec);
    CHECK(out.H.shape() == Shape{3, d}); // one decoder state per content token
    CHECK(out.S.shape() == Shape{3, d});
    CHECK(out.codes.size() == 3);

    // deterministic without corruption
    DaeOutput again = dae_reconstruct(dae, emb, ids, dict, spec);
    for (int64_t i = 0; i < out.H.numel(); ++i) CHECK(again.H.data()[i] == out.H.data()[i]);

    // corrupted runs replay exactly under the same generator state
    Rng c1(5), c2(5);
    DaeOutput r1 = dae_reconstruct(dae, emb, ids, dict, spec, true, &c1);
    DaeOutput r2 = dae_reconstruct(dae, emb, ids, dict, spec, true, &c2);
    for (int64_t i = 0; i < r1.H.numel(); ++i) CHECK(r1.H.data()[i] == r2.H.data()[i]);

    // the encoder order matters: reversing the content changes the states
    auto rev = tokenize({"sees", "cat", "red"}, vocab, 40, nullptr);
    DaeOutput flipped = dae_reconstruct(dae, emb, rev, dict, spec);
    double diff = 0.0;
    for (int64_t i = 0; i < out.H.numel(); ++i)
        diff += std::abs(flipped.H.data()[i] - out.H.data()[i]);
    CHECK(diff > 1e-6);

    CHECK_THROWS_AS(dae_reconstruct(dae, emb, {Vocab::kBos, Vocab::kEos}, dict, spec),
                    EmptyInputError);
    CHECK_THROWS_AS(dae_reconstruct(dae, emb, ids, dict, spec, true, nullptr), ConfigError);

    // gradients reach the encoder, decoder, and embedding
    emb.set_requires_grad(true);
    ParamSet params;
    register_params(dae, "dae", params);
    params.set_requires_grad(true);
    DaeOutput traced = dae_reconstruct(dae, emb, ids, dict, spec);
    backward(sum(traced.S));
    CHECK(emb.grad().defined());
    for (auto& [name, t] : params.items()) {
        INFO(name);
        CHECK(t.grad().defined());
    }
}

TEST_CASE("content extraction strips every structural marker") {
    std::vector<int> wrapped = {Vocab::kBos, 7, Vocab::kUnk, 9, Vocab::kEos, Vocab::kPad,
                                Vocab::kPad};
    CHECK(content_tokens(wrapped) == std::vector<int>({7, Vocab::kUnk, 9}));
    CHECK(content_tokens({Vocab::kBos, Vocab::kEos}).empty());
}

TEST_CASE("constructors validate their sizes and register distinct names") {
    Rng rng(83);
    CHECK_THROWS_AS(make_generator(4, 0, rng), ConfigError);
    CHECK_THROWS_AS(make_dae(4, 0, rng), ConfigError);

    GeneratorParams gen = make_generator(4, 2, rng);
    CHECK(gen.layers.size() == 2);
    CHECK(gen.layers[0].wx.shape() == Shape{4, 16});
    CHECK(gen.layers[0].wh.shape() == Shape{4, 16});
    CHECK(gen.layers[0].b.shape() == Shape{1, 16});

    DaeParams dae = make_dae(4, 2, rng);
    CriticParams critic = make_critic(4, 6, 3, rng);
    CHECK(critic.filters.shape() == Shape{3, 4, 6});
    CHECK(critic.w.shape() == Shape{6, 1});
    CHECK(critic.b.shape() == Shape{1, 1});

    ParamSet all;
    register_params(gen, "gen", all);
    register_params(dae, "dae", all);
    register_params(critic, "critic", all);
    std::set<std::string> names;
    for (auto& [name, t] : all.items()) names.insert(name);
    CHECK(names.size() == all.items().size()); // no collisions
    CHECK(names.count("gen.l0.wx") == 1);
    CHECK(names.count("dae.enc_bwd.l1.b") == 1);
    CHECK(names.count("critic.filters") == 1);
}
