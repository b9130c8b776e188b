#include "sparsegan/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "sparsegan/ops.hpp"
#include "sparsegan/tolerances.hpp"

namespace sparsegan {

namespace {

// Seed streams. 1 and 2 are consumed by make_model / embedding init; the
// rest keep the three training phases decorrelated under one seed.
constexpr uint64_t kStreamParams = 1;
constexpr uint64_t kStreamDaeLoop = 3;
constexpr uint64_t kStreamDaeBatches = 4;
constexpr uint64_t kStreamGenLoop = 5;
constexpr uint64_t kStreamGenBatches = 6;
constexpr uint64_t kStreamAdvLoop = 7;
constexpr uint64_t kStreamAdvBatches = 8;

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
}

Tensor batch_mean(const std::vector<Tensor>& scalars) {
    Tensor total = scalars[0];
    for (size_t i = 1; i < scalars.size(); ++i) total = add(total, scalars[i]);
    return scale(total, 1.0 / static_cast<double>(scalars.size()));
}

std::string grad_norm_dump(const ParamSet& set) {
    std::string out;
    for (const auto& [name, t] : set.items()) {
        Tensor g = t.grad();
        double sq = 0.0;
        if (g.defined())
            for (double v : g.data()) sq += v * v;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", std::sqrt(sq));
        out += "\n  |grad " + name + "| = " + (g.defined() ? buf : "(unset)");
    }
    return out;
}

void copy_named_tensors(const Checkpoint& ck, const ParamSet& into) {
    for (const auto& [name, t] : into.items()) {
        Tensor src = ck.require_tensor(name);
        if (src.shape() != t.shape()) {
            throw ShapeError("checkpoint tensor '" + name + "' has the wrong shape");
        }
        Tensor dst = t; // shared handle; values land in the live parameter
        std::copy(src.data().begin(), src.data().end(), dst.raw().begin());
    }
}

} // namespace

// ---- TrainConfig ------------------------------------------------------------

void TrainConfig::validate() const {
    require(lambda >= 0.0, "lambda must be >= 0");
    require(n_critic >= 1, "n_critic must be >= 1");
    require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must be in [0, 1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must be in [0, 1)");
    require(adam_eps > 0.0, "adam_eps must be positive");
    require(lr_pretrain > 0.0, "lr_pretrain must be positive");
    require(lr_adv > 0.0, "lr_adv must be positive");
    require(batch >= 1, "batch must be >= 1");
    require(max_len >= 3, "max_len must be >= 3");
    require(sparse_iters >= 1, "sparse_iters must be >= 1");
    require(max_iters >= 0, "max_iters must be >= 0");
    require(dim >= 1, "dim must be >= 1");
    require(layers >= 1, "layers must be >= 1");
    require(feature_maps >= 1, "feature_maps must be >= 1");
    require(filter_width >= 1, "filter_width must be >= 1");
    require(topk >= 1, "topk must be >= 1");
    require(checkpoint_every >= 1, "checkpoint_every must be >= 1");
    require(dae_epochs >= 0, "dae_epochs must be >= 0");
    require(gen_epochs >= 0, "gen_epochs must be >= 0");
    require(gp_space == "sparse" || gp_space == "hidden", "gp_space must be sparse or hidden");
    parse_encoder_kind(encoder); // throws on unknown names
}

EncoderSpec TrainConfig::encoder_spec() const {
    EncoderSpec s;
    s.kind = parse_encoder_kind(encoder);
    s.sparse_iters = sparse_iters;
    s.sparse_opts.abs_selection = abs_selection;
    s.topk = topk;
    s.delta = topk_delta;
    return s;
}

std::string TrainConfig::to_json() const {
    nlohmann::ordered_json j;
    j["lambda"] = lambda;
    j["n_critic"] = n_critic;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["adam_eps"] = adam_eps;
    j["lr_pretrain"] = lr_pretrain;
    j["lr_adv"] = lr_adv;
    j["batch"] = batch;
    j["max_len"] = max_len;
    j["sparse_iters"] = sparse_iters;
    j["max_iters"] = max_iters;
    j["seed"] = seed;
    j["encoder"] = encoder;
    j["dim"] = dim;
    j["layers"] = layers;
    j["feature_maps"] = feature_maps;
    j["filter_width"] = filter_width;
    j["topk"] = topk;
    j["topk_delta"] = topk_delta;
    j["freeze_embedding"] = freeze_embedding;
    j["abs_selection"] = abs_selection;
    j["gp_space"] = gp_space;
    j["checkpoint_every"] = checkpoint_every;
    j["dae_epochs"] = dae_epochs;
    j["gen_epochs"] = gen_epochs;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config json: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config json: top level must be an object");

    TrainConfig c;
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "lambda") c.lambda = val.get<double>();
            else if (key == "n_critic") c.n_critic = val.get<int64_t>();
            else if (key == "beta1") c.beta1 = val.get<double>();
            else if (key == "beta2") c.beta2 = val.get<double>();
            else if (key == "adam_eps") c.adam_eps = val.get<double>();
            else if (key == "lr_pretrain") c.lr_pretrain = val.get<double>();
            else if (key == "lr_adv") c.lr_adv = val.get<double>();
            else if (key == "batch") c.batch = val.get<int64_t>();
            else if (key == "max_len") c.max_len = val.get<int64_t>();
            else if (key == "sparse_iters") c.sparse_iters = val.get<int64_t>();
            else if (key == "max_iters") c.max_iters = val.get<int64_t>();
            else if (key == "seed") c.seed = val.get<uint64_t>();
            else if (key == "encoder") c.encoder = val.get<std::string>();
            else if (key == "dim") c.dim = val.get<int64_t>();
            else if (key == "layers") c.layers = val.get<int64_t>();
            else if (key == "feature_maps") c.feature_maps = val.get<int64_t>();
            else if (key == "filter_width") c.filter_width = val.get<int64_t>();
            else if (key == "topk") c.topk = val.get<int64_t>();
            else if (key == "topk_delta") c.topk_delta = val.get<double>();
            else if (key == "freeze_embedding") c.freeze_embedding = val.get<bool>();
            else if (key == "abs_selection") c.abs_selection = val.get<bool>();
            else if (key == "gp_space") c.gp_space = val.get<std::string>();
            else if (key == "checkpoint_every") c.checkpoint_every = val.get<int64_t>();
            else if (key == "dae_epochs") c.dae_epochs = val.get<int64_t>();
            else if (key == "gen_epochs") c.gen_epochs = val.get<int64_t>();
            else throw ConfigError("config: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config json: ") + e.what());
    }
    return c;
}

// ---- Adam -------------------------------------------------------------------

Adam::Adam(ParamSet params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& item : params_.items()) {
        m_.emplace_back(static_cast<size_t>(item.second.numel()), 0.0);
        v_.emplace_back(static_cast<size_t>(item.second.numel()), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    size_t pi = 0;
    for (const auto& item : params_.items()) {
        Tensor p = item.second;
        Tensor g = p.grad();
        std::span<double> w = p.raw();
        auto& m = m_[pi];
        auto& v = v_[pi];
        const double* gd = g.defined() ? g.data().data() : nullptr;
        for (size_t i = 0; i < w.size(); ++i) {
            const double gi = gd ? gd[i] : 0.0;
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
            w[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
        ++pi;
    }
}

void Adam::save(Checkpoint& ck, const std::string& prefix) const {
    size_t pi = 0;
    for (const auto& [name, t] : params_.items()) {
        ck.add_tensor(prefix + ".m." + name, Tensor::from_data(t.shape(), m_[pi]));
        ck.add_tensor(prefix + ".v." + name, Tensor::from_data(t.shape(), v_[pi]));
        ++pi;
    }
    ck.add_counter(prefix + ".t", t_);
}

void Adam::load(const Checkpoint& ck, const std::string& prefix) {
    size_t pi = 0;
    for (const auto& [name, t] : params_.items()) {
        Tensor m = ck.require_tensor(prefix + ".m." + name);
        Tensor v = ck.require_tensor(prefix + ".v." + name);
        if (m.shape() != t.shape() || v.shape() != t.shape()) {
            throw ShapeError("optimizer state for '" + name + "' has the wrong shape");
        }
        m_[pi].assign(m.data().begin(), m.data().end());
        v_[pi].assign(v.data().begin(), v.data().end());
        ++pi;
    }
    t_ = ck.require_counter(prefix + ".t");
}

// ---- Model ------------------------------------------------------------------

ParamSet Model::gen_params() const {
    ParamSet s;
    register_params(gen, "gen", s);
    if (!config.freeze_embedding) s.add("embedding", embedding);
    return s;
}

ParamSet Model::dae_params() const {
    ParamSet s;
    register_params(dae, "dae", s);
    if (!config.freeze_embedding) s.add("embedding", embedding);
    return s;
}

ParamSet Model::critic_params() const {
    ParamSet s;
    register_params(critic, "critic", s);
    return s;
}

ParamSet Model::all_params() const {
    ParamSet s;
    s.add("embedding", embedding);
    register_params(gen, "gen", s);
    register_params(dae, "dae", s);
    register_params(critic, "critic", s);
    return s;
}

Model make_model(const Vocab& vocab, const Tensor& embedding, const TrainConfig& config) {
    config.validate();
    if (embedding.rows() != vocab.size() || embedding.cols() != config.dim) {
        throw ShapeError("make_model: embedding is " + std::to_string(embedding.rows()) + "x" +
                         std::to_string(embedding.cols()) + ", expected " +
                         std::to_string(vocab.size()) + "x" + std::to_string(config.dim));
    }
    Rng rng = Rng::derive(config.seed, kStreamParams);
    Model m;
    m.config = config;
    m.vocab = vocab;
    m.embedding = embedding;
    m.dict = make_dictionary(embedding, {Vocab::kPad});
    m.gen = make_generator(config.dim, config.layers, rng);
    m.dae = make_dae(config.dim, config.layers, rng);
    m.critic = make_critic(config.dim, config.feature_maps, config.filter_width, rng);
    return m;
}

Checkpoint model_checkpoint(const Model& model) {
    Checkpoint ck;
    ParamSet all = model.all_params();
    for (const auto& [name, t] : all.items()) {
        // value copy: a snapshot must not alias the live, still-training buffers
        std::vector<double> values(t.data().begin(), t.data().end());
        ck.add_tensor(name, Tensor::from_data(t.shape(), std::move(values)));
    }
    ck.add_blob("vocab", vocab_to_json(model.vocab));
    ck.add_blob("config", model.config.to_json());
    return ck;
}

Model model_from_checkpoint(const Checkpoint& ck) {
    TrainConfig config = TrainConfig::from_json(ck.require_blob("config"));
    Vocab vocab = vocab_from_json(ck.require_blob("vocab"));
    Tensor stored = ck.require_tensor("embedding");
    std::vector<double> values(stored.data().begin(), stored.data().end());
    Model m = make_model(vocab, Tensor::from_data(stored.shape(), std::move(values)), config);
    copy_named_tensors(ck, m.all_params());
    return m;
}

// ---- Pretraining --------------------------------------------------------------

namespace {

struct EpochTally {
    double loss_tokens = 0.0; // sum of per-token loss * token count
    int64_t tokens = 0;
    int64_t correct = 0;

    void add(double batch_loss, const Tensor& logits, const std::vector<int>& targets) {
        const int64_t rows = logits.rows();
        const int64_t cols = logits.cols();
        loss_tokens += batch_loss * static_cast<double>(rows);
        tokens += rows;
        std::span<const double> d = logits.data();
        for (int64_t r = 0; r < rows; ++r) {
            const double* p = d.data() + r * cols;
            int64_t best = 0;
            for (int64_t c = 1; c < cols; ++c)
                if (p[c] > p[best]) best = c;
            if (best == targets[static_cast<size_t>(r)]) ++correct;
        }
    }

    double loss() const { return tokens ? loss_tokens / static_cast<double>(tokens) : 0.0; }
    double accuracy() const { return tokens ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0; }
};

int64_t batches_per_epoch(const Corpus& corpus, int64_t batch) {
    const int64_t n = static_cast<int64_t>(corpus.sentences.size());
    return (n + batch - 1) / batch;
}

PretrainStats finish_pretrain(int64_t epochs, const EpochTally& last) {
    PretrainStats st;
    st.epochs = epochs;
    st.loss = last.loss();
    st.accuracy = last.accuracy();
    st.perplexity = std::exp(st.loss);
    return st;
}

} // namespace

PretrainStats pretrain_dae(Model& model, const Corpus& corpus, const EpochHook& hook) {
    const TrainConfig& cfg = model.config;
    cfg.validate();
    if (corpus.sentences.empty()) throw ConfigError("pretrain_dae: empty corpus");

    ParamSet set = model.dae_params();
    set.set_requires_grad(true);
    Adam adam(set, cfg.lr_pretrain, cfg.beta1, cfg.beta2, cfg.adam_eps);
    Rng rng = Rng::derive(cfg.seed, kStreamDaeLoop);
    BatchIter batches(corpus, cfg.batch, Rng::derive(cfg.seed, kStreamDaeBatches).next_u64());
    EncoderSpec passthrough;
    passthrough.kind = EncoderKind::kNone;

    const int64_t per_epoch = batches_per_epoch(corpus, cfg.batch);
    EpochTally tally;
    for (int64_t epoch = 0; epoch < cfg.dae_epochs; ++epoch) {
        tally = EpochTally{};
        for (int64_t bi = 0; bi < per_epoch; ++bi) {
            Batch batch = batches.next();
            std::vector<Tensor> blocks;
            std::vector<int> targets;
            for (int64_t r = 0; r < batch.size; ++r) {
                std::vector<int> sent = batch.row(r);
                DaeOutput out = dae_reconstruct(model.dae, model.embedding, sent, model.dict,
                                                passthrough, /*corrupt_input=*/true, &rng);
                blocks.push_back(matmul(out.H, transpose(model.embedding)));
                for (int w : content_tokens(sent)) targets.push_back(w);
            }
            Tensor logits = blocks.size() == 1 ? blocks[0] : concat_rows(blocks);
            Tensor loss = cross_entropy_rows(logits, targets,
                                             std::vector<double>(targets.size(), 1.0));
            const double lv = loss.item();
            if (!std::isfinite(lv)) {
                throw TrainAbortError("pretrain_dae: non-finite loss in epoch " +
                                      std::to_string(epoch));
            }
            tally.add(lv, logits, targets);
            set.zero_grads();
            backward(loss);
            adam.step();
        }
        if (hook) hook(epoch, tally.loss(), tally.accuracy());
    }
    return finish_pretrain(cfg.dae_epochs, tally);
}

PretrainStats pretrain_generator(Model& model, const Corpus& corpus, const EpochHook& hook) {
    const TrainConfig& cfg = model.config;
    cfg.validate();
    if (corpus.sentences.empty()) throw ConfigError("pretrain_generator: empty corpus");

    ParamSet set = model.gen_params();
    set.set_requires_grad(true);
    Adam adam(set, cfg.lr_pretrain, cfg.beta1, cfg.beta2, cfg.adam_eps);
    // Each sentence gets a fixed latent derived from its content: marginally
    // N(0,1) like generation-time draws, but stable across epochs so the
    // model can bind sentences to latents (the role a per-sentence posterior
    // would play).
    const uint64_t z_salt = Rng::derive(cfg.seed, kStreamGenLoop).next_u64();
    BatchIter batches(corpus, cfg.batch, Rng::derive(cfg.seed, kStreamGenBatches).next_u64());

    const int64_t per_epoch = batches_per_epoch(corpus, cfg.batch);
    EpochTally tally;
    for (int64_t epoch = 0; epoch < cfg.gen_epochs; ++epoch) {
        tally = EpochTally{};
        for (int64_t bi = 0; bi < per_epoch; ++bi) {
            Batch batch = batches.next();
            std::vector<Tensor> blocks;
            std::vector<int> targets;
            for (int64_t r = 0; r < batch.size; ++r) {
                std::vector<int> content = content_tokens(batch.row(r));
                // teacher forcing: inputs [BOS, w1..wn], targets [w1..wn, EOS]
                std::vector<int64_t> inputs{Vocab::kBos};
                for (int w : content) {
                    inputs.push_back(w);
                    targets.push_back(w);
                }
                targets.push_back(Vocab::kEos);

                uint64_t h = z_salt;
                for (int w : content) h = Rng::mix64(h ^ static_cast<uint64_t>(w));
                Rng z_rng(h);
                Tensor z = Tensor::randn({1, cfg.dim}, z_rng);
                std::vector<LstmState> states;
                for (int64_t l = 0; l < cfg.layers; ++l)
                    states.push_back({z, Tensor::zeros({1, cfg.dim})});
                Tensor x = gather_rows(model.embedding, inputs);
                std::vector<Tensor> hs;
                for (int64_t t = 0; t < static_cast<int64_t>(inputs.size()); ++t) {
                    states = stack_step(model.gen.layers, slice_rows(x, t, 1), states);
                    hs.push_back(states.back().h);
                }
                Tensor H = hs.size() == 1 ? hs[0] : concat_rows(hs);
                blocks.push_back(matmul(H, transpose(model.embedding)));
            }
            Tensor logits = blocks.size() == 1 ? blocks[0] : concat_rows(blocks);
            Tensor loss = cross_entropy_rows(logits, targets,
                                             std::vector<double>(targets.size(), 1.0));
            const double lv = loss.item();
            if (!std::isfinite(lv)) {
                throw TrainAbortError("pretrain_generator: non-finite loss in epoch " +
                                      std::to_string(epoch));
            }
            tally.add(lv, logits, targets);
            set.zero_grads();
            backward(loss);
            adam.step();
        }
        if (hook) hook(epoch, tally.loss(), tally.accuracy());
    }
    return finish_pretrain(cfg.gen_epochs, tally);
}

// ---- Gradient penalty ----------------------------------------------------------

PenaltyOut gradient_penalty(const std::function<Tensor(const Tensor&)>& critic_fn,
                            const std::vector<Tensor>& real, const std::vector<Tensor>& fake,
                            double lambda, Rng& rng) {
    if (real.empty()) throw EmptyInputError("gradient_penalty: empty batch");
    if (real.size() != fake.size()) {
        throw ShapeError("gradient_penalty: " + std::to_string(real.size()) + " real vs " +
                         std::to_string(fake.size()) + " fake samples");
    }
    std::vector<Tensor> terms;
    double norm_sum = 0.0;
    for (size_t i = 0; i < real.size(); ++i) {
        const Tensor& a = real[i];
        const Tensor& b = fake[i];
        if (a.shape() != b.shape()) {
            throw ShapeError("gradient_penalty: sample " + std::to_string(i) +
                             " shapes differ");
        }
        const double eps = rng.uniform01();
        std::vector<double> mix(static_cast<size_t>(a.numel()));
        std::span<const double> ad = a.data(), bd = b.data();
        for (size_t j = 0; j < mix.size(); ++j) mix[j] = eps * ad[j] + (1.0 - eps) * bd[j];
        Tensor x_hat = Tensor::from_data(a.shape(), std::move(mix), /*requires_grad=*/true);

        Tensor score = critic_fn(x_hat);
        if (score.numel() != 1) throw ShapeError("gradient_penalty: critic output must be scalar");
        Tensor g = grad_of(score, {x_hat}, /*create_graph=*/true)[0];
        if (!g.defined()) throw Error("gradient_penalty: critic ignores its input");
        Tensor norm = sqrt(add_const(sum(mul(g, g)), tol::kGpNormEps));
        norm_sum += norm.item();
        Tensor diff = add_const(norm, -1.0);
        terms.push_back(mul(diff, diff));
    }
    PenaltyOut out;
    out.value = scale(batch_mean(terms), lambda);
    out.grad_norm_mean = norm_sum / static_cast<double>(real.size());
    return out;
}

// ---- Trainer ----------------------------------------------------------------

Trainer::Trainer(Model& model, const Corpus& corpus)
    : model_(model),
      batches_(corpus, model.config.batch,
               Rng::derive(model.config.seed, kStreamAdvBatches).next_u64()),
      rng_(Rng::derive(model.config.seed, kStreamAdvLoop)),
      gen_set_(model.gen_params()),
      critic_set_(model.critic_params()),
      gen_adam_(gen_set_, model.config.lr_adv, model.config.beta1, model.config.beta2,
                model.config.adam_eps),
      critic_adam_(critic_set_, model.config.lr_adv, model.config.beta1, model.config.beta2,
                   model.config.adam_eps) {
    model_.config.validate();
    model_.all_params().set_requires_grad(true);
    if (model_.config.freeze_embedding) {
        Tensor e = model_.embedding;
        e.set_requires_grad(false);
    }
}

IterStats Trainer::critic_iteration() {
    const TrainConfig& cfg = model_.config;
    const EncoderSpec spec = cfg.encoder_spec();
    const bool gp_hidden = cfg.gp_space == "hidden";

    Batch batch = batches_.next();
    last_lengths_.clear();
    std::vector<Tensor> real_s, fake_s; // critic inputs (encoded space)
    std::vector<Tensor> real_p, fake_p; // penalty interpolation space
    {
        NoGradGuard ng;
        for (int64_t r = 0; r < batch.size; ++r) {
            std::vector<int> sent = batch.row(r);
            const int64_t n = static_cast<int64_t>(sent.size()) - 2;
            last_lengths_.push_back(n);
            DaeOutput real = dae_reconstruct(model_.dae, model_.embedding, sent, model_.dict, spec);
            Tensor z = Tensor::randn({1, cfg.dim}, rng_);
            GenRollout fake = generate_sequence(model_.gen, model_.embedding, z, n, model_.dict,
                                                spec, FeedbackMode::kReconstruction);
            real_s.push_back(real.S);
            fake_s.push_back(fake.S);
            real_p.push_back(gp_hidden ? real.H : real.S);
            fake_p.push_back(gp_hidden ? fake.H : fake.S);
        }
    }

    critic_set_.zero_grads();
    std::vector<Tensor> d_real, d_fake;
    for (int64_t r = 0; r < batch.size; ++r) {
        d_real.push_back(critic_score(model_.critic, real_s[static_cast<size_t>(r)]));
        d_fake.push_back(critic_score(model_.critic, fake_s[static_cast<size_t>(r)]));
    }
    Tensor mean_real = batch_mean(d_real);
    Tensor mean_fake = batch_mean(d_fake);

    std::function<Tensor(const Tensor&)> critic_fn;
    if (gp_hidden) {
        critic_fn = [&](const Tensor& x) {
            return critic_score(model_.critic, encode_states(x, model_.dict, spec));
        };
    } else {
        critic_fn = [&](const Tensor& x) { return critic_score(model_.critic, x); };
    }
    PenaltyOut pen = gradient_penalty(critic_fn, real_p, fake_p, cfg.lambda, rng_);

    Tensor loss = add(sub(mean_fake, mean_real), pen.value);
    const double lv = loss.item();
    if (!std::isfinite(lv)) {
        backward(loss);
        throw TrainAbortError("critic iteration " + std::to_string(iter_) +
                              ": loss is not finite (" + std::to_string(lv) + ")" +
                              grad_norm_dump(critic_set_));
    }
    backward(loss);
    critic_adam_.step();

    IterStats st;
    st.critic_loss = lv;
    st.wasserstein = mean_real.item() - mean_fake.item();
    st.penalty = pen.value.item();
    st.grad_norm_mean = pen.grad_norm_mean;
    return st;
}

double Trainer::generator_iteration() {
    const TrainConfig& cfg = model_.config;
    const EncoderSpec spec = cfg.encoder_spec();
    if (last_lengths_.empty()) {
        // called before any critic iteration: take lengths from a fresh batch
        Batch batch = batches_.next();
        for (int64_t r = 0; r < batch.size; ++r)
            last_lengths_.push_back(batch.lengths[static_cast<size_t>(r)] - 2);
    }

    gen_set_.zero_grads();
    std::vector<Tensor> scores;
    for (int64_t n : last_lengths_) {
        Tensor z = Tensor::randn({1, cfg.dim}, rng_);
        GenRollout roll = generate_sequence(model_.gen, model_.embedding, z, n, model_.dict,
                                            spec, FeedbackMode::kReconstruction);
        scores.push_back(critic_score(model_.critic, roll.S));
    }
    Tensor loss = neg(batch_mean(scores));
    const double lv = loss.item();
    if (!std::isfinite(lv)) {
        backward(loss);
        throw TrainAbortError("generator iteration " + std::to_string(iter_) +
                              ": loss is not finite (" + std::to_string(lv) + ")" +
                              grad_norm_dump(gen_set_));
    }
    backward(loss);
    gen_adam_.step();
    return lv;
}

MetricsRecord Trainer::step() {
    IterStats cs;
    for (int64_t i = 0; i < model_.config.n_critic; ++i) cs = critic_iteration();
    const double gl = generator_iteration();
    ++iter_;

    MetricsRecord r;
    r.iter = iter_;
    r.critic_loss = cs.critic_loss;
    r.gen_loss = gl;
    r.wasserstein = cs.wasserstein;
    r.penalty = cs.penalty;
    r.grad_norm_mean = cs.grad_norm_mean;
    r.wallclock =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return r;
}

Checkpoint Trainer::snapshot() const {
    Checkpoint ck = model_checkpoint(model_);
    gen_adam_.save(ck, "adam.gen");
    critic_adam_.save(ck, "adam.critic");
    ck.add_blob("rng", rng_.save_state());
    ck.add_counter("iter", iter_);
    ck.add_counter("epoch", batches_.epoch());
    ck.add_counter("cursor", batches_.cursor());
    return ck;
}

void Trainer::restore(const Checkpoint& ck) {
    copy_named_tensors(ck, model_.all_params());
    gen_adam_.load(ck, "adam.gen");
    critic_adam_.load(ck, "adam.critic");
    rng_.load_state(ck.require_blob("rng"));
    iter_ = ck.require_counter("iter");
    batches_.seek(ck.require_counter("epoch"), ck.require_counter("cursor"));
    last_lengths_.clear();
}

std::string metrics_json(const MetricsRecord& r) {
    nlohmann::ordered_json j;
    j["iter"] = r.iter;
    j["critic_loss"] = r.critic_loss;
    j["gen_loss"] = r.gen_loss;
    j["wasserstein_estimate"] = r.wasserstein;
    j["penalty"] = r.penalty;
    j["grad_norm_mean"] = r.grad_norm_mean;
    j["wallclock"] = r.wallclock;
    return j.dump();
}

} // namespace sparsegan
