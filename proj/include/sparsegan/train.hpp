#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sparsegan/checkpoint.hpp"
#include "sparsegan/corpus.hpp"
#include "sparsegan/nets.hpp"
#include "sparsegan/rng.hpp"

namespace sparsegan {

// Every knob for pretraining and adversarial training. JSON config keys are
// exactly the field names; CLI flags are the same names with dashes.
struct TrainConfig {
    double lambda = 10.0;  // gradient-penalty weight
    int64_t n_critic = 5;  // critic steps per generator step
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double lr_pretrain = 1e-3;
    double lr_adv = 1e-4;
    int64_t batch = 64;
    int64_t max_len = 40;      // sentence cap, specials included
    int64_t sparse_iters = 10; // greedy rounds per hidden state
    int64_t max_iters = 20000; // generator iterations
    uint64_t seed = 0;
    std::string encoder = "sparse"; // sparse | topk-static | topk-dynamic | none
    int64_t dim = 300;              // embedding width == LSTM hidden width
    int64_t layers = 2;
    int64_t feature_maps = 300;
    int64_t filter_width = 5;
    int64_t topk = 10;
    double topk_delta = 0.0;
    bool freeze_embedding = false; // atoms stay fixed in every phase
    bool abs_selection = false;    // match on |inner product| instead of raw
    std::string gp_space = "sparse"; // interpolate penalty points in sparse | hidden space
    int64_t checkpoint_every = 100;  // generator iterations between snapshots
    int64_t dae_epochs = 5;
    int64_t gen_epochs = 5;

    void validate() const; // throws ConfigError on any out-of-range field
    EncoderSpec encoder_spec() const;

    std::string to_json() const;
    // Missing keys keep defaults; unknown keys are errors.
    static TrainConfig from_json(const std::string& text);
};

// Adam over a named parameter set. Parameters whose gradient buffer is unset
// count as zero-gradient: moments still decay, so the update sequence does
// not depend on which graph happened to touch which tensor.
class Adam {
public:
    Adam(ParamSet params, double lr, double beta1, double beta2, double eps);

    void step(); // one update from the current grad buffers
    void set_lr(double lr) { lr_ = lr; }
    int64_t t() const { return t_; }
    const ParamSet& params() const { return params_; }

    void save(Checkpoint& ck, const std::string& prefix) const;
    void load(const Checkpoint& ck, const std::string& prefix);

private:
    ParamSet params_;
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// The full model bundle. `embedding` and `dict.atoms` are the same storage:
// sparse coding selects atoms from the live (possibly training) embedding.
struct Model {
    TrainConfig config;
    Vocab vocab;
    Tensor embedding; // {N, dim}, pad row pinned at zero
    Dictionary dict;  // banned = {pad}
    GeneratorParams gen;
    DaeParams dae;
    CriticParams critic;

    // Named views over the trainables. Generator and DAE sets include the
    // embedding unless config.freeze_embedding is set; the critic never
    // touches it.
    ParamSet gen_params() const;
    ParamSet dae_params() const;
    ParamSet critic_params() const;
    ParamSet all_params() const; // embedding + every network, for checkpoints
};

// Seed streams: parameters come from derive(seed, 1); the embedding matrix
// (when randomly initialized) from derive(seed, 2). Loop-level randomness
// uses streams 3..8 (see train.cpp).
Model make_model(const Vocab& vocab, const Tensor& embedding, const TrainConfig& config);

// Full state of a model: every parameter tensor plus vocab and config blobs.
Checkpoint model_checkpoint(const Model& model);
Model model_from_checkpoint(const Checkpoint& ck);

struct PretrainStats {
    int64_t epochs = 0;
    double loss = 0.0;       // mean cross entropy per token, last epoch
    double accuracy = 0.0;   // greedy token accuracy, last epoch
    double perplexity = 0.0; // exp(loss)
};

using EpochHook = std::function<void(int64_t epoch, double loss, double accuracy)>;

// Denoising pretraining: the encoder sees a corrupted copy of each sentence,
// the decoder is teacher-forced on the clean one, and the loss is token
// cross entropy of predicting the clean content from the decoder states.
PretrainStats pretrain_dae(Model& model, const Corpus& corpus, const EpochHook& hook = nullptr);

// Teacher-forced next-word training of the generator; each sentence is
// seeded with its own z ~ N(0,1) so generation-time latents stay
// in-distribution. Targets are the content tokens plus the closing EOS.
PretrainStats pretrain_generator(Model& model, const Corpus& corpus,
                                 const EpochHook& hook = nullptr);

struct PenaltyOut {
    Tensor value;                // {1,1} graph node: lambda * mean (||grad|| - 1)^2
    double grad_norm_mean = 0.0; // mean critic gradient norm at the sampled points
};

// One-point interpolation per pair: x_hat = eps * real + (1 - eps) * fake
// with eps ~ U(0,1). The critic gradient at x_hat is taken with the graph
// kept, so the returned value back-propagates into critic parameters.
PenaltyOut gradient_penalty(const std::function<Tensor(const Tensor&)>& critic_fn,
                            const std::vector<Tensor>& real, const std::vector<Tensor>& fake,
                            double lambda, Rng& rng);

struct IterStats {
    double critic_loss = 0.0;
    double wasserstein = 0.0; // mean D(real) - mean D(fake)
    double penalty = 0.0;
    double grad_norm_mean = 0.0;
};

struct MetricsRecord {
    int64_t iter = 0;
    double critic_loss = 0.0;
    double gen_loss = 0.0;
    double wasserstein = 0.0;
    double penalty = 0.0;
    double grad_norm_mean = 0.0;
    double wallclock = 0.0; // seconds since the trainer started; not deterministic
};

std::string metrics_json(const MetricsRecord& r); // one JSON-lines record

// Adversarial loop. One step() = n_critic critic iterations on fresh batches
// followed by one generator iteration reusing the last batch's lengths.
// Everything that varies is derived from config.seed, so identical
// (config, corpus) reproduce identical metrics, and snapshot()/restore()
// resume bit-identically mid-run.
class Trainer {
public:
    Trainer(Model& model, const Corpus& corpus);

    MetricsRecord step();
    int64_t iter() const { return iter_; }

    IterStats critic_iteration();
    double generator_iteration();

    Checkpoint snapshot() const;
    void restore(const Checkpoint& ck);

private:
    Model& model_;
    BatchIter batches_;
    Rng rng_;
    ParamSet gen_set_, critic_set_;
    Adam gen_adam_, critic_adam_;
    int64_t iter_ = 0;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    std::vector<int64_t> last_lengths_; // content lengths of the last critic batch
};

} // namespace sparsegan
