#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "sparsegan/bleu.hpp"
#include "sparsegan/synth_grammar.hpp"
#include "sparsegan/train.hpp"

namespace fs = std::filesystem;
using namespace sparsegan;

namespace {

// ---- logging (SPARSEGAN_LOG = quiet | info | debug) -------------------------

int log_level() {
    static const int level = [] {
        const char* v = std::getenv("SPARSEGAN_LOG");
        if (!v) return 1;
        std::string s(v);
        if (s == "quiet") return 0;
        if (s == "debug") return 2;
        return 1;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << msg << "\n";
}

// ---- run directory with partial-output cleanup ------------------------------

class RunDir {
public:
    explicit RunDir(std::string dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create run directory " + dir_ + ": " + ec.message());
    }

    // Registers the file for failure cleanup and returns its full path.
    std::string file(const std::string& name) {
        std::string p = (fs::path(dir_) / name).string();
        created_.push_back(p);
        return p;
    }

    const std::string& dir() const { return dir_; }

    void discard_partial() {
        for (const auto& p : created_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

private:
    std::string dir_;
    std::vector<std::string> created_;
};

std::string sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for hashing: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("digest context allocation failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (f.read(buf, sizeof buf), f.gcount() > 0) {
        EVP_DigestUpdate(ctx, buf, static_cast<size_t>(f.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

// Manifest at the run-dir root: the config snapshot, seed, hashes of every
// input file, and the relative names of the produced artifacts.
void write_manifest(RunDir& run, const std::string& command, const TrainConfig& config,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::string>& outputs) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = config.seed;
    j["config"] = nlohmann::ordered_json::parse(config.to_json());
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [name, path] : inputs) {
        j["inputs"][name] = {{"path", path}, {"sha256", sha256_file(path)}};
    }
    j["outputs"] = outputs;
    std::ofstream f(run.file("manifest.json"));
    if (!f) throw IoError("cannot write manifest");
    f << j.dump(2) << "\n";
}

// ---- config binding: defaults < --config file < explicit flags --------------

struct ConfigCli {
    TrainConfig staging; // bound to the CLI options; starts at the defaults
    std::string config_path;
    std::vector<std::function<void(TrainConfig&)>> appliers;

    template <class T>
    CLI::Option* bind(CLI::App* cmd, const std::string& flag, T TrainConfig::*member,
                      const std::string& desc) {
        CLI::Option* o = cmd->add_option(flag, staging.*member, desc)->capture_default_str();
        appliers.push_back([o, member, this](TrainConfig& out) {
            if (o->count() > 0) out.*member = this->staging.*member;
        });
        return o;
    }

    void bind_all(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags override its values)")
            ->check(CLI::ExistingFile);
        bind(cmd, "--lambda", &TrainConfig::lambda, "gradient-penalty weight");
        bind(cmd, "--n-critic", &TrainConfig::n_critic, "critic steps per generator step");
        bind(cmd, "--beta1", &TrainConfig::beta1, "Adam beta1");
        bind(cmd, "--beta2", &TrainConfig::beta2, "Adam beta2");
        bind(cmd, "--adam-eps", &TrainConfig::adam_eps, "Adam epsilon");
        bind(cmd, "--lr-pretrain", &TrainConfig::lr_pretrain, "pretraining learning rate");
        bind(cmd, "--lr-adv", &TrainConfig::lr_adv, "adversarial learning rate");
        bind(cmd, "--batch", &TrainConfig::batch, "batch size");
        bind(cmd, "--max-len", &TrainConfig::max_len, "sentence length cap, specials included");
        bind(cmd, "--sparse-iters", &TrainConfig::sparse_iters, "greedy rounds per hidden state");
        bind(cmd, "--max-iters", &TrainConfig::max_iters, "generator iterations");
        bind(cmd, "--encoder", &TrainConfig::encoder,
             "hidden-state encoder: sparse | topk-static | topk-dynamic | none");
        bind(cmd, "--dim", &TrainConfig::dim, "embedding width (= LSTM hidden width)");
        bind(cmd, "--layers", &TrainConfig::layers, "LSTM layers");
        bind(cmd, "--feature-maps", &TrainConfig::feature_maps, "critic feature maps");
        bind(cmd, "--filter-width", &TrainConfig::filter_width, "critic filter width");
        bind(cmd, "--topk", &TrainConfig::topk, "K for the static top-k encoder");
        bind(cmd, "--topk-delta", &TrainConfig::topk_delta,
             "logit threshold for the dynamic top-k encoder");
        bind(cmd, "--freeze-embedding", &TrainConfig::freeze_embedding,
             "keep embedding atoms fixed in every phase");
        bind(cmd, "--abs-selection", &TrainConfig::abs_selection,
             "select atoms by |inner product| instead of the raw value");
        bind(cmd, "--gp-space", &TrainConfig::gp_space,
             "penalty interpolation space: sparse | hidden");
        bind(cmd, "--checkpoint-every", &TrainConfig::checkpoint_every,
             "generator iterations between checkpoints");
        bind(cmd, "--dae-epochs", &TrainConfig::dae_epochs, "autoencoder pretraining epochs");
        bind(cmd, "--gen-epochs", &TrainConfig::gen_epochs, "generator pretraining epochs");
    }

    // Merge order: `base` (defaults or a checkpoint's config), then the config
    // file, then every flag given on the command line.
    TrainConfig merge(const TrainConfig& base) const {
        TrainConfig out = base;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw IoError("cannot open config: " + config_path);
            std::string text((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
            TrainConfig file_cfg = TrainConfig::from_json(text);
            // from_json starts from defaults; re-apply over `base` key-wise
            nlohmann::json j = nlohmann::json::parse(text);
            TrainConfig merged = base;
            apply_json_keys(j, merged, file_cfg);
            out = merged;
        }
        for (const auto& apply : appliers) apply(out);
        return out;
    }

private:
    static void apply_json_keys(const nlohmann::json& j, TrainConfig& out,
                                const TrainConfig& parsed) {
        for (const auto& [key, val] : j.items()) {
            (void)val;
            if (key == "lambda") out.lambda = parsed.lambda;
            else if (key == "n_critic") out.n_critic = parsed.n_critic;
            else if (key == "beta1") out.beta1 = parsed.beta1;
            else if (key == "beta2") out.beta2 = parsed.beta2;
            else if (key == "adam_eps") out.adam_eps = parsed.adam_eps;
            else if (key == "lr_pretrain") out.lr_pretrain = parsed.lr_pretrain;
            else if (key == "lr_adv") out.lr_adv = parsed.lr_adv;
            else if (key == "batch") out.batch = parsed.batch;
            else if (key == "max_len") out.max_len = parsed.max_len;
            else if (key == "sparse_iters") out.sparse_iters = parsed.sparse_iters;
            else if (key == "max_iters") out.max_iters = parsed.max_iters;
            else if (key == "seed") out.seed = parsed.seed;
            else if (key == "encoder") out.encoder = parsed.encoder;
            else if (key == "dim") out.dim = parsed.dim;
            else if (key == "layers") out.layers = parsed.layers;
            else if (key == "feature_maps") out.feature_maps = parsed.feature_maps;
            else if (key == "filter_width") out.filter_width = parsed.filter_width;
            else if (key == "topk") out.topk = parsed.topk;
            else if (key == "topk_delta") out.topk_delta = parsed.topk_delta;
            else if (key == "freeze_embedding") out.freeze_embedding = parsed.freeze_embedding;
            else if (key == "abs_selection") out.abs_selection = parsed.abs_selection;
            else if (key == "gp_space") out.gp_space = parsed.gp_space;
            else if (key == "checkpoint_every") out.checkpoint_every = parsed.checkpoint_every;
            else if (key == "dae_epochs") out.dae_epochs = parsed.dae_epochs;
            else if (key == "gen_epochs") out.gen_epochs = parsed.gen_epochs;
        }
    }
};

// Fields that fix parameter shapes; a loaded model cannot change them.
void guard_structural(const TrainConfig& from_ckpt, const TrainConfig& merged) {
    auto same = [](int64_t a, int64_t b, const char* what) {
        if (a != b)
            throw ConfigError(std::string("cannot override ") + what +
                              " of a loaded model (checkpoint has " + std::to_string(a) + ")");
    };
    same(from_ckpt.dim, merged.dim, "dim");
    same(from_ckpt.layers, merged.layers, "layers");
    same(from_ckpt.feature_maps, merged.feature_maps, "feature_maps");
    same(from_ckpt.filter_width, merged.filter_width, "filter_width");
}

Model load_model(const std::string& init_path) {
    return model_from_checkpoint(Checkpoint::load(init_path));
}

std::vector<TokenSentence> read_sentence_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<TokenSentence> out;
    std::string line;
    while (std::getline(f, line)) {
        TokenSentence toks = split_tokens(line);
        if (!toks.empty()) out.push_back(std::move(toks));
    }
    if (out.empty()) throw ConfigError("no sentences in " + path);
    return out;
}

// ---- subcommand bodies -------------------------------------------------------

struct SynthArgs {
    uint64_t seed = 0;
    int64_t n = 500;
    std::string out;
};

void cmd_synth_data(const SynthArgs& a) {
    RunDir run(a.out);
    try {
        SynthResult synth = synth_grammar(a.seed, a.n);
        std::string corpus_path = run.file("corpus.txt");
        {
            std::ofstream f(corpus_path);
            if (!f) throw IoError("cannot write " + corpus_path);
            for (const auto& s : synth.sentences) f << s << "\n";
        }
        {
            std::ofstream f(run.file("grammar.json"));
            if (!f) throw IoError("cannot write grammar.json");
            f << synth.grammar_json << "\n";
        }
        TrainConfig cfg;
        cfg.seed = a.seed;
        write_manifest(run, "synth-data", cfg, {}, {"corpus.txt", "grammar.json"});
        log_info("wrote " + std::to_string(synth.sentences.size()) + " sentences to " +
                 corpus_path);
    } catch (...) {
        run.discard_partial();
        throw;
    }
}

struct PretrainArgs {
    ConfigCli cli;
    std::string corpus;
    std::string embeddings; // optional pretrained vectors
    std::string init;       // optional checkpoint to continue from
    std::string out;
    uint64_t seed = 0;
    bool seed_given = false;
    int64_t min_count = 1;
};

Model build_or_load_model(const PretrainArgs& a, const Corpus** corpus_out, Corpus& corpus_store,
                          Vocab& vocab_store) {
    if (!a.init.empty()) {
        Model model = load_model(a.init);
        TrainConfig merged = a.cli.merge(model.config);
        if (a.seed_given) merged.seed = a.seed;
        guard_structural(model.config, merged);
        merged.validate();
        model.config = merged;
        corpus_store = load_corpus(a.corpus, model.vocab, merged.max_len);
        *corpus_out = &corpus_store;
        return model;
    }
    TrainConfig merged = a.cli.merge(TrainConfig{});
    if (a.seed_given) merged.seed = a.seed;
    merged.validate();
    LoadedCorpus loaded = load_corpus(a.corpus, merged.max_len, static_cast<int>(a.min_count));
    vocab_store = loaded.vocab;
    corpus_store = loaded.corpus;
    *corpus_out = &corpus_store;

    Tensor emb;
    if (!a.embeddings.empty()) {
        Rng rng = Rng::derive(merged.seed, 2);
        EmbeddingLoad el = load_embeddings(a.embeddings, vocab_store, merged.dim, rng);
        if (!el.oov.empty())
            log_info(std::to_string(el.oov.size()) + " words missing from " + a.embeddings +
                     "; their rows were sampled");
        emb = el.dict.atoms;
    } else {
        Rng rng = Rng::derive(merged.seed, 2);
        emb = random_embeddings(vocab_store, merged.dim, rng);
    }
    return make_model(vocab_store, emb, merged);
}

void cmd_pretrain(const PretrainArgs& a, bool dae_phase) {
    RunDir run(a.out);
    try {
        Corpus corpus_store;
        Vocab vocab_store;
        const Corpus* corpus = nullptr;
        Model model = build_or_load_model(a, &corpus, corpus_store, vocab_store);

        const char* phase = dae_phase ? "autoencoder" : "generator";
        EpochHook hook = [&](int64_t epoch, double loss, double acc) {
            log_info(std::string(phase) + " epoch " + std::to_string(epoch) + ": loss " +
                     std::to_string(loss) + ", accuracy " + std::to_string(acc));
        };
        PretrainStats st =
            dae_phase ? pretrain_dae(model, *corpus, hook) : pretrain_generator(model, *corpus, hook);

        std::string ckpt = run.file("model.ckpt");
        model_checkpoint(model).save(ckpt);
        {
            nlohmann::ordered_json j;
            j["epochs"] = st.epochs;
            j["loss"] = st.loss;
            j["accuracy"] = st.accuracy;
            j["perplexity"] = st.perplexity;
            std::ofstream f(run.file("stats.json"));
            f << j.dump(2) << "\n";
            std::cout << j.dump() << "\n";
        }
        std::vector<std::pair<std::string, std::string>> inputs{{"corpus", a.corpus}};
        if (!a.embeddings.empty()) inputs.emplace_back("embeddings", a.embeddings);
        if (!a.init.empty()) inputs.emplace_back("init", a.init);
        write_manifest(run, dae_phase ? "pretrain-dae" : "pretrain-gen", model.config, inputs,
                       {"model.ckpt", "stats.json"});
    } catch (...) {
        run.discard_partial();
        throw;
    }
}

struct TrainArgs {
    ConfigCli cli;
    std::string corpus;
    std::string init;
    std::string resume;
    std::string out;
    uint64_t seed = 0;
};

void cmd_train(const TrainArgs& a) {
    RunDir run(a.out);
    try {
        Model model = load_model(a.init);
        TrainConfig merged = a.cli.merge(model.config);
        merged.seed = a.seed;
        guard_structural(model.config, merged);
        merged.validate();
        model.config = merged;

        Corpus corpus = load_corpus(a.corpus, model.vocab, merged.max_len);
        Trainer trainer(model, corpus);
        if (!a.resume.empty()) {
            trainer.restore(Checkpoint::load(a.resume));
            log_info("resumed at iteration " + std::to_string(trainer.iter()));
        }

        std::string metrics_path = run.file("metrics.jsonl");
        std::ofstream metrics(metrics_path);
        if (!metrics) throw IoError("cannot write " + metrics_path);

        while (trainer.iter() < merged.max_iters) {
            MetricsRecord r = trainer.step();
            metrics << metrics_json(r) << "\n";
            metrics.flush();
            log_debug(metrics_json(r));
            if (r.iter % merged.checkpoint_every == 0 && r.iter < merged.max_iters) {
                std::string name = "checkpoint-" + std::to_string(r.iter) + ".ckpt";
                trainer.snapshot().save(run.file(name));
                log_info("iteration " + std::to_string(r.iter) + ": critic " +
                         std::to_string(r.critic_loss) + ", generator " +
                         std::to_string(r.gen_loss));
            }
        }
        std::string final_path = run.file("model.ckpt");
        trainer.snapshot().save(final_path);
        log_info("finished at iteration " + std::to_string(trainer.iter()));

        std::vector<std::pair<std::string, std::string>> inputs{{"corpus", a.corpus},
                                                                {"init", a.init}};
        if (!a.resume.empty()) inputs.emplace_back("resume", a.resume);
        write_manifest(run, "train", merged, inputs, {"metrics.jsonl", "model.ckpt"});
    } catch (...) {
        run.discard_partial();
        throw;
    }
}

struct GenerateArgs {
    std::string init;
    std::string out;
    uint64_t seed = 0;
    int64_t n = 100;
};

void cmd_generate(const GenerateArgs& a) {
    RunDir run(a.out);
    try {
        Model model = load_model(a.init);
        const TrainConfig& cfg = model.config;
        EncoderSpec spec = cfg.encoder_spec();
        Rng rng = Rng::derive(a.seed, 9);
        const int64_t budget = cfg.max_len - 2; // content tokens per sample

        std::string path = run.file("samples.txt");
        std::ofstream f(path);
        if (!f) throw IoError("cannot write " + path);
        NoGradGuard ng;
        for (int64_t i = 0; i < a.n; ++i) {
            Tensor z = Tensor::randn({1, cfg.dim}, rng);
            GenRollout roll = generate_sequence(model.gen, model.embedding, z, budget, model.dict,
                                                spec, FeedbackMode::kArgmax);
            std::vector<int> words;
            for (int w : roll.words) {
                if (w == Vocab::kEos) break;
                words.push_back(w);
            }
            f << detokenize(words, model.vocab) << "\n";
        }
        TrainConfig stamped = cfg;
        stamped.seed = a.seed;
        write_manifest(run, "generate", stamped, {{"init", a.init}}, {"samples.txt"});
        log_info("wrote " + std::to_string(a.n) + " samples to " + path);
    } catch (...) {
        run.discard_partial();
        throw;
    }
}

struct EvalArgs {
    std::string candidates;
    std::string references;
    std::string out;
};

void cmd_eval(const EvalArgs& a) {
    RunDir run(a.out);
    try {
        std::vector<TokenSentence> cands = read_sentence_file(a.candidates);
        std::vector<TokenSentence> refs = read_sentence_file(a.references);
        nlohmann::ordered_json j;
        j["bleu"]["2"] = bleu_n(cands, refs, 2).score;
        j["bleu"]["5"] = bleu_n(cands, refs, 5).score;
        j["self_bleu"]["2"] = cands.size() >= 2 ? self_bleu(cands, 2) : 0.0;
        j["self_bleu"]["5"] = cands.size() >= 2 ? self_bleu(cands, 5) : 0.0;
        j["n_candidates"] = cands.size();
        j["n_references"] = refs.size();
        {
            std::ofstream f(run.file("eval.json"));
            if (!f) throw IoError("cannot write eval.json");
            f << j.dump(2) << "\n";
        }
        std::cout << j.dump() << "\n";
        TrainConfig cfg;
        write_manifest(run, "eval", cfg,
                       {{"candidates", a.candidates}, {"references", a.references}},
                       {"eval.json"});
    } catch (...) {
        run.discard_partial();
        throw;
    }
}

struct EncodeArgs {
    std::string init;
    std::string sentence;
    std::string out; // optional run dir
    int64_t sparse_iters = 0;
};

void cmd_encode(const EncodeArgs& a) {
    Model model = load_model(a.init);
    EncoderSpec spec = model.config.encoder_spec();
    spec.kind = EncoderKind::kSparse; // this command inspects sparse codes
    if (a.sparse_iters > 0) spec.sparse_iters = a.sparse_iters;

    std::vector<std::string> toks = split_tokens(a.sentence);
    if (toks.empty()) throw ConfigError("encode: empty sentence");
    std::vector<int> ids = tokenize(toks, model.vocab, model.config.max_len);

    NoGradGuard ng;
    DaeOutput out = dae_reconstruct(model.dae, model.embedding, ids, model.dict, spec);

    std::vector<std::string> lines;
    for (size_t t = 0; t < out.codes.size(); ++t) {
        lines.push_back(sparse_code_json(static_cast<int64_t>(t), out.codes[t]));
    }
    for (const auto& l : lines) std::cout << l << "\n";

    if (!a.out.empty()) {
        RunDir run(a.out);
        try {
            std::ofstream f(run.file("codes.jsonl"));
            if (!f) throw IoError("cannot write codes.jsonl");
            for (const auto& l : lines) f << l << "\n";
            write_manifest(run, "encode", model.config, {{"init", a.init}}, {"codes.jsonl"});
        } catch (...) {
            run.discard_partial();
            throw;
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial text generation over sparse word-embedding combinations"};
    app.require_subcommand(1);

    SynthArgs synth;
    CLI::App* c_synth = app.add_subcommand("synth-data", "Sample a toy grammar corpus");
    c_synth->add_option("--seed", synth.seed, "sampling seed")->capture_default_str();
    c_synth->add_option("--n", synth.n, "number of sentences")->capture_default_str();
    c_synth->add_option("--out", synth.out, "run directory")->required();

    PretrainArgs dae;
    CLI::App* c_dae = app.add_subcommand("pretrain-dae", "Pretrain the denoising autoencoder");
    c_dae->add_option("--corpus", dae.corpus, "training corpus, one sentence per line")
        ->required()
        ->check(CLI::ExistingFile);
    c_dae->add_option("--embeddings", dae.embeddings, "pretrained word vectors (optional)")
        ->check(CLI::ExistingFile);
    c_dae->add_option("--init", dae.init, "checkpoint to continue from (optional)")
        ->check(CLI::ExistingFile);
    c_dae->add_option("--out", dae.out, "run directory")->required();
    CLI::Option* dae_seed = c_dae->add_option("--seed", dae.seed, "model + data seed");
    c_dae->add_option("--min-count", dae.min_count, "drop words rarer than this")
        ->capture_default_str();
    dae.cli.bind_all(c_dae);

    PretrainArgs gen;
    CLI::App* c_gen = app.add_subcommand("pretrain-gen", "Pretrain the generator on next-word loss");
    c_gen->add_option("--corpus", gen.corpus, "training corpus, one sentence per line")
        ->required()
        ->check(CLI::ExistingFile);
    c_gen->add_option("--init", gen.init, "checkpoint from pretrain-dae")
        ->required()
        ->check(CLI::ExistingFile);
    c_gen->add_option("--out", gen.out, "run directory")->required();
    CLI::Option* gen_seed = c_gen->add_option("--seed", gen.seed, "overrides the checkpoint seed");
    gen.cli.bind_all(c_gen);

    TrainArgs train;
    CLI::App* c_train = app.add_subcommand("train", "Adversarial training");
    c_train->add_option("--corpus", train.corpus, "training corpus")
        ->required()
        ->check(CLI::ExistingFile);
    c_train->add_option("--init", train.init, "pretrained checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    c_train->add_option("--resume", train.resume, "mid-run checkpoint to resume from")
        ->check(CLI::ExistingFile);
    c_train->add_option("--out", train.out, "run directory")->required();
    c_train->add_option("--seed", train.seed, "training seed")->required();
    train.cli.bind_all(c_train);

    GenerateArgs generate;
    CLI::App* c_generate = app.add_subcommand("generate", "Sample sentences from a trained model");
    c_generate->add_option("--init", generate.init, "model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    c_generate->add_option("--out", generate.out, "run directory")->required();
    c_generate->add_option("--seed", generate.seed, "sampling seed")->required();
    c_generate->add_option("--n", generate.n, "number of sentences")->capture_default_str();

    EvalArgs eval;
    CLI::App* c_eval = app.add_subcommand("eval", "Score candidates against references");
    c_eval->add_option("--candidates", eval.candidates, "generated sentences file")
        ->required()
        ->check(CLI::ExistingFile);
    c_eval->add_option("--references", eval.references, "reference sentences file")
        ->required()
        ->check(CLI::ExistingFile);
    c_eval->add_option("--out", eval.out, "run directory")->required();

    EncodeArgs encode;
    CLI::App* c_encode = app.add_subcommand("encode", "Dump a sentence's sparse codes");
    c_encode->add_option("--init", encode.init, "model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    c_encode->add_option("--sentence", encode.sentence, "sentence text")->required();
    c_encode->add_option("--out", encode.out, "run directory (optional; codes also on stdout)");
    c_encode->add_option("--sparse-iters", encode.sparse_iters,
                         "override the greedy round count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_synth->parsed()) {
            cmd_synth_data(synth);
        } else if (c_dae->parsed()) {
            dae.seed_given = dae_seed->count() > 0;
            cmd_pretrain(dae, /*dae_phase=*/true);
        } else if (c_gen->parsed()) {
            gen.seed_given = gen_seed->count() > 0;
            cmd_pretrain(gen, /*dae_phase=*/false);
        } else if (c_train->parsed()) {
            cmd_train(train);
        } else if (c_generate->parsed()) {
            cmd_generate(generate);
        } else if (c_eval->parsed()) {
            cmd_eval(eval);
        } else if (c_encode->parsed()) {
            cmd_encode(encode);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
