#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "sparsegan/synth_grammar.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_bin;     // path to the command-line binary under test
fs::path g_scratch;    // per-process scratch root, removed at exit

std::string scratch(const std::string& name) {
    fs::path p = g_scratch / name;
    fs::create_directories(p.parent_path());
    return p.string();
}

struct RunResult {
    int code = -1;
    std::string output; // stdout + stderr interleaved
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    std::string cap = scratch("capture/" + std::to_string(counter++) + ".txt");
    std::string cmd = g_bin + " " + args + " > " + cap + " 2>&1";
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream f(cap);
    std::stringstream ss;
    ss << f.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    REQUIRE(f.good());
    f << text;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

// Shared artifacts built once through the real CLI: a toy corpus, an
// autoencoder checkpoint, and a generator checkpoint layered on top.
struct Fixture {
    std::string data_dir, corpus, dae_dir, dae_model, gen_dir, gen_model;
};

const std::string kTinyFlags =
    " --dim 16 --layers 1 --feature-maps 8 --filter-width 3 --batch 4"
    " --sparse-iters 2 --lr-pretrain 1e-2";

const Fixture& fixture() {
    static Fixture fx = [] {
        Fixture f;
        f.data_dir = scratch("fixture/data");
        f.corpus = f.data_dir + "/corpus.txt";
        f.dae_dir = scratch("fixture/dae");
        f.dae_model = f.dae_dir + "/model.ckpt";
        f.gen_dir = scratch("fixture/gen");
        f.gen_model = f.gen_dir + "/model.ckpt";

        auto must = [](const RunResult& r, const char* what) {
            if (r.code != 0)
                throw std::runtime_error(std::string("fixture ") + what + " failed:\n" + r.output);
        };
        must(run_cli("synth-data --seed 5 --n 24 --out " + f.data_dir), "synth-data");
        must(run_cli("pretrain-dae --corpus " + f.corpus + " --out " + f.dae_dir +
                     " --seed 7 --dae-epochs 2" + kTinyFlags),
             "pretrain-dae");
        must(run_cli("pretrain-gen --corpus " + f.corpus + " --init " + f.dae_model + " --out " +
                     f.gen_dir + " --gen-epochs 2"),
             "pretrain-gen");
        return f;
    }();
    return fx;
}

} // namespace

TEST_CASE("bad invocations exit nonzero without touching the filesystem") {
    CHECK(run_cli("").code != 0);
    CHECK(run_cli("frobnicate").code != 0);
    std::string dir = scratch("badflag");
    CHECK(run_cli("synth-data --bogus 1 --out " + dir).code != 0);
    CHECK(run_cli("synth-data").code != 0); // --out is required
    CHECK_FALSE(fs::exists(fs::path(dir) / "corpus.txt"));
}

TEST_CASE("synth-data writes a grammar-consistent, seed-deterministic corpus") {
    std::string a = scratch("synth/a"), b = scratch("synth/b"), c = scratch("synth/c");
    REQUIRE(run_cli("synth-data --seed 5 --n 24 --out " + a).code == 0);
    REQUIRE(run_cli("synth-data --seed 5 --n 24 --out " + b).code == 0);
    REQUIRE(run_cli("synth-data --seed 6 --n 24 --out " + c).code == 0);

    std::string corpus = slurp(a + "/corpus.txt");
    auto sents = lines_of(corpus);
    REQUIRE(sents.size() == 24);
    for (const auto& s : sents) CHECK_FALSE(s.empty());
    CHECK(sparsegan::grammar_membership_rate(sents) == 1.0);

    CHECK(corpus == slurp(b + "/corpus.txt"));
    CHECK(corpus != slurp(c + "/corpus.txt"));
    CHECK(slurp(a + "/grammar.json") == slurp(b + "/grammar.json"));

    auto grammar = nlohmann::json::parse(slurp(a + "/grammar.json"));
    CHECK(grammar.is_object());

    auto manifest = nlohmann::json::parse(slurp(a + "/manifest.json"));
    CHECK(manifest["command"] == "synth-data");
    CHECK(manifest["seed"] == 5);
    std::vector<std::string> outs = manifest["outputs"];
    CHECK(outs == std::vector<std::string>{"corpus.txt", "grammar.json"});
}

TEST_CASE("pretrain-dae emits a checkpoint, stats, and a hashed manifest") {
    const Fixture& f = fixture();
    CHECK(fs::exists(f.dae_model));

    auto stats = nlohmann::json::parse(slurp(f.dae_dir + "/stats.json"));
    CHECK(stats["epochs"] == 2);
    CHECK(stats["loss"].is_number());
    CHECK(stats["accuracy"].is_number());
    CHECK(stats["perplexity"].is_number());

    auto manifest = nlohmann::json::parse(slurp(f.dae_dir + "/manifest.json"));
    CHECK(manifest["command"] == "pretrain-dae");
    CHECK(manifest["config"]["dim"] == 16);
    CHECK(manifest["config"]["sparse_iters"] == 2);
    std::string sha = manifest["inputs"]["corpus"]["sha256"];
    CHECK(sha.size() == 64);
    CHECK(sha.find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("pretrain-gen layers onto the autoencoder checkpoint") {
    const Fixture& f = fixture();
    CHECK(fs::exists(f.gen_model));
    auto manifest = nlohmann::json::parse(slurp(f.gen_dir + "/manifest.json"));
    CHECK(manifest["command"] == "pretrain-gen");
    CHECK(manifest["inputs"].contains("init"));
    // structural settings ride along from the first phase
    CHECK(manifest["config"]["dim"] == 16);
    CHECK(manifest["config"]["batch"] == 4);
}

TEST_CASE("train writes one metrics line per iteration plus a final checkpoint") {
    const Fixture& f = fixture();
    std::string dir = scratch("train/basic");
    RunResult r = run_cli("train --corpus " + f.corpus + " --init " + f.gen_model + " --out " +
                          dir + " --seed 3 --max-iters 2 --n-critic 1");
    REQUIRE(r.code == 0);

    auto metric_lines = lines_of(slurp(dir + "/metrics.jsonl"));
    REQUIRE(metric_lines.size() == 2);
    for (size_t i = 0; i < metric_lines.size(); ++i) {
        auto j = nlohmann::json::parse(metric_lines[i]);
        CHECK(j["iter"] == static_cast<int64_t>(i) + 1);
        CHECK(j["critic_loss"].is_number());
        CHECK(j["gen_loss"].is_number());
        CHECK(j["wasserstein_estimate"].is_number());
        CHECK(j["penalty"].is_number());
        CHECK(j["grad_norm_mean"].is_number());
        CHECK(j["wallclock"].is_number());
    }
    CHECK(fs::exists(dir + "/model.ckpt"));
    auto manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest["command"] == "train");
    CHECK(manifest["config"]["max_iters"] == 2);
    CHECK(manifest["config"]["n_critic"] == 1);
}

TEST_CASE("a resumed run reproduces the uninterrupted metrics") {
    const Fixture& f = fixture();
    std::string full = scratch("train/full"), resumed = scratch("train/resumed");
    std::string common = "train --corpus " + f.corpus + " --init " + f.gen_model +
                         " --seed 3 --max-iters 2 --n-critic 1 --checkpoint-every 1";
    REQUIRE(run_cli(common + " --out " + full).code == 0);
    REQUIRE(fs::exists(full + "/checkpoint-1.ckpt"));

    REQUIRE(run_cli(common + " --out " + resumed + " --resume " + full + "/checkpoint-1.ckpt")
                .code == 0);
    auto full_lines = lines_of(slurp(full + "/metrics.jsonl"));
    auto res_lines = lines_of(slurp(resumed + "/metrics.jsonl"));
    REQUIRE(full_lines.size() == 2);
    REQUIRE(res_lines.size() == 1); // picks up at iteration 2

    auto a = nlohmann::json::parse(full_lines[1]);
    auto b = nlohmann::json::parse(res_lines[0]);
    a.erase("wallclock");
    b.erase("wallclock");
    CHECK(a == b);

    auto manifest = nlohmann::json::parse(slurp(resumed + "/manifest.json"));
    CHECK(manifest["inputs"].contains("resume"));
}

TEST_CASE("generate samples the requested count deterministically") {
    const Fixture& f = fixture();
    std::string g1 = scratch("gen/a"), g2 = scratch("gen/b"), g3 = scratch("gen/c");
    std::string base = "generate --init " + f.gen_model + " --n 8 --out ";
    REQUIRE(run_cli(base + g1 + " --seed 101").code == 0);
    REQUIRE(run_cli(base + g2 + " --seed 101").code == 0);
    REQUIRE(run_cli(base + g3 + " --seed 202").code == 0);

    std::string samples = slurp(g1 + "/samples.txt");
    CHECK(lines_of(samples).size() == 8);
    CHECK(samples == slurp(g2 + "/samples.txt"));
    CHECK(samples != slurp(g3 + "/samples.txt"));

    auto manifest = nlohmann::json::parse(slurp(g1 + "/manifest.json"));
    CHECK(manifest["command"] == "generate");
    CHECK(manifest["seed"] == 101);
}

TEST_CASE("eval scores a file against itself at exactly one") {
    std::string dir = scratch("eval/run");
    fs::create_directories(dir);
    std::string cands = scratch("eval/cands.txt");
    spit(cands,
         "the quick brown fox jumps over dogs\n"
         "pack my box with five dozen jugs\n"
         "how vexingly quick daft zebras jump\n");

    RunResult r = run_cli("eval --candidates " + cands + " --references " + cands + " --out " + dir);
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(slurp(dir + "/eval.json"));
    CHECK(j["bleu"]["2"] == 1.0);
    CHECK(j["bleu"]["5"] == 1.0);
    CHECK(j["n_candidates"] == 3);
    CHECK(j["n_references"] == 3);
    CHECK(j["self_bleu"]["2"].is_number());
    // stdout carries the same summary for pipelines
    auto out = nlohmann::json::parse(r.output);
    CHECK(out["bleu"]["2"] == 1.0);
}

TEST_CASE("encode prints one sparse code per content token") {
    const Fixture& f = fixture();
    RunResult r = run_cli("encode --init " + f.dae_model + " --sentence 'one two three'");
    REQUIRE(r.code == 0);
    auto out_lines = lines_of(r.output);
    REQUIRE(out_lines.size() == 3);
    for (size_t t = 0; t < out_lines.size(); ++t) {
        auto j = nlohmann::json::parse(out_lines[t]);
        CHECK(j["step"] == static_cast<int64_t>(t));
        CHECK(j["indices"].is_array());
        CHECK(!j["indices"].empty());
        CHECK(j["coeffs"].size() == j["indices"].size());
        CHECK(j["residual_norm_history"].size() >= 2);
    }

    // --out mirrors stdout into codes.jsonl; --sparse-iters widens the codes
    std::string dir = scratch("encode/run");
    RunResult r2 = run_cli("encode --init " + f.dae_model + " --sentence 'one two three'" +
                           " --out " + dir + " --sparse-iters 3");
    REQUIRE(r2.code == 0);
    auto file_lines = lines_of(slurp(dir + "/codes.jsonl"));
    REQUIRE(file_lines.size() == 3);
    CHECK(nlohmann::json::parse(file_lines[0])["residual_norm_history"].size() >= 3);

    CHECK(run_cli("encode --init " + f.dae_model + " --sentence ''").code != 0);
}

TEST_CASE("failed runs clean up their partial outputs") {
    const Fixture& f = fixture();

    std::string empty_corpus = scratch("cleanup/empty.txt");
    spit(empty_corpus, "\n\n");
    std::string dir1 = scratch("cleanup/dae");
    RunResult r1 = run_cli("pretrain-dae --corpus " + empty_corpus + " --out " + dir1 +
                           " --seed 7 --dae-epochs 1" + kTinyFlags);
    CHECK(r1.code != 0);
    CHECK(r1.output.find("error:") != std::string::npos);
    CHECK_FALSE(fs::exists(dir1 + "/model.ckpt"));
    CHECK_FALSE(fs::exists(dir1 + "/stats.json"));
    CHECK_FALSE(fs::exists(dir1 + "/manifest.json"));

    // structural settings are pinned by the checkpoint and cannot be overridden
    std::string dir2 = scratch("cleanup/train");
    RunResult r2 = run_cli("train --corpus " + f.corpus + " --init " + f.gen_model + " --out " +
                           dir2 + " --seed 3 --max-iters 1 --dim 24");
    CHECK(r2.code != 0);
    CHECK(r2.output.find("error:") != std::string::npos);
    CHECK_FALSE(fs::exists(dir2 + "/metrics.jsonl"));
    CHECK_FALSE(fs::exists(dir2 + "/model.ckpt"));
    CHECK_FALSE(fs::exists(dir2 + "/manifest.json"));

    CHECK(run_cli("generate --init " + scratch("cleanup/nope.ckpt") +
                  " --out " + scratch("cleanup/gen") + " --seed 1")
              .code != 0);
}

int main(int argc, char** argv) {
    std::vector<char*> pass;
    pass.push_back(argv[0]);
    for (int i = 1; i < argc; ++i) {
        if (g_bin.empty() && argv[i][0] != '-') {
            g_bin = argv[i];
        } else {
            pass.push_back(argv[i]);
        }
    }
    if (g_bin.empty()) {
        std::cerr << "usage: test_cli <binary> [doctest options]\n";
        return 2;
    }
    g_scratch = fs::temp_directory_path() / ("cli_test_" + std::to_string(::getpid()));
    fs::create_directories(g_scratch);

    doctest::Context ctx;
    ctx.applyCommandLine(static_cast<int>(pass.size()), pass.data());
    int rc = ctx.run();

    std::error_code ec;
    fs::remove_all(g_scratch, ec);
    return rc;
}
