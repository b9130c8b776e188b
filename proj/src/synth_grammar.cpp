#include "sparsegan/synth_grammar.hpp"

#include <algorithm>

#include "json.hpp"
#include "sparsegan/corpus.hpp"
#include "sparsegan/errors.hpp"
#include "sparsegan/rng.hpp"

namespace sparsegan {

namespace {

const std::vector<std::string> kDet = {"the", "a"};
const std::vector<std::string> kAdj = {"red", "big", "small", "old", "shiny", "quiet"};
const std::vector<std::string> kNoun = {"cat",  "dog", "bird",  "house", "tree",
                                        "car",  "boat", "river", "garden"};
const std::vector<std::string> kVerb = {"sees", "likes", "finds", "follows", "paints", "watches"};
const std::vector<std::string> kPrep = {"near", "under", "beside", "behind"};
const std::vector<std::string> kAdv = {"quickly", "quietly", "slowly"};

bool in_class(const std::vector<std::string>& cls, const std::string& w) {
    return std::find(cls.begin(), cls.end(), w) != cls.end();
}

const std::string& pick(const std::vector<std::string>& cls, Rng& rng) {
    return cls[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(cls.size())))];
}

void emit_np(std::string& out, Rng& rng) {
    out += pick(kDet, rng);
    out += ' ';
    if (rng.bernoulli(0.5)) {
        out += pick(kAdj, rng);
        out += ' ';
    }
    out += pick(kNoun, rng);
}

// Consumes DET ADJ? NOUN starting at tokens[i]; advances i past it.
bool parse_np(const std::vector<std::string>& tokens, size_t& i) {
    if (i >= tokens.size() || !in_class(kDet, tokens[i])) return false;
    ++i;
    if (i < tokens.size() && in_class(kAdj, tokens[i])) ++i;
    if (i >= tokens.size() || !in_class(kNoun, tokens[i])) return false;
    ++i;
    return true;
}

} // namespace

SynthResult synth_grammar(uint64_t seed, int64_t n_sentences) {
    if (n_sentences < 1) throw ConfigError("synth_grammar: need at least one sentence");
    Rng rng(seed);
    SynthResult out;
    out.sentences.reserve(static_cast<size_t>(n_sentences));
    for (int64_t i = 0; i < n_sentences; ++i) {
        std::string s;
        emit_np(s, rng);
        s += ' ';
        s += pick(kVerb, rng);
        s += ' ';
        emit_np(s, rng);
        if (rng.bernoulli(0.5)) {
            s += ' ';
            s += pick(kPrep, rng);
            s += ' ';
            emit_np(s, rng);
        }
        if (rng.bernoulli(0.5)) {
            s += ' ';
            s += pick(kAdv, rng);
        }
        out.sentences.push_back(std::move(s));
    }

    nlohmann::ordered_json j;
    j["classes"]["DET"] = kDet;
    j["classes"]["ADJ"] = kAdj;
    j["classes"]["NOUN"] = kNoun;
    j["classes"]["VERB"] = kVerb;
    j["classes"]["PREP"] = kPrep;
    j["classes"]["ADV"] = kAdv;
    j["productions"]["S"] = "DET ADJ? NOUN VERB DET ADJ? NOUN PP? ADV?";
    j["productions"]["PP"] = "PREP DET ADJ? NOUN";
    out.grammar_json = j.dump(2);
    return out;
}

bool grammar_accepts(const std::vector<std::string>& tokens) {
    size_t i = 0;
    if (!parse_np(tokens, i)) return false;
    if (i >= tokens.size() || !in_class(kVerb, tokens[i])) return false;
    ++i;
    if (!parse_np(tokens, i)) return false;
    if (i < tokens.size() && in_class(kPrep, tokens[i])) {
        ++i;
        if (!parse_np(tokens, i)) return false;
    }
    if (i < tokens.size() && in_class(kAdv, tokens[i])) ++i;
    return i == tokens.size();
}

bool grammar_accepts(const std::string& sentence) {
    return grammar_accepts(split_tokens(sentence));
}

double grammar_membership_rate(const std::vector<std::string>& sentences) {
    if (sentences.empty()) return 0.0;
    int64_t hits = 0;
    for (const auto& s : sentences)
        if (grammar_accepts(s)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(sentences.size());
}

} // namespace sparsegan
