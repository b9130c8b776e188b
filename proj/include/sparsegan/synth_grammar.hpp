#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sparsegan {

// Fixed toy grammar over 30 terminals:
//
//   S  -> DET ADJ? NOUN VERB DET ADJ? NOUN PP? ADV?
//   PP -> PREP DET ADJ? NOUN
//
// Optional slots are taken with probability 1/2, so sentences span 5 to 12
// words. Word choices are uniform within a class.
struct SynthResult {
    std::vector<std::string> sentences;
    std::string grammar_json; // class word lists + production, machine-readable
};

SynthResult synth_grammar(uint64_t seed, int64_t n_sentences);

// Membership check against the same fixed grammar.
bool grammar_accepts(const std::vector<std::string>& tokens);
bool grammar_accepts(const std::string& sentence);

// Fraction of sentences accepted (tokenizes each line).
double grammar_membership_rate(const std::vector<std::string>& sentences);

} // namespace sparsegan
