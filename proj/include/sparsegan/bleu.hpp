#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sparsegan {

using TokenSentence = std::vector<std::string>;

struct BleuResult {
    double score = 0.0;   // mean sentence-level BLEU over scored candidates
    int64_t skipped = 0;  // empty candidates dropped from the mean
};

// Sentence-level BLEU of each candidate against the whole reference set,
// averaged: clipped modified n-gram precision for n = 1..n_max, geometric
// mean, brevity penalty against the closest reference length (shorter wins
// ties). Precisions that would be zero — including orders longer than the
// candidate — are floored at 1e-9.
BleuResult bleu_n(const std::vector<TokenSentence>& candidates,
                  const std::vector<TokenSentence>& references, int n_max);

// Mean BLEU of each candidate against all the others.
double self_bleu(const std::vector<TokenSentence>& candidates, int n_max);

// Test oracle: naive sliding-window n-gram counts. Kept deliberately free of
// any code shared with bleu_n.
std::map<std::vector<std::string>, int64_t> ngram_oracle(const TokenSentence& sentence, int n);

} // namespace sparsegan
