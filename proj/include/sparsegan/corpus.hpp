#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sparsegan/rng.hpp"
#include "sparsegan/sparse.hpp"

namespace sparsegan {

// Word <-> id bijection with four fixed specials at the front.
struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    std::vector<std::string> words;           // id -> word
    std::unordered_map<std::string, int> ids; // word -> id

    int size() const { return static_cast<int>(words.size()); }
    int id_of(const std::string& w) const; // kUnk when absent
    const std::string& word_of(int id) const;
};

// Frequency-sorted ids after the specials (ties alphabetical); words seen
// fewer than min_count times are dropped (they map to UNK later).
Vocab build_vocab(const std::vector<std::vector<std::string>>& sentences, int min_count = 1);

// Lowercases and splits on whitespace.
std::vector<std::string> split_tokens(const std::string& line);

// Compact JSON word list for embedding a vocabulary in a checkpoint.
std::string vocab_to_json(const Vocab& vocab);
Vocab vocab_from_json(const std::string& json_text);

struct Corpus {
    std::vector<std::vector<int>> sentences; // each [BOS, content..., EOS]
    int64_t max_len = 0;                     // longest stored sentence
    int64_t truncated = 0;                   // sentences cut to the length cap
};

// Wraps a tokenized line with BOS/EOS and caps the total length (specials
// included). Sets *truncated when the cap bit.
std::vector<int> tokenize(const std::vector<std::string>& tokens, const Vocab& vocab,
                          int64_t max_len = 40, bool* truncated = nullptr);

// Inverse of tokenize for display: drops specials, joins with single spaces.
std::string detokenize(const std::vector<int>& ids, const Vocab& vocab);

// One sentence per line, UTF-8, whitespace-tokenized, lowercased.
Corpus load_corpus(const std::string& path, const Vocab& vocab, int64_t max_len = 40);

struct LoadedCorpus {
    Corpus corpus;
    Vocab vocab;
};

// Same, but builds the vocabulary from the file first.
LoadedCorpus load_corpus(const std::string& path, int64_t max_len = 40, int min_count = 1);

struct EmbeddingLoad {
    Dictionary dict;              // banned = {PAD}; PAD row pinned to zero
    std::vector<std::string> oov; // words sampled from N(0, 0.1^2)
};

// Text layout: one line per word, token then d floats, space-separated.
// In-vocab rows come from the file; everything absent (specials included,
// except PAD) is drawn from N(0, 0.1^2) with the supplied generator.
EmbeddingLoad load_embeddings(const std::string& path, const Vocab& vocab, int64_t d, Rng& rng);

// Random embedding matrix for corpora without pretrained vectors: every row
// N(0, 0.1^2) except the zero PAD row.
Tensor random_embeddings(const Vocab& vocab, int64_t d, Rng& rng);

struct Batch {
    std::vector<int> ids;         // row-major {size, width}, PAD-filled
    std::vector<int64_t> lengths; // true lengths per row
    int64_t size = 0;
    int64_t width = 0;

    std::vector<int> row(int64_t r) const; // un-padded sentence r
};

// Deterministic epoch stream: each epoch visits every sentence exactly once
// in an order keyed by (seed, epoch). Position is (epoch, cursor), which is
// all a checkpoint needs to resume the stream exactly.
class BatchIter {
public:
    BatchIter(const Corpus& corpus, int64_t batch, uint64_t seed);

    Batch next();
    int64_t epoch() const { return epoch_; }
    int64_t cursor() const { return cursor_; } // sentences consumed this epoch
    void seek(int64_t epoch, int64_t cursor);

private:
    void reshuffle();

    const Corpus* corpus_;
    int64_t batch_;
    uint64_t seed_;
    int64_t epoch_ = 0;
    int64_t cursor_ = 0;
    std::vector<int64_t> order_;
};

} // namespace sparsegan
