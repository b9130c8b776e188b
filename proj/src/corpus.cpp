#include "sparsegan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace sparsegan {

namespace {

const std::vector<std::string> kSpecials = {"<pad>", "<bos>", "<eos>", "<unk>"};

} // namespace

int Vocab::id_of(const std::string& w) const {
    auto it = ids.find(w);
    return it == ids.end() ? kUnk : it->second;
}

const std::string& Vocab::word_of(int id) const {
    if (id < 0 || id >= size()) {
        throw ConfigError("vocab: id " + std::to_string(id) + " out of range for " +
                          std::to_string(size()) + " words");
    }
    return words[static_cast<size_t>(id)];
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& sentences, int min_count) {
    if (sentences.empty()) throw ConfigError("build_vocab: no sentences");
    std::map<std::string, int64_t> counts; // ordered map makes ties alphabetical for free
    for (const auto& s : sentences)
        for (const auto& w : s) ++counts[w];

    std::vector<std::pair<std::string, int64_t>> entries(counts.begin(), counts.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocab v;
    v.words = kSpecials;
    for (const auto& [word, count] : entries) {
        if (count < min_count) continue;
        if (std::find(kSpecials.begin(), kSpecials.end(), word) != kSpecials.end()) continue;
        v.words.push_back(word);
    }
    for (int i = 0; i < v.size(); ++i) v.ids[v.words[static_cast<size_t>(i)]] = i;
    return v;
}

std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string vocab_to_json(const Vocab& vocab) {
    nlohmann::json j;
    j["words"] = vocab.words;
    return j.dump();
}

Vocab vocab_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("vocab json: ") + e.what());
    }
    if (!j.contains("words") || !j["words"].is_array()) {
        throw ParseError("vocab json: missing 'words' array");
    }
    Vocab v;
    v.words = j["words"].get<std::vector<std::string>>();
    if (v.words.size() < kSpecials.size() ||
        !std::equal(kSpecials.begin(), kSpecials.end(), v.words.begin())) {
        throw ParseError("vocab json: first entries must be the special tokens");
    }
    for (int i = 0; i < v.size(); ++i) v.ids[v.words[static_cast<size_t>(i)]] = i;
    return v;
}

std::vector<int> tokenize(const std::vector<std::string>& tokens, const Vocab& vocab,
                          int64_t max_len, bool* truncated) {
    if (max_len < 3) throw ConfigError("tokenize: length cap must fit BOS, a token, and EOS");
    std::vector<int> out;
    out.reserve(tokens.size() + 2);
    out.push_back(Vocab::kBos);
    bool cut = false;
    for (const auto& w : tokens) {
        if (static_cast<int64_t>(out.size()) == max_len - 1) {
            cut = true;
            break;
        }
        out.push_back(vocab.id_of(w));
    }
    out.push_back(Vocab::kEos);
    if (truncated) *truncated = cut;
    return out;
}

std::string detokenize(const std::vector<int>& ids, const Vocab& vocab) {
    std::string out;
    for (int id : ids) {
        if (id == Vocab::kPad || id == Vocab::kBos || id == Vocab::kEos) continue;
        if (!out.empty()) out.push_back(' ');
        out += vocab.word_of(id);
    }
    return out;
}

namespace {

std::vector<std::vector<std::string>> read_token_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);
    std::vector<std::vector<std::string>> lines;
    std::string line;
    while (std::getline(in, line)) {
        auto toks = split_tokens(line);
        if (!toks.empty()) lines.push_back(std::move(toks));
    }
    if (lines.empty()) throw ConfigError("corpus file has no sentences: " + path);
    return lines;
}

Corpus corpus_from_lines(const std::vector<std::vector<std::string>>& lines, const Vocab& vocab,
                         int64_t max_len) {
    Corpus c;
    c.sentences.reserve(lines.size());
    for (const auto& toks : lines) {
        bool cut = false;
        auto ids = tokenize(toks, vocab, max_len, &cut);
        if (cut) ++c.truncated;
        c.max_len = std::max(c.max_len, static_cast<int64_t>(ids.size()));
        c.sentences.push_back(std::move(ids));
    }
    return c;
}

} // namespace

Corpus load_corpus(const std::string& path, const Vocab& vocab, int64_t max_len) {
    return corpus_from_lines(read_token_lines(path), vocab, max_len);
}

LoadedCorpus load_corpus(const std::string& path, int64_t max_len, int min_count) {
    auto lines = read_token_lines(path);
    LoadedCorpus out;
    out.vocab = build_vocab(lines, min_count);
    out.corpus = corpus_from_lines(lines, out.vocab, max_len);
    return out;
}

EmbeddingLoad load_embeddings(const std::string& path, const Vocab& vocab, int64_t d, Rng& rng) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path);

    std::unordered_map<std::string, std::vector<double>> rows;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string word;
        is >> word;
        if (word.empty()) continue;
        std::vector<double> vals;
        std::string field;
        while (is >> field) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size()) {
                throw ParseError("embedding file line " + std::to_string(lineno) +
                                 ": cannot parse '" + field + "' as a number");
            }
            vals.push_back(v);
        }
        if (static_cast<int64_t>(vals.size()) != d) {
            throw ConfigError("embedding file line " + std::to_string(lineno) + ": " +
                              std::to_string(vals.size()) + " values, expected " +
                              std::to_string(d));
        }
        rows[word] = std::move(vals);
    }

    const int64_t n = vocab.size();
    std::vector<double> data(static_cast<size_t>(n * d), 0.0);
    EmbeddingLoad out;
    for (int64_t i = 0; i < n; ++i) {
        if (i == Vocab::kPad) continue; // pinned zero
        const std::string& word = vocab.words[static_cast<size_t>(i)];
        auto it = rows.find(word);
        if (it != rows.end()) {
            std::copy(it->second.begin(), it->second.end(), data.begin() + i * d);
        } else {
            for (int64_t j = 0; j < d; ++j) data[static_cast<size_t>(i * d + j)] = rng.normal(0.0, 0.1);
            out.oov.push_back(word);
        }
    }
    out.dict = make_dictionary(Tensor::from_data({n, d}, std::move(data)), {Vocab::kPad});
    return out;
}

Tensor random_embeddings(const Vocab& vocab, int64_t d, Rng& rng) {
    const int64_t n = vocab.size();
    std::vector<double> data(static_cast<size_t>(n * d), 0.0);
    for (int64_t i = 1; i < n; ++i) // row 0 (PAD) stays zero
        for (int64_t j = 0; j < d; ++j) data[static_cast<size_t>(i * d + j)] = rng.normal(0.0, 0.1);
    return Tensor::from_data({n, d}, std::move(data));
}

std::vector<int> Batch::row(int64_t r) const {
    std::vector<int> out;
    const int64_t len = lengths[static_cast<size_t>(r)];
    out.reserve(static_cast<size_t>(len));
    for (int64_t j = 0; j < len; ++j) out.push_back(ids[static_cast<size_t>(r * width + j)]);
    return out;
}

BatchIter::BatchIter(const Corpus& corpus, int64_t batch, uint64_t seed)
    : corpus_(&corpus), batch_(batch), seed_(seed) {
    if (batch < 1) throw ConfigError("batch_iter: batch size must be >= 1");
    if (corpus.sentences.empty()) throw ConfigError("batch_iter: empty corpus");
    reshuffle();
}

void BatchIter::reshuffle() {
    order_.resize(corpus_->sentences.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int64_t>(i);
    Rng rng = Rng::derive(seed_, static_cast<uint64_t>(epoch_) + 0x9d2c5680UL);
    rng.shuffle(order_);
}

void BatchIter::seek(int64_t epoch, int64_t cursor) {
    if (epoch < 0 || cursor < 0 || cursor > static_cast<int64_t>(order_.size())) {
        throw ConfigError("batch_iter: invalid stream position");
    }
    epoch_ = epoch;
    cursor_ = cursor;
    reshuffle();
}

Batch BatchIter::next() {
    const int64_t n = static_cast<int64_t>(order_.size());
    if (cursor_ >= n) {
        ++epoch_;
        cursor_ = 0;
        reshuffle();
    }
    const int64_t take = std::min(batch_, n - cursor_);
    Batch b;
    b.size = take;
    for (int64_t i = 0; i < take; ++i) {
        const auto& s = corpus_->sentences[static_cast<size_t>(order_[static_cast<size_t>(cursor_ + i)])];
        b.lengths.push_back(static_cast<int64_t>(s.size()));
        b.width = std::max(b.width, static_cast<int64_t>(s.size()));
    }
    b.ids.assign(static_cast<size_t>(take * b.width), Vocab::kPad);
    for (int64_t i = 0; i < take; ++i) {
        const auto& s = corpus_->sentences[static_cast<size_t>(order_[static_cast<size_t>(cursor_ + i)])];
        std::copy(s.begin(), s.end(), b.ids.begin() + i * b.width);
    }
    cursor_ += take;
    return b;
}

} // namespace sparsegan
