#include "sparsegan/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "sparsegan/errors.hpp"
#include "sparsegan/tolerances.hpp"

namespace sparsegan {

namespace {

// n-grams keyed as tokens joined on a separator that cannot appear inside a
// whitespace-split token.
constexpr char kSep = '\x1f';

using Profile = std::unordered_map<std::string, int64_t>;

Profile profile_of(const TokenSentence& s, int n) {
    Profile p;
    const int64_t len = static_cast<int64_t>(s.size());
    for (int64_t i = 0; i + n <= len; ++i) {
        std::string key = s[static_cast<size_t>(i)];
        for (int j = 1; j < n; ++j) {
            key.push_back(kSep);
            key += s[static_cast<size_t>(i + j)];
        }
        ++p[key];
    }
    return p;
}

// Per-order reference caps: max count of each n-gram over all references.
std::vector<Profile> reference_caps(const std::vector<TokenSentence>& refs, int n_max) {
    std::vector<Profile> caps(static_cast<size_t>(n_max));
    for (const auto& r : refs) {
        for (int n = 1; n <= n_max; ++n) {
            Profile p = profile_of(r, n);
            Profile& cap = caps[static_cast<size_t>(n - 1)];
            for (auto& [key, count] : p) {
                auto it = cap.find(key);
                if (it == cap.end()) {
                    cap.emplace(key, count);
                } else {
                    it->second = std::max(it->second, count);
                }
            }
        }
    }
    return caps;
}

double closest_ref_length(int64_t cand_len, const std::vector<TokenSentence>& refs) {
    int64_t best = static_cast<int64_t>(refs[0].size());
    for (const auto& r : refs) {
        const int64_t len = static_cast<int64_t>(r.size());
        const int64_t d_new = std::llabs(len - cand_len);
        const int64_t d_old = std::llabs(best - cand_len);
        if (d_new < d_old || (d_new == d_old && len < best)) best = len;
    }
    return static_cast<double>(best);
}

double bleu_single(const TokenSentence& cand, const std::vector<TokenSentence>& refs,
                   const std::vector<Profile>& caps, int n_max) {
    double log_sum = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        Profile p = profile_of(cand, n);
        int64_t total = 0, clipped = 0;
        const Profile& cap = caps[static_cast<size_t>(n - 1)];
        for (auto& [key, count] : p) {
            total += count;
            auto it = cap.find(key);
            if (it != cap.end()) clipped += std::min(count, it->second);
        }
        double prec = total > 0 ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
        prec = std::max(prec, tol::kBleuEpsilon);
        log_sum += std::log(prec);
    }
    const double geo = std::exp(log_sum / static_cast<double>(n_max));

    const double c = static_cast<double>(cand.size());
    const double r = closest_ref_length(static_cast<int64_t>(cand.size()), refs);
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return bp * geo;
}

} // namespace

BleuResult bleu_n(const std::vector<TokenSentence>& candidates,
                  const std::vector<TokenSentence>& references, int n_max) {
    if (candidates.empty()) throw EmptyInputError("bleu_n: no candidates");
    if (references.empty()) throw EmptyInputError("bleu_n: no references");
    if (n_max < 1) throw ConfigError("bleu_n: order must be >= 1");

    const auto caps = reference_caps(references, n_max);
    BleuResult out;
    double sum = 0.0;
    int64_t scored = 0;
    for (const auto& cand : candidates) {
        if (cand.empty()) {
            ++out.skipped;
            continue;
        }
        sum += bleu_single(cand, references, caps, n_max);
        ++scored;
    }
    out.score = scored > 0 ? sum / static_cast<double>(scored) : 0.0;
    return out;
}

double self_bleu(const std::vector<TokenSentence>& candidates, int n_max) {
    if (candidates.size() < 2) throw ConfigError("self_bleu: need at least two candidates");
    double sum = 0.0;
    int64_t scored = 0;
    std::vector<TokenSentence> rest;
    rest.reserve(candidates.size() - 1);
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].empty()) continue;
        rest.clear();
        for (size_t j = 0; j < candidates.size(); ++j)
            if (j != i) rest.push_back(candidates[j]);
        sum += bleu_single(candidates[i], rest, reference_caps(rest, n_max), n_max);
        ++scored;
    }
    return scored > 0 ? sum / static_cast<double>(scored) : 0.0;
}

std::map<std::vector<std::string>, int64_t> ngram_oracle(const TokenSentence& sentence, int n) {
    if (n < 1) throw ConfigError("ngram_oracle: order must be >= 1");
    std::map<std::vector<std::string>, int64_t> counts;
    for (size_t i = 0; i + static_cast<size_t>(n) <= sentence.size(); ++i) {
        std::vector<std::string> gram;
        for (size_t j = 0; j < static_cast<size_t>(n); ++j) gram.push_back(sentence[i + j]);
        ++counts[gram];
    }
    return counts;
}

} // namespace sparsegan
