#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace linerec {

// Character n-gram model with stupid backoff:
//   S(c|ctx) = count(ctx.c) / count(ctx)      when count(ctx.c) > 0
//            = alpha * S(c|ctx minus leftmost) otherwise
//   S(c)     = count(c) / total unigrams, floored at kUnseenFloor for
//              characters never observed.
// Scores are not normalized probabilities. Contexts at line start are padded
// with a BOS sentinel so early characters score against line-initial counts.
class CharNGramLM {
public:
    static constexpr char32_t kBos = 0x0002;  // sentinel, never part of text
    static constexpr double kUnseenFloor = 1e-7;

    CharNGramLM() = default;
    CharNGramLM(int order, double alpha) : order_(order), alpha_(alpha) {}

    int order() const { return order_; }
    double alpha() const { return alpha_; }

    // Counts every n-gram of orders 1..N in every line, BOS padded.
    static CharNGramLM train(const std::vector<std::string>& corpus_lines, int order,
                             double alpha = 0.4);

    // Natural log of the backoff score of c after `context` (most recent
    // character last). Context longer than N-1 is truncated from the left.
    double log_score(const std::u32string& context, char32_t c) const;

    // Natural log unigram score of c (the prior feature reuses this table).
    double log_unigram(char32_t c) const;

    // Sum of per-character log scores with a sliding BOS-padded context.
    double sequence_log_score(const std::u32string& text) const;

    // Characters observed at the unigram level.
    std::vector<char32_t> alphabet() const;

    uint64_t unigram_total() const { return total_unigrams_; }
    uint64_t count(const std::u32string& gram) const;

    void save(const std::string& path) const;
    static CharNGramLM load(const std::string& path);

    // BOS-padded scoring context for text already emitted.
    std::u32string context_of(const std::u32string& prefix) const;

private:
    struct U32Hash {
        size_t operator()(const std::u32string& s) const;
    };
    using CountMap = std::unordered_map<std::u32string, uint64_t, U32Hash>;

    void add_gram(const std::u32string& gram);
    double score(const std::u32string& context, char32_t c) const;

    int order_ = 0;
    double alpha_ = 0.4;
    // grams_[k]: counts of (k+1)-grams; contexts_[k]: summed continuation
    // counts keyed by the k-character context of a (k+1)-gram.
    std::vector<CountMap> grams_;
    std::vector<CountMap> contexts_;
    uint64_t total_unigrams_ = 0;
};

}  // namespace linerec
