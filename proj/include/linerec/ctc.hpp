#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "linerec/alphabet.hpp"
#include "linerec/char_lm.hpp"
#include "linerec/tensor.hpp"

namespace linerec {

// Raw per-frame class scores, T x (A+1), blank in the last column.
struct FrameLogits {
    Tensor scores;
    Alphabet alphabet;

    int64_t frames() const { return scores.dim(0); }
    int blank_id() const { return alphabet.size(); }
    void validate() const;  // shape/finiteness checks
};

// Log-linear feature weights for fused decoding. All features are costs
// (negative log scores or transition counts); lower total cost wins.
struct LogLinearWeights {
    double ctc = 1.0;
    double lm = 0.0;
    double prior = 0.0;
    double new_char = 0.0;
    double blank = 0.0;
    double repeat = 0.0;
};

// Merge adjacent duplicates, then drop blanks. Labels must be in [0, A].
std::vector<int> collapse(const std::vector<int>& path, int blank_id);
std::string collapse_to_utf8(const std::vector<int>& path, const Alphabet& alphabet);

// Per-frame argmax (ties -> lowest class index), then collapse.
std::string greedy_decode(const FrameLogits& logits);

struct ScoredText {
    std::string text;
    double log_prob;  // total CTC log probability of the prefix
};

// Prefix beam search over softmaxed frames. Returns hypotheses ranked best
// first; ties broken toward the lexicographically smallest text.
std::vector<ScoredText> prefix_beam_search(const FrameLogits& logits, int beam_width);

// Beam search ranked by the full log-linear cost. The LM must cover the
// logits alphabet (unseen characters fall back to the floor score).
std::string decode_fused(const FrameLogits& logits, const CharNGramLM& lm,
                         const LogLinearWeights& weights, int beam_width);

// Shared engine used by both entry points; exposed for tests that want the
// track of ranked hypotheses under a fused cost.
std::vector<ScoredText> beam_search_ranked(const FrameLogits& logits, int beam_width,
                                           const CharNGramLM* lm, const LogLinearWeights& weights);

// Double-precision core: per-frame class log-probabilities, blank last.
// The f32 entry points softmax their logits and delegate here.
std::vector<ScoredText> beam_search_log_probs(const std::vector<std::vector<double>>& log_probs,
                                              const Alphabet& alphabet, int beam_width,
                                              const CharNGramLM* lm,
                                              const LogLinearWeights& weights);

}  // namespace linerec
