#pragma once

#include <string>
#include <vector>

#include "linerec/char_lm.hpp"
#include "linerec/ctc.hpp"

namespace linerec {

struct DevExample {
    FrameLogits logits;
    std::string truth;
};

struct MertConfig {
    int beam_width = 8;
    int max_rounds = 10;
    int grid_points = 17;       // geometric grid spanning 1e-2..1e2 x current
    double grid_lo = 1e-2;
    double grid_hi = 1e2;
    // Which of {lm, prior, new_char, blank, repeat} move; ctc is the fixed
    // scale anchor and never moves.
    bool tune_lm = true;
    bool tune_prior = true;
    bool tune_new_char = true;
    bool tune_blank = true;
    bool tune_repeat = true;
};

struct TuneReport {
    LogLinearWeights best;
    double cer_before = 0.0;
    double cer_after = 0.0;
    int rounds = 0;
    std::vector<double> trajectory;  // dev CER after each accepted change
};

// Aggregate dev CER (pooled edit distance / pooled truth length) of fused
// decoding with the given weights.
double dev_error(const std::vector<DevExample>& examples, const CharNGramLM& lm,
                 const LogLinearWeights& weights, int beam_width = 8);

// Round-robin coordinate descent with a geometric line-search grid per
// weight. Ties prefer the smaller magnitude; lambda_ctc stays at 1.
TuneReport mert_tune(const std::vector<DevExample>& examples, const CharNGramLM& lm,
                     const LogLinearWeights& init, const MertConfig& config = {});

// Flat key:value serialization of the six weights.
std::string weights_to_json(const LogLinearWeights& w);
LogLinearWeights weights_from_json(const std::string& json_text);
LogLinearWeights load_weights_file(const std::string& path);
void save_weights_file(const LogLinearWeights& w, const std::string& path);

}  // namespace linerec
