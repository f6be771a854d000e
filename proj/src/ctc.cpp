#include "linerec/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "linerec/errors.hpp"
#include "linerec/utf8.hpp"

namespace linerec {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace

Alphabet Alphabet::from_utf8(const std::string& s) {
    Alphabet a;
    a.chars_ = [&] {
        std::u32string u = utf8_decode(s);
        return std::vector<char32_t>(u.begin(), u.end());
    }();
    if (a.chars_.empty()) throw InputError("alphabet: empty");
    for (size_t i = 0; i < a.chars_.size(); ++i)
        for (size_t j = i + 1; j < a.chars_.size(); ++j)
            if (a.chars_[i] == a.chars_[j]) throw InputError("alphabet: duplicate symbol");
    return a;
}

int Alphabet::id_of(char32_t c) const {
    for (size_t i = 0; i < chars_.size(); ++i)
        if (chars_[i] == c) return static_cast<int>(i);
    return -1;
}

std::u32string Alphabet::labels_to_text(const std::vector<int>& labels) const {
    std::u32string out;
    out.reserve(labels.size());
    for (int l : labels) out.push_back(chars_[static_cast<size_t>(l)]);
    return out;
}

std::string Alphabet::labels_to_utf8(const std::vector<int>& labels) const {
    return utf8_encode(labels_to_text(labels));
}

std::string Alphabet::to_utf8() const {
    std::u32string u(chars_.begin(), chars_.end());
    return utf8_encode(u);
}

void FrameLogits::validate() const {
    if (scores.rank() != 2) throw DimensionError("frame logits: expected T x (A+1)");
    if (scores.dim(0) < 1) throw InputError("frame logits: need at least one frame");
    if (scores.dim(1) != alphabet.size() + 1)
        throw DimensionError("frame logits: class count must be alphabet size + 1");
    if (!scores.all_finite()) throw InputError("frame logits: non-finite scores");
}

std::vector<int> collapse(const std::vector<int>& path, int blank_id) {
    std::vector<int> out;
    int prev = -1;
    for (int l : path) {
        if (l < 0 || l > blank_id) throw InputError("collapse: label out of range");
        if (l != prev && l != blank_id) out.push_back(l);
        prev = l;
    }
    return out;
}

std::string collapse_to_utf8(const std::vector<int>& path, const Alphabet& alphabet) {
    return alphabet.labels_to_utf8(collapse(path, alphabet.size()));
}

std::string greedy_decode(const FrameLogits& logits) {
    logits.validate();
    const int64_t T = logits.frames();
    const int64_t C = logits.scores.dim(1);
    std::vector<int> path(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
        int best = 0;
        float best_val = logits.scores.at(t, 0);
        for (int64_t c = 1; c < C; ++c) {
            if (logits.scores.at(t, c) > best_val) {
                best_val = logits.scores.at(t, c);
                best = static_cast<int>(c);
            }
        }
        path[static_cast<size_t>(t)] = best;
    }
    return collapse_to_utf8(path, logits.alphabet);
}

namespace {

// Extension kinds, also the deterministic priority order used when two
// lineages reach one prefix with equal probability mass.
enum class Ext { Blank = 0, Repeat = 1, NewChar = 2 };

struct Hyp {
    double lp_blank = kNegInf;     // mass of paths ending in blank
    double lp_nonblank = kNegInf;  // mass of paths ending in the last label
    double lm_log = 0.0;
    double prior_log = 0.0;
    int64_t n_blank = 0;
    int64_t n_repeat = 0;
    // Largest single contribution seen this frame; its lineage supplies the
    // transition counters and LM totals after a merge.
    double best_mass = kNegInf;
    int best_kind = 3;

    double lp_total() const { return log_sum_exp(lp_blank, lp_nonblank); }
};

struct FeatureCarry {
    double lm_log = 0.0;
    double prior_log = 0.0;
    int64_t n_blank = 0;
    int64_t n_repeat = 0;
};

void offer(Hyp& h, Ext kind, double mass, const FeatureCarry& carry) {
    if (mass == kNegInf) return;
    if (kind == Ext::Blank) {
        h.lp_blank = log_sum_exp(h.lp_blank, mass);
    } else {
        h.lp_nonblank = log_sum_exp(h.lp_nonblank, mass);
    }
    int k = static_cast<int>(kind);
    if (mass > h.best_mass || (mass == h.best_mass && k < h.best_kind)) {
        h.best_mass = mass;
        h.best_kind = k;
        h.lm_log = carry.lm_log;
        h.prior_log = carry.prior_log;
        h.n_blank = carry.n_blank + (kind == Ext::Blank ? 1 : 0);
        h.n_repeat = carry.n_repeat + (kind == Ext::Repeat ? 1 : 0);
    }
}

double hyp_cost(const Hyp& h, size_t prefix_len, const LogLinearWeights& w) {
    double cost = w.ctc * -h.lp_total();
    if (w.lm != 0.0) cost += w.lm * -h.lm_log;
    if (w.prior != 0.0) cost += w.prior * -h.prior_log;
    if (w.new_char != 0.0) cost += w.new_char * static_cast<double>(prefix_len);
    if (w.blank != 0.0) cost += w.blank * static_cast<double>(h.n_blank);
    if (w.repeat != 0.0) cost += w.repeat * static_cast<double>(h.n_repeat);
    return cost;
}

// Log softmax of one frame in double precision.
std::vector<double> frame_log_probs(const Tensor& scores, int64_t t) {
    const int64_t C = scores.dim(1);
    double mx = scores.at(t, 0);
    for (int64_t c = 1; c < C; ++c) mx = std::max<double>(mx, scores.at(t, c));
    double sum = 0.0;
    std::vector<double> lp(static_cast<size_t>(C));
    for (int64_t c = 0; c < C; ++c) {
        lp[static_cast<size_t>(c)] = static_cast<double>(scores.at(t, c)) - mx;
        sum += std::exp(lp[static_cast<size_t>(c)]);
    }
    double lz = std::log(sum);
    for (double& v : lp) v -= lz;
    return lp;
}

}  // namespace

std::vector<ScoredText> beam_search_log_probs(const std::vector<std::vector<double>>& log_probs,
                                              const Alphabet& alphabet, int beam_width,
                                              const CharNGramLM* lm,
                                              const LogLinearWeights& weights) {
    if (beam_width < 1) throw ParameterError("beam search: beam_width must be >= 1");
    if (log_probs.empty()) throw InputError("beam search: need at least one frame");
    const int A = alphabet.size();
    const int64_t T = static_cast<int64_t>(log_probs.size());

    using Beam = std::map<std::vector<int>, Hyp>;
    Beam beam;
    {
        Hyp root;
        root.lp_blank = 0.0;  // ln 1: empty path
        beam.emplace(std::vector<int>{}, root);
    }

    for (int64_t t = 0; t < T; ++t) {
        const std::vector<double>& lp = log_probs[static_cast<size_t>(t)];
        if (lp.size() != static_cast<size_t>(A) + 1)
            throw DimensionError("beam search: frame class count must be alphabet size + 1");
        const double lp_blank_cls = lp[static_cast<size_t>(A)];
        Beam next;
        auto offer_to = [&](const std::vector<int>& key, Ext kind, double mass,
                            const FeatureCarry& carry) {
            if (mass == kNegInf) return;
            offer(next[key], kind, mass, carry);
        };
        for (const auto& [prefix, h] : beam) {
            FeatureCarry carry{h.lm_log, h.prior_log, h.n_blank, h.n_repeat};
            std::u32string text;
            if (lm != nullptr) text = alphabet.labels_to_text(prefix);
            // Stay on the same prefix via a blank frame.
            offer_to(prefix, Ext::Blank, h.lp_total() + lp_blank_cls, carry);
            // Stay on the same prefix by repeating its last label.
            if (!prefix.empty()) {
                double mass = h.lp_nonblank + lp[static_cast<size_t>(prefix.back())];
                offer_to(prefix, Ext::Repeat, mass, carry);
            }
            // Grow the prefix by one label.
            for (int c = 0; c < A; ++c) {
                double base = (!prefix.empty() && c == prefix.back()) ? h.lp_blank : h.lp_total();
                if (base == kNegInf) continue;
                double mass = base + lp[static_cast<size_t>(c)];
                FeatureCarry grown = carry;
                if (lm != nullptr) {
                    char32_t ch = alphabet.character(c);
                    grown.lm_log += lm->log_score(lm->context_of(text), ch);
                    grown.prior_log += lm->log_unigram(ch);
                }
                std::vector<int> grown_prefix = prefix;
                grown_prefix.push_back(c);
                offer_to(grown_prefix, Ext::NewChar, mass, grown);
            }
        }

        // Prune to the beam width by total cost, ties toward the smaller text.
        std::vector<std::pair<const std::vector<int>*, const Hyp*>> ranked;
        ranked.reserve(next.size());
        for (const auto& [prefix, h] : next) ranked.emplace_back(&prefix, &h);
        std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
            double ca = hyp_cost(*a.second, a.first->size(), weights);
            double cb = hyp_cost(*b.second, b.first->size(), weights);
            if (ca != cb) return ca < cb;
            return alphabet.labels_to_text(*a.first) < alphabet.labels_to_text(*b.first);
        });
        Beam pruned;
        for (size_t i = 0; i < ranked.size() && i < static_cast<size_t>(beam_width); ++i)
            pruned.emplace(*ranked[i].first, *ranked[i].second);
        beam = std::move(pruned);
    }

    std::vector<std::pair<std::vector<int>, Hyp>> final_hyps(beam.begin(), beam.end());
    std::stable_sort(final_hyps.begin(), final_hyps.end(), [&](const auto& a, const auto& b) {
        double ca = hyp_cost(a.second, a.first.size(), weights);
        double cb = hyp_cost(b.second, b.first.size(), weights);
        if (ca != cb) return ca < cb;
        return alphabet.labels_to_text(a.first) < alphabet.labels_to_text(b.first);
    });

    std::vector<ScoredText> out;
    out.reserve(final_hyps.size());
    for (const auto& [prefix, h] : final_hyps)
        out.push_back({alphabet.labels_to_utf8(prefix), h.lp_total()});
    return out;
}

std::vector<ScoredText> beam_search_ranked(const FrameLogits& logits, int beam_width,
                                           const CharNGramLM* lm,
                                           const LogLinearWeights& weights) {
    logits.validate();
    std::vector<std::vector<double>> lp;
    lp.reserve(static_cast<size_t>(logits.frames()));
    for (int64_t t = 0; t < logits.frames(); ++t)
        lp.push_back(frame_log_probs(logits.scores, t));
    return beam_search_log_probs(lp, logits.alphabet, beam_width, lm, weights);
}

std::vector<ScoredText> prefix_beam_search(const FrameLogits& logits, int beam_width) {
    return beam_search_ranked(logits, beam_width, nullptr, LogLinearWeights{});
}

std::string decode_fused(const FrameLogits& logits, const CharNGramLM& lm,
                         const LogLinearWeights& weights, int beam_width) {
    if (logits.alphabet.size() == 0) throw InputError("decode_fused: empty alphabet");
    auto ranked = beam_search_ranked(logits, beam_width, &lm, weights);
    return ranked.front().text;
}

}  // namespace linerec
