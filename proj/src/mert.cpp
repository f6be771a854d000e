#include "linerec/mert.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "linerec/errors.hpp"
#include "linerec/metrics.hpp"
#include "linerec/utf8.hpp"

namespace linerec {

double dev_error(const std::vector<DevExample>& examples, const CharNGramLM& lm,
                 const LogLinearWeights& weights, int beam_width) {
    if (examples.empty()) throw InputError("dev_error: empty dev set");
    int64_t total_dist = 0, total_len = 0;
    for (const DevExample& ex : examples) {
        std::string pred = decode_fused(ex.logits, lm, weights, beam_width);
        std::u32string p = utf8_decode(pred);
        std::u32string t = utf8_decode(ex.truth);
        total_dist += t.empty() ? static_cast<int64_t>(p.size()) : levenshtein(p, t);
        total_len += static_cast<int64_t>(t.size());
    }
    if (total_len == 0) return total_dist == 0 ? 0.0 : static_cast<double>(total_dist);
    return static_cast<double>(total_dist) / static_cast<double>(total_len);
}

namespace {

std::vector<double> candidate_grid(double current, const MertConfig& cfg) {
    std::vector<double> values;
    values.push_back(0.0);
    values.push_back(current);
    const double base = current == 0.0 ? 1.0 : std::fabs(current);
    const double lr = std::log(cfg.grid_lo), hr = std::log(cfg.grid_hi);
    for (int i = 0; i < cfg.grid_points; ++i) {
        double f = cfg.grid_points == 1
                       ? 0.5
                       : static_cast<double>(i) / static_cast<double>(cfg.grid_points - 1);
        values.push_back(base * std::exp(lr + f * (hr - lr)));
    }
    return values;
}

double* weight_slot(LogLinearWeights& w, int idx) {
    switch (idx) {
        case 0: return &w.lm;
        case 1: return &w.prior;
        case 2: return &w.new_char;
        case 3: return &w.blank;
        case 4: return &w.repeat;
        default: return nullptr;
    }
}

bool tunable(const MertConfig& cfg, int idx) {
    switch (idx) {
        case 0: return cfg.tune_lm;
        case 1: return cfg.tune_prior;
        case 2: return cfg.tune_new_char;
        case 3: return cfg.tune_blank;
        case 4: return cfg.tune_repeat;
        default: return false;
    }
}

}  // namespace

TuneReport mert_tune(const std::vector<DevExample>& examples, const CharNGramLM& lm,
                     const LogLinearWeights& init, const MertConfig& config) {
    TuneReport report;
    LogLinearWeights w = init;
    w.ctc = 1.0;  // scale anchor
    report.cer_before = dev_error(examples, lm, w, config.beam_width);
    double best_err = report.cer_before;
    report.trajectory.push_back(best_err);

    for (int round = 0; round < config.max_rounds; ++round) {
        bool improved = false;
        for (int idx = 0; idx < 5; ++idx) {
            if (!tunable(config, idx)) continue;
            double* slot = weight_slot(w, idx);
            const double current = *slot;
            double best_val = current;
            for (double cand : candidate_grid(current, config)) {
                *slot = cand;
                double err = dev_error(examples, lm, w, config.beam_width);
                bool better = err < best_err;
                bool tie_smaller = err == best_err && std::fabs(cand) < std::fabs(best_val);
                if (better || tie_smaller) {
                    best_err = err;
                    best_val = cand;
                    if (better) improved = true;
                }
            }
            *slot = best_val;
            report.trajectory.push_back(best_err);
        }
        ++report.rounds;
        if (!improved) break;
    }

    report.best = w;
    report.cer_after = best_err;
    return report;
}

std::string weights_to_json(const LogLinearWeights& w) {
    nlohmann::json j;
    j["ctc"] = w.ctc;
    j["lm"] = w.lm;
    j["prior"] = w.prior;
    j["new_char"] = w.new_char;
    j["blank"] = w.blank;
    j["repeat"] = w.repeat;
    return j.dump(2) + "\n";
}

LogLinearWeights weights_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("weights: invalid JSON: ") + e.what());
    }
    LogLinearWeights w;
    w.ctc = j.value("ctc", 1.0);
    w.lm = j.value("lm", 0.0);
    w.prior = j.value("prior", 0.0);
    w.new_char = j.value("new_char", 0.0);
    w.blank = j.value("blank", 0.0);
    w.repeat = j.value("repeat", 0.0);
    if (!std::isfinite(w.ctc) || !std::isfinite(w.lm) || !std::isfinite(w.prior) ||
        !std::isfinite(w.new_char) || !std::isfinite(w.blank) || !std::isfinite(w.repeat))
        throw FormatError("weights: values must be finite");
    return w;
}

LogLinearWeights load_weights_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("weights: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return weights_from_json(text);
}

void save_weights_file(const LogLinearWeights& w, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw InputError("weights: cannot open " + path + " for writing");
    os << weights_to_json(w);
}

}  // namespace linerec
