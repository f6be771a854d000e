#include "linerec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "linerec/errors.hpp"
#include "linerec/utf8.hpp"

namespace linerec {

int64_t levenshtein(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    const size_t n = b.size();
    std::vector<int64_t> prev(n + 1), cur(n + 1);
    for (size_t j = 0; j <= n; ++j) prev[j] = static_cast<int64_t>(j);
    for (size_t i = 0; i < a.size(); ++i) {
        cur[0] = static_cast<int64_t>(i) + 1;
        for (size_t j = 0; j < n; ++j) {
            int64_t sub = prev[j] + (a[i] == b[j] ? 0 : 1);
            cur[j + 1] = std::min({prev[j + 1] + 1, cur[j] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

int64_t levenshtein(const std::u32string& a, const std::u32string& b) {
    std::vector<uint32_t> va(a.begin(), a.end()), vb(b.begin(), b.end());
    return levenshtein(va, vb);
}

double cer(const std::string& prediction, const std::string& truth) {
    std::u32string p = utf8_decode(prediction);
    std::u32string t = utf8_decode(truth);
    if (t.empty()) return p.empty() ? 0.0 : static_cast<double>(p.size());
    return static_cast<double>(levenshtein(p, t)) / static_cast<double>(t.size());
}

namespace {

// Map whitespace tokens of both strings into shared integer ids so the word
// distance reuses the sequence DP.
std::vector<uint32_t> word_ids(const std::vector<std::u32string>& words,
                               std::map<std::u32string, uint32_t>& table) {
    std::vector<uint32_t> ids;
    ids.reserve(words.size());
    for (const auto& w : words) {
        auto [it, inserted] = table.emplace(w, static_cast<uint32_t>(table.size()));
        ids.push_back(it->second);
    }
    return ids;
}

}  // namespace

double wpa(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw InputError("wpa: no records");
    int64_t total_words = 0, total_errors = 0;
    for (const auto& r : records) {
        std::map<std::u32string, uint32_t> table;
        auto tw = split_words(fold_case(utf8_decode(r.truth)));
        auto pw = split_words(fold_case(utf8_decode(r.prediction)));
        auto tids = word_ids(tw, table);
        auto pids = word_ids(pw, table);
        total_words += static_cast<int64_t>(tids.size());
        total_errors += levenshtein(pids, tids);
    }
    if (total_words == 0) throw InputError("wpa: ground truth contains no words");
    double wer = static_cast<double>(total_errors) / static_cast<double>(total_words);
    return 1.0 - wer;
}

double BucketStats::cer() const {
    if (truth_length == 0) return edit_distance == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(edit_distance) / static_cast<double>(truth_length);
}

EvalReport bucketed_cer(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw InputError("bucketed_cer: no records");
    EvalReport report;
    for (const auto& r : records) {
        if (r.width_px <= 0) throw InputError("bucketed_cer: width must be positive");
        std::u32string p = utf8_decode(r.prediction);
        std::u32string t = utf8_decode(r.truth);
        int64_t dist = t.empty() ? static_cast<int64_t>(p.size()) : levenshtein(p, t);
        if (t.empty()) ++report.empty_truth_records;
        int64_t bucket = (r.width_px / 100) * 100;
        BucketStats& b = report.buckets[bucket];
        ++b.count;
        b.edit_distance += dist;
        b.truth_length += static_cast<int64_t>(t.size());
        report.total_edit_distance += dist;
        report.total_truth_length += static_cast<int64_t>(t.size());
    }
    report.cer = report.total_truth_length == 0
                     ? (report.total_edit_distance == 0 ? 0.0 : std::numeric_limits<double>::infinity())
                     : static_cast<double>(report.total_edit_distance) /
                           static_cast<double>(report.total_truth_length);
    report.wpa = wpa(records);
    return report;
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os.precision(9);
    os << "bucket_start_px,count,cer\n";
    for (const auto& [start, b] : buckets)
        os << start << "," << b.count << "," << b.cer() << "\n";
    int64_t total = 0;
    for (const auto& [start, b] : buckets) total += b.count;
    os << "all," << total << "," << cer << "\n";
    return os.str();
}

}  // namespace linerec
