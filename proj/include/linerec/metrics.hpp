#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace linerec {

// One evaluated line: prediction vs ground truth at a given
// height-normalized image width.
struct EvalRecord {
    std::string prediction;
    std::string truth;
    int64_t width_px = 0;
};

struct BucketStats {
    int64_t count = 0;
    int64_t edit_distance = 0;
    int64_t truth_length = 0;
    double cer() const;
};

struct EvalReport {
    double cer = 0.0;
    double wpa = 0.0;
    int64_t total_edit_distance = 0;
    int64_t total_truth_length = 0;
    // Keyed by bucket start px (floor(width/100)*100).
    std::map<int64_t, BucketStats> buckets;
    int64_t empty_truth_records = 0;  // flagged: CER convention is documented
    std::string to_csv() const;
};

// Minimal insert/delete/substitute count between two sequences.
int64_t levenshtein(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b);
int64_t levenshtein(const std::u32string& a, const std::u32string& b);

// Character error rate over Unicode scalar values, case sensitive.
// Empty truth: 0 when the prediction is also empty, otherwise len(pred)/1.
double cer(const std::string& prediction, const std::string& truth);

// Case-insensitive word prediction accuracy, 1 - WER. Words are whitespace
// tokens. Throws InputError when the records contain no truth words at all.
double wpa(const std::vector<EvalRecord>& records);

// Full report: micro-averaged CER, WPA, and per-100px-bucket CER.
EvalReport bucketed_cer(const std::vector<EvalRecord>& records);

}  // namespace linerec
