#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linerec/char_lm.hpp"
#include "linerec/ctc.hpp"
#include "linerec/image.hpp"
#include "linerec/metrics.hpp"
#include "linerec/model_bundle.hpp"

namespace linerec {

enum class DecodeStrategy { Greedy, Beam, Fused, Transformer };

DecodeStrategy strategy_from_string(const std::string& s);

struct TimingBreakdown {
    double backbone_ms = 0.0;
    double encoder_ms = 0.0;
    double decoder_ms = 0.0;
    double total_ms() const { return backbone_ms + encoder_ms + decoder_ms; }
};

struct RecognizeOptions {
    DecodeStrategy strategy = DecodeStrategy::Greedy;
    int beam_width = 8;
    const CharNGramLM* lm = nullptr;
    LogLinearWeights weights;
    std::optional<int64_t> chunk_pad_px;  // overrides the model config
    std::optional<int64_t> max_width;     // overrides M for the transformer path
    int threads = 1;                      // chunk-level workers on the CTC path
};

struct RecognizeResult {
    std::string text;
    TimingBreakdown timing;
};

// Chunked CTC front half: plan -> split -> backbone+encoder per chunk ->
// merge valid -> logits head. Chunks may be processed by several workers;
// the merge order is fixed, so the result is thread-count independent.
FrameLogits ctc_path_logits(const Tensor& image, const LoadedModel& m, int64_t pad_px,
                            TimingBreakdown* timing = nullptr, int threads = 1);

// Transformer front half: anisotropic width resize down to M (when wider) or
// policy padding up to M.
Tensor prepare_transformer_input(const Tensor& image, int64_t max_width, PaddingPolicy policy);

RecognizeResult recognize_line(const LineImage& img, const LoadedModel& m,
                               const RecognizeOptions& opt);

struct ManifestRecord {
    std::string image_path;
    std::string transcription;
};

// `path<TAB>transcription` UTF-8 lines; paths resolve against the manifest
// file's directory.
std::vector<ManifestRecord> load_manifest(const std::string& path);

struct LineResult {
    std::string image_path;
    int64_t width_px = 0;
    std::string truth;
    std::string prediction;
    bool failed = false;  // image unreadable; prediction is empty
};

struct EvalOutput {
    EvalReport report;
    std::vector<LineResult> lines;
    int64_t failed_records = 0;
    std::string lines_to_tsv() const;
};

// Recognizes every manifest record with a bounded worker pool. Output order
// matches manifest order regardless of scheduling.
EvalOutput evaluate(const std::vector<ManifestRecord>& manifest, const LoadedModel& m,
                    const RecognizeOptions& opt, int threads = 1);

struct BenchVariant {
    std::string label;
    const LoadedModel* model = nullptr;
    DecodeStrategy strategy = DecodeStrategy::Greedy;
};

struct BenchRow {
    std::string label;
    int64_t width_px = 0;
    int reps = 0;
    double backbone_ms = 0.0;
    double encoder_ms = 0.0;
    double decoder_ms = 0.0;
    double total_ms = 0.0;
};

// Runs each variant `reps` times on one seeded random line of the given
// width and reports per-stage medians.
std::vector<BenchRow> bench(const std::vector<BenchVariant>& variants, int64_t width_px,
                            int reps, uint64_t seed = 1);
std::string bench_to_csv(const std::vector<BenchRow>& rows);

}  // namespace linerec
