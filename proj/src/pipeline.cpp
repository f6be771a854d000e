#include "linerec/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "linerec/errors.hpp"
#include "linerec/kernels.hpp"
#include "linerec/transformer_decoder.hpp"

namespace linerec {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

DecodeStrategy strategy_from_string(const std::string& s) {
    if (s == "greedy") return DecodeStrategy::Greedy;
    if (s == "beam") return DecodeStrategy::Beam;
    if (s == "fused") return DecodeStrategy::Fused;
    if (s == "transformer") return DecodeStrategy::Transformer;
    throw ParameterError("unknown decoder strategy: " + s);
}

FrameLogits ctc_path_logits(const Tensor& image, const LoadedModel& m, int64_t pad_px,
                            TimingBreakdown* timing, int threads) {
    if (!m.head.has_value()) throw InputError("ctc path: model has no logits head");
    ChunkPlan plan = plan_chunks(image.dim(1), pad_px);
    std::vector<Tensor> chunks = split(image, plan, m.config.chunk_policy);

    std::vector<Tensor> encoded(chunks.size());
    const int workers = std::clamp<int>(threads, 1, static_cast<int>(chunks.size()));
    std::vector<double> backbone_ms(static_cast<size_t>(workers), 0.0);
    std::vector<double> encoder_ms(static_cast<size_t>(workers), 0.0);
    std::atomic<size_t> next{0};
    auto work = [&](int slot) {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= chunks.size()) break;
            Clock::time_point t0 = Clock::now();
            Tensor frames = backbone_forward(chunks[i], m.backbone);
            backbone_ms[static_cast<size_t>(slot)] += ms_since(t0);
            Clock::time_point t1 = Clock::now();
            encoded[i] = m.encode(frames);
            encoder_ms[static_cast<size_t>(slot)] += ms_since(t1);
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (std::thread& t : pool) t.join();
    }
    if (timing != nullptr) {
        for (double v : backbone_ms) timing->backbone_ms += v;
        for (double v : encoder_ms) timing->encoder_ms += v;
    }
    Tensor merged = merge_valid(encoded, plan);

    FrameLogits out;
    out.scores = logits(merged, *m.head);
    out.alphabet = m.alphabet;
    return out;
}

Tensor prepare_transformer_input(const Tensor& image, int64_t max_width, PaddingPolicy policy) {
    const int64_t H = image.dim(0), W = image.dim(1);
    if (W == max_width) return image;
    if (W > max_width) {
        // Anisotropic: squeeze only the width.
        Tensor gray({H, W});
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) gray.at(y, x) = image.at(y, x, 0);
        Tensor resized = bilinear_resize_gray(gray, H, max_width);
        Tensor out({H, max_width, 1});
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < max_width; ++x) out.at(y, x, 0) = resized.at(y, x);
        return out;
    }
    return extend_line(image, 0, max_width - W, policy);
}

RecognizeResult recognize_line(const LineImage& img, const LoadedModel& m,
                               const RecognizeOptions& opt) {
    RecognizeResult result;
    const bool wants_transformer = opt.strategy == DecodeStrategy::Transformer;
    if (wants_transformer != (m.config.decoder == DecoderKind::Transformer))
        throw InputError("recognize: decoder strategy does not match the model's decoder");

    if (wants_transformer) {
        const int64_t M = opt.max_width.value_or(m.config.max_width);
        Tensor input = prepare_transformer_input(img.pixels, M, m.config.chunk_policy);
        Clock::time_point t0 = Clock::now();
        Tensor frames = backbone_forward(input, m.backbone);
        result.timing.backbone_ms = ms_since(t0);
        Clock::time_point t1 = Clock::now();
        Tensor enc = m.encode(frames);
        if (m.tfmr_enc_proj.has_value()) enc = matmul(enc, *m.tfmr_enc_proj);
        result.timing.encoder_ms = ms_since(t1);
        Clock::time_point t2 = Clock::now();
        GenerationConfig gen;
        gen.max_output_len = m.config.max_output_len;
        result.text = greedy_generate(enc, *m.tfmr, gen);
        result.timing.decoder_ms = ms_since(t2);
        return result;
    }

    const int64_t pad = opt.chunk_pad_px.value_or(m.config.chunk_pad_px);
    if (pad < receptive_field_radius(m.backbone))
        std::cerr << "warning: chunk pad " << pad << "px is below the backbone receptive radius "
                  << receptive_field_radius(m.backbone) << "px; chunk seams may differ\n";
    FrameLogits frame_logits = ctc_path_logits(img.pixels, m, pad, &result.timing, opt.threads);

    Clock::time_point t0 = Clock::now();
    switch (opt.strategy) {
        case DecodeStrategy::Greedy:
            result.text = greedy_decode(frame_logits);
            break;
        case DecodeStrategy::Beam:
            result.text = prefix_beam_search(frame_logits, opt.beam_width).front().text;
            break;
        case DecodeStrategy::Fused:
            if (opt.lm == nullptr) throw InputError("recognize: fused decoding requires an LM");
            result.text = decode_fused(frame_logits, *opt.lm, opt.weights, opt.beam_width);
            break;
        case DecodeStrategy::Transformer:
            break;  // handled above
    }
    result.timing.decoder_ms = ms_since(t0);
    return result;
}

std::vector<ManifestRecord> load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("manifest: cannot open " + path);
    std::filesystem::path dir = std::filesystem::path(path).parent_path();
    std::vector<ManifestRecord> records;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("manifest: missing TAB separator");
        ManifestRecord r;
        std::filesystem::path p(line.substr(0, tab));
        r.image_path = p.is_absolute() ? p.string() : (dir / p).string();
        r.transcription = line.substr(tab + 1);
        records.push_back(std::move(r));
    }
    return records;
}

std::string EvalOutput::lines_to_tsv() const {
    std::ostringstream os;
    os << "path\twidth_px\ttruth\tprediction\tstatus\n";
    for (const LineResult& l : lines)
        os << l.image_path << "\t" << l.width_px << "\t" << l.truth << "\t" << l.prediction
           << "\t" << (l.failed ? "error" : "ok") << "\n";
    return os.str();
}

EvalOutput evaluate(const std::vector<ManifestRecord>& manifest, const LoadedModel& m,
                    const RecognizeOptions& opt, int threads) {
    if (manifest.empty()) throw InputError("evaluate: empty manifest");
    threads = std::max(threads, 1);

    EvalOutput out;
    out.lines.resize(manifest.size());

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= manifest.size()) break;
            const ManifestRecord& rec = manifest[i];
            LineResult& lr = out.lines[i];
            lr.image_path = rec.image_path;
            lr.truth = rec.transcription;
            try {
                LineImage img = load_line_image(rec.image_path);
                lr.width_px = img.normalized_width;
                lr.prediction = recognize_line(img, m, opt).text;
            } catch (const Error& e) {
                std::cerr << "error: " << rec.image_path << ": " << e.what() << "\n";
                lr.failed = true;
                lr.prediction.clear();
                if (lr.width_px <= 0) lr.width_px = 1;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    std::vector<EvalRecord> records;
    records.reserve(out.lines.size());
    for (const LineResult& l : out.lines) {
        if (l.failed) ++out.failed_records;
        records.push_back({l.prediction, l.truth, l.width_px});
    }
    out.report = bucketed_cer(records);
    return out;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<BenchRow> bench(const std::vector<BenchVariant>& variants, int64_t width_px,
                            int reps, uint64_t seed) {
    if (reps < 3) throw ParameterError("bench: need at least 3 repetitions for a median");
    Rng rng(seed);
    Tensor gray({LineImage::kHeight, width_px});
    for (int64_t i = 0; i < gray.size(); ++i) gray.at(i) = 255.0f * rng.next_float();
    LineImage img = line_image_from_gray(gray);

    std::vector<BenchRow> rows;
    for (const BenchVariant& variant : variants) {
        RecognizeOptions opt;
        opt.strategy = variant.strategy;
        std::vector<double> backbone, encoder, decoder, total;
        for (int r = 0; r < reps; ++r) {
            RecognizeResult res = recognize_line(img, *variant.model, opt);
            backbone.push_back(res.timing.backbone_ms);
            encoder.push_back(res.timing.encoder_ms);
            decoder.push_back(res.timing.decoder_ms);
            total.push_back(res.timing.total_ms());
        }
        BenchRow row;
        row.label = variant.label;
        row.width_px = width_px;
        row.reps = reps;
        row.backbone_ms = median(backbone);
        row.encoder_ms = median(encoder);
        row.decoder_ms = median(decoder);
        row.total_ms = median(total);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string bench_to_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os.precision(6);
    os << "variant,width_px,reps,backbone_ms,encoder_ms,decoder_ms,total_ms\n";
    for (const BenchRow& r : rows)
        os << r.label << "," << r.width_px << "," << r.reps << "," << std::fixed << r.backbone_ms
           << "," << r.encoder_ms << "," << r.decoder_ms << "," << r.total_ms << "\n";
    return os.str();
}

}  // namespace linerec
