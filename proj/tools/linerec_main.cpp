#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "linerec/char_lm.hpp"
#include "linerec/errors.hpp"
#include "linerec/mert.hpp"
#include "linerec/model_bundle.hpp"
#include "linerec/pipeline.hpp"
#include "linerec/utf8.hpp"

namespace {

using namespace linerec;

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open " + path + " for writing");
    os << text;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return lines;
}

struct DecodeFlags {
    std::string decoder = "greedy";
    std::string lm_path;
    std::string weights_path;
    int beam_width = 8;
    std::optional<int64_t> max_width;
    std::optional<int64_t> chunk_pad;
};

void add_decode_flags(CLI::App* cmd, DecodeFlags& f) {
    cmd->add_option("--decoder", f.decoder, "greedy|beam|fused|transformer")
        ->check(CLI::IsMember({"greedy", "beam", "fused", "transformer"}));
    cmd->add_option("--lm", f.lm_path, "character LM file (.tllm), required for fused");
    cmd->add_option("--weights", f.weights_path, "log-linear weights JSON for fused");
    cmd->add_option("--beam-width", f.beam_width, "beam width for beam/fused")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-width", f.max_width, "transformer input width override");
    cmd->add_option("--chunk-pad", f.chunk_pad, "chunk overlap pad in px (multiple of 4)");
}

struct DecodeContext {
    RecognizeOptions opt;
    std::optional<CharNGramLM> lm;
};

DecodeContext make_options(const DecodeFlags& f) {
    DecodeContext ctx;
    ctx.opt.strategy = strategy_from_string(f.decoder);
    ctx.opt.beam_width = f.beam_width;
    ctx.opt.max_width = f.max_width;
    ctx.opt.chunk_pad_px = f.chunk_pad;
    if (!f.lm_path.empty()) {
        ctx.lm = CharNGramLM::load(f.lm_path);
        ctx.opt.lm = &*ctx.lm;
    }
    if (!f.weights_path.empty()) ctx.opt.weights = load_weights_file(f.weights_path);
    if (ctx.opt.strategy == DecodeStrategy::Fused && ctx.opt.lm == nullptr)
        throw InputError("fused decoding requires --lm");
    return ctx;
}

int run(int argc, char** argv) {
    CLI::App app{"Text-line recognition inference and evaluation engine"};
    app.require_subcommand(1);

    // recognize
    auto* rec = app.add_subcommand("recognize", "Transcribe one line image");
    std::string rec_model, rec_image, rec_out;
    int rec_threads = 1;
    DecodeFlags rec_flags;
    rec->add_option("--model", rec_model)->required();
    rec->add_option("--image", rec_image, "binary PGM (P5) line image")->required();
    rec->add_option("--out", rec_out, "also write the transcription to a file");
    rec->add_option("--threads", rec_threads, "chunk-level workers")->check(CLI::PositiveNumber);
    add_decode_flags(rec, rec_flags);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Evaluate a manifest of line images");
    std::string ev_model, ev_manifest, ev_out;
    int ev_threads = 1;
    DecodeFlags ev_flags;
    ev->add_option("--model", ev_model)->required();
    ev->add_option("--manifest", ev_manifest, "TSV: image path <TAB> transcription")->required();
    ev->add_option("--out", ev_out, "output prefix for <out>_lines.tsv and <out>_buckets.csv");
    ev->add_option("--threads", ev_threads)->check(CLI::PositiveNumber);
    add_decode_flags(ev, ev_flags);

    // bench
    auto* bn = app.add_subcommand("bench", "Latency comparison across model variants");
    std::vector<std::string> bn_models;
    int64_t bn_width = 320;
    int bn_reps = 5;
    uint64_t bn_seed = 1;
    std::string bn_out, bn_ctc_decoder = "greedy";
    bn->add_option("--model", bn_models, "model file; repeat for several variants")->required();
    bn->add_option("--width", bn_width, "input width in px");
    bn->add_option("--reps", bn_reps, "repetitions (median reported)");
    bn->add_option("--seed", bn_seed);
    bn->add_option("--out", bn_out, "CSV output path (default stdout)");
    bn->add_option("--ctc-decoder", bn_ctc_decoder, "strategy for CTC models")
        ->check(CLI::IsMember({"greedy", "beam"}));

    // lm-train
    auto* lt = app.add_subcommand("lm-train", "Train a character n-gram LM");
    std::string lt_in, lt_out;
    int lt_order = 9;
    double lt_alpha = 0.4;
    lt->add_option("--in", lt_in, "UTF-8 text corpus, one line per example")->required();
    lt->add_option("--out", lt_out)->required();
    lt->add_option("--order", lt_order, "max n-gram order N")->check(CLI::PositiveNumber);
    lt->add_option("--alpha", lt_alpha, "stupid-backoff factor");

    // mert
    auto* mt = app.add_subcommand("mert", "Tune log-linear weights on a dev set");
    std::string mt_dev, mt_lm, mt_model, mt_out, mt_init;
    int mt_beam = 8, mt_rounds = 10;
    mt->add_option("--dev", mt_dev, "dev manifest TSV")->required();
    mt->add_option("--lm", mt_lm)->required();
    mt->add_option("--model", mt_model)->required();
    mt->add_option("--out", mt_out, "tuned weights JSON")->required();
    mt->add_option("--init", mt_init, "initial weights JSON (default: CTC only)");
    mt->add_option("--beam-width", mt_beam)->check(CLI::PositiveNumber);
    mt->add_option("--rounds", mt_rounds)->check(CLI::PositiveNumber);

    // init-random
    auto* ir = app.add_subcommand("init-random", "Write a randomly initialized model");
    std::string ir_config, ir_out;
    uint64_t ir_seed = 0;
    ir->add_option("--config", ir_config, "model config JSON")->required();
    ir->add_option("--seed", ir_seed);
    ir->add_option("--out", ir_out)->required();

    // buckets
    auto* bk = app.add_subcommand("buckets", "Recompute the bucket CSV from a per-line TSV");
    std::string bk_in, bk_out;
    bk->add_option("--in", bk_in, "per-line TSV from evaluate")->required();
    bk->add_option("--out", bk_out, "bucket CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the parse message
        return code == 0 ? 0 : 1;
    }

    if (rec->parsed()) {
        DecodeContext ctx = make_options(rec_flags);
        ctx.opt.threads = rec_threads;
        LoadedModel model = load_model(rec_model);
        LineImage img = load_line_image(rec_image);
        RecognizeResult res = recognize_line(img, model, ctx.opt);
        std::cout << res.text << "\n";
        std::cerr << "timing_ms backbone=" << res.timing.backbone_ms
                  << " encoder=" << res.timing.encoder_ms
                  << " decoder=" << res.timing.decoder_ms << "\n";
        if (!rec_out.empty()) write_file(rec_out, res.text + "\n");
        return 0;
    }

    if (ev->parsed()) {
        DecodeContext ctx = make_options(ev_flags);
        LoadedModel model = load_model(ev_model);
        std::vector<ManifestRecord> manifest = load_manifest(ev_manifest);
        EvalOutput out = evaluate(manifest, model, ctx.opt, ev_threads);
        std::cout << "CER " << out.report.cer << "\n";
        std::cout << "WPA " << out.report.wpa << "\n";
        std::cout << "lines " << out.lines.size() << " failed " << out.failed_records << "\n";
        if (!ev_out.empty()) {
            write_file(ev_out + "_lines.tsv", out.lines_to_tsv());
            write_file(ev_out + "_buckets.csv", out.report.to_csv());
        } else {
            std::cout << out.report.to_csv();
        }
        return 0;
    }

    if (bn->parsed()) {
        std::vector<LoadedModel> models;
        models.reserve(bn_models.size());
        for (const std::string& path : bn_models) models.push_back(load_model(path));
        std::vector<BenchVariant> variants;
        for (size_t i = 0; i < models.size(); ++i) {
            BenchVariant v;
            bool is_tfmr = models[i].config.decoder == DecoderKind::Transformer;
            v.strategy = is_tfmr ? DecodeStrategy::Transformer
                                 : strategy_from_string(bn_ctc_decoder);
            v.label = std::filesystem::path(bn_models[i]).stem().string() +
                      (is_tfmr ? ":transformer" : ":" + bn_ctc_decoder);
            v.model = &models[i];
            variants.push_back(std::move(v));
        }
        std::string csv = bench_to_csv(bench(variants, bn_width, bn_reps, bn_seed));
        if (bn_out.empty())
            std::cout << csv;
        else
            write_file(bn_out, csv);
        return 0;
    }

    if (lt->parsed()) {
        CharNGramLM lm = CharNGramLM::train(read_lines(lt_in), lt_order, lt_alpha);
        lm.save(lt_out);
        std::cout << "trained order-" << lt_order << " LM on " << read_lines(lt_in).size()
                  << " lines, " << lm.unigram_total() << " characters\n";
        return 0;
    }

    if (mt->parsed()) {
        LoadedModel model = load_model(mt_model);
        if (model.config.decoder != DecoderKind::Ctc)
            throw InputError("mert requires a CTC model");
        CharNGramLM lm = CharNGramLM::load(mt_lm);
        std::vector<ManifestRecord> manifest = load_manifest(mt_dev);
        std::vector<DevExample> dev;
        dev.reserve(manifest.size());
        for (const ManifestRecord& rec : manifest) {
            LineImage img = load_line_image(rec.image_path);
            DevExample ex;
            ex.logits = ctc_path_logits(img.pixels, model, model.config.chunk_pad_px);
            ex.truth = rec.transcription;
            dev.push_back(std::move(ex));
        }
        LogLinearWeights init;
        if (!mt_init.empty()) init = load_weights_file(mt_init);
        MertConfig cfg;
        cfg.beam_width = mt_beam;
        cfg.max_rounds = mt_rounds;
        TuneReport report = mert_tune(dev, lm, init, cfg);
        save_weights_file(report.best, mt_out);
        std::cout << "dev CER " << report.cer_before << " -> " << report.cer_after << " in "
                  << report.rounds << " rounds\n";
        return 0;
    }

    if (ir->parsed()) {
        ModelConfig config = ModelConfig::from_json(read_file(ir_config));
        ModelBundle bundle = init_random(config, ir_seed);
        save_model(bundle, ir_out);
        std::cout << "wrote " << bundle.weights.size() << " tensors to " << ir_out << "\n";
        return 0;
    }

    if (bk->parsed()) {
        std::vector<EvalRecord> records;
        std::vector<std::string> lines = read_lines(bk_in);
        for (size_t i = 1; i < lines.size(); ++i) {  // skip header
            const std::string& line = lines[i];
            if (line.empty()) continue;
            std::vector<std::string> cols;
            size_t start = 0;
            for (size_t pos = line.find('\t'); pos != std::string::npos;
                 pos = line.find('\t', start)) {
                cols.push_back(line.substr(start, pos - start));
                start = pos + 1;
            }
            cols.push_back(line.substr(start));
            if (cols.size() != 5) throw FormatError("buckets: expected 5 TSV columns");
            EvalRecord r;
            r.width_px = std::stoll(cols[1]);
            r.truth = cols[2];
            r.prediction = cols[3];
            records.push_back(std::move(r));
        }
        EvalReport report = bucketed_cer(records);
        if (bk_out.empty())
            std::cout << report.to_csv();
        else
            write_file(bk_out, report.to_csv());
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const linerec::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const linerec::ParameterError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const linerec::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
