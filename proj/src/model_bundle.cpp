#include "linerec/model_bundle.hpp"

#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "linerec/errors.hpp"
#include "linerec/kernels.hpp"

namespace linerec {

namespace {

constexpr char kMagic[4] = {'T', 'L', 'R', 'W'};
constexpr uint32_t kVersion = 1;

std::string encoder_name(EncoderKind k) {
    switch (k) {
        case EncoderKind::SelfAttn: return "self_attn";
        case EncoderKind::Grcl: return "grcl";
        case EncoderKind::BiLstm: return "bilstm";
    }
    return "?";
}

EncoderKind encoder_from_name(const std::string& s) {
    if (s == "self_attn") return EncoderKind::SelfAttn;
    if (s == "grcl") return EncoderKind::Grcl;
    if (s == "bilstm") return EncoderKind::BiLstm;
    throw FormatError("config: unknown encoder '" + s + "'");
}

std::string decoder_name(DecoderKind k) {
    return k == DecoderKind::Ctc ? "ctc" : "transformer";
}

DecoderKind decoder_from_name(const std::string& s) {
    if (s == "ctc") return DecoderKind::Ctc;
    if (s == "transformer") return DecoderKind::Transformer;
    throw FormatError("config: unknown decoder '" + s + "'");
}

std::string pos_name(PosEncoding p) {
    switch (p) {
        case PosEncoding::None: return "none";
        case PosEncoding::Relative: return "relative";
        case PosEncoding::Absolute: return "absolute";
    }
    return "?";
}

PosEncoding pos_from_name(const std::string& s) {
    if (s == "none") return PosEncoding::None;
    if (s == "relative") return PosEncoding::Relative;
    if (s == "absolute") return PosEncoding::Absolute;
    throw FormatError("config: unknown pos_encoding '" + s + "'");
}

template <typename T>
void write_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw FormatError("model file: truncated");
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void ModelConfig::validate() const {
    switch (encoder) {
        case EncoderKind::SelfAttn: {
            bool ok = encoder_depth == 4 || encoder_depth == 8 || encoder_depth == 12 ||
                      encoder_depth == 16 || encoder_depth == 20;
            if (!ok) throw FormatError("config: self_attn depth must be one of 4,8,12,16,20");
            break;
        }
        case EncoderKind::Grcl:
            if (encoder_depth < 1 || encoder_depth > 6)
                throw FormatError("config: grcl blocks per set must be in 1..6");
            break;
        case EncoderKind::BiLstm:
            if (encoder_depth < 1 || encoder_depth > 3)
                throw FormatError("config: bilstm depth must be in 1..3");
            break;
    }
    try {
        Alphabet::from_utf8(alphabet_utf8);
    } catch (const Error& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    if (chunk_pad_px < 0 || chunk_pad_px >= 160 || chunk_pad_px % 4 != 0)
        throw FormatError("config: chunk pad must be a multiple of 4 in [0,160)");
    if (max_width < 4 || max_width % 4 != 0)
        throw FormatError("config: max_width must be a positive multiple of 4");
    if (max_output_len < 1) throw FormatError("config: max_output_len must be >= 1");
}

int64_t ModelConfig::encoder_output_dim() const {
    switch (encoder) {
        case EncoderKind::SelfAttn: return 256;
        case EncoderKind::Grcl: return 128;
        case EncoderKind::BiLstm: return 256;
    }
    return 0;
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["encoder"] = encoder_name(encoder);
    j["encoder_depth"] = encoder_depth;
    j["decoder"] = decoder_name(decoder);
    j["alphabet"] = alphabet_utf8;
    j["chunk"] = {{"pad_px", chunk_pad_px}, {"policy", to_string(chunk_policy)}};
    j["max_width"] = max_width;
    j["max_output_len"] = max_output_len;
    j["pos_encoding"] = pos_name(pos);
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("config: invalid JSON: ") + e.what());
    }
    ModelConfig c;
    try {
        c.encoder = encoder_from_name(j.at("encoder").get<std::string>());
        c.encoder_depth = j.at("encoder_depth").get<int>();
        c.decoder = decoder_from_name(j.at("decoder").get<std::string>());
        c.alphabet_utf8 = j.at("alphabet").get<std::string>();
        if (j.contains("chunk")) {
            c.chunk_pad_px = j["chunk"].value("pad_px", int64_t{48});
            c.chunk_policy = padding_policy_from_string(
                j["chunk"].value("policy", std::string("edge-replicate")));
        }
        c.max_width = j.value("max_width", int64_t{1024});
        c.max_output_len = j.value("max_output_len", int64_t{256});
        c.pos = pos_from_name(j.value("pos_encoding", std::string("relative")));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

const Tensor& ModelBundle::weight(const std::string& name,
                                  const std::vector<int64_t>& shape) const {
    auto it = weights.find(name);
    if (it == weights.end()) throw FormatError("model: missing weight '" + name + "'");
    if (it->second.shape() != shape)
        throw FormatError("model: weight '" + name + "' has unexpected shape");
    return it->second;
}

void save_model(const ModelBundle& bundle, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("model save: cannot open " + path);
    os.write(kMagic, 4);
    write_le<uint32_t>(os, kVersion);
    std::string cfg = bundle.config.to_json();
    write_le<uint32_t>(os, static_cast<uint32_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_le<uint32_t>(os, static_cast<uint32_t>(bundle.weights.size()));
    for (const auto& [name, tensor] : bundle.weights) {
        write_le<uint16_t>(os, static_cast<uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<uint8_t>(os, static_cast<uint8_t>(tensor.rank()));
        for (int64_t i = 0; i < tensor.rank(); ++i)
            write_le<uint32_t>(os, static_cast<uint32_t>(tensor.dim(i)));
        static_assert(sizeof(float) == 4);
        for (int64_t i = 0; i < tensor.size(); ++i) {
            uint32_t bits;
            float v = tensor.at(i);
            std::memcpy(&bits, &v, 4);
            write_le<uint32_t>(os, bits);
        }
    }
    if (!os) throw InputError("model save: write failed");
}

ModelBundle load_bundle(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("model load: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("model load: bad magic");
    uint32_t version = read_le<uint32_t>(is);
    if (version != kVersion) throw FormatError("model load: unsupported version");
    uint32_t cfg_len = read_le<uint32_t>(is);
    std::string cfg(cfg_len, '\0');
    is.read(cfg.data(), cfg_len);
    if (!is) throw FormatError("model load: truncated config");
    ModelBundle bundle;
    bundle.config = ModelConfig::from_json(cfg);
    uint32_t count = read_le<uint32_t>(is);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t name_len = read_le<uint16_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw FormatError("model load: truncated name");
        uint8_t rank = read_le<uint8_t>(is);
        if (rank == 0 || rank > 4) throw FormatError("model load: bad tensor rank");
        std::vector<int64_t> shape(rank);
        int64_t numel = 1;
        for (uint8_t r = 0; r < rank; ++r) {
            shape[r] = static_cast<int64_t>(read_le<uint32_t>(is));
            if (shape[r] <= 0) throw FormatError("model load: bad extent");
            numel *= shape[r];
        }
        std::vector<float> data(static_cast<size_t>(numel));
        for (int64_t e = 0; e < numel; ++e) {
            uint32_t bits = read_le<uint32_t>(is);
            float v;
            std::memcpy(&v, &bits, 4);
            data[static_cast<size_t>(e)] = v;
        }
        if (!bundle.weights.emplace(name, Tensor(shape, std::move(data))).second)
            throw FormatError("model load: duplicate weight '" + name + "'");
    }
    return bundle;
}

namespace {

// Enumerates every (name, shape) the config requires and passes it to fn.
template <typename Fn>
void for_each_weight(const ModelConfig& cfg, Fn&& fn) {
    const int64_t C = BackboneParams::kChannels;
    const int64_t E = C * BackboneParams::kExpansion;
    const int64_t grid_h = BackboneParams::kInputHeight / BackboneParams::kBlock;
    fn("bb.stem.proj.w", std::vector<int64_t>{1, 1, 16, C});
    fn("bb.stem.proj.b", std::vector<int64_t>{C});
    for (int i = 0; i < BackboneParams::kStandardLayers; ++i) {
        std::string base = "bb.ibn" + std::to_string(i);
        fn(base + ".expand.w", std::vector<int64_t>{3, 3, C, E});
        fn(base + ".expand.b", std::vector<int64_t>{E});
        fn(base + ".norm", std::vector<int64_t>{2, E});
        fn(base + ".project.w", std::vector<int64_t>{1, 1, E, C});
        fn(base + ".project.b", std::vector<int64_t>{C});
    }
    fn("bb.collapse.conv.w", std::vector<int64_t>{grid_h, 1, C, C});
    fn("bb.collapse.conv.b", std::vector<int64_t>{C});
    fn("bb.collapse.resid.w", std::vector<int64_t>{1, 1, C, C});
    fn("bb.collapse.resid.b", std::vector<int64_t>{C});

    const int64_t d = SelfAttnEncoderParams::kModelDim;
    switch (cfg.encoder) {
        case EncoderKind::SelfAttn: {
            fn("enc.sa.in_proj", std::vector<int64_t>{64, d});
            for (int i = 0; i < cfg.encoder_depth; ++i) {
                std::string base = "enc.sa.L" + std::to_string(i);
                fn(base + ".wq", std::vector<int64_t>{d, d});
                fn(base + ".wk", std::vector<int64_t>{d, d});
                fn(base + ".wv", std::vector<int64_t>{d, d});
                fn(base + ".wo", std::vector<int64_t>{d, d});
                fn(base + ".ffn1", std::vector<int64_t>{d, 4 * d});
                fn(base + ".ffn2", std::vector<int64_t>{4 * d, d});
                fn(base + ".ln1", std::vector<int64_t>{2, d});
                fn(base + ".ln2", std::vector<int64_t>{2, d});
            }
            break;
        }
        case EncoderKind::Grcl: {
            int64_t in_ch = 64;
            for (int s = 0; s < GrclParams::kSets; ++s) {
                const int64_t out_ch = GrclParams::kFilters[s];
                const int64_t kw = GrclParams::kKernelWidths[s];
                for (int b = 0; b < cfg.encoder_depth; ++b) {
                    std::string base =
                        "enc.grcl.S" + std::to_string(s) + ".B" + std::to_string(b);
                    fn(base + ".feed.w", std::vector<int64_t>{kw, in_ch, out_ch});
                    fn(base + ".feed.b", std::vector<int64_t>{out_ch});
                    fn(base + ".feed.norm", std::vector<int64_t>{2, out_ch});
                    fn(base + ".gate.w", std::vector<int64_t>{kw, in_ch + out_ch, out_ch});
                    fn(base + ".gate.b", std::vector<int64_t>{out_ch});
                    fn(base + ".gate.norm", std::vector<int64_t>{2, out_ch});
                }
                in_ch = out_ch;
            }
            break;
        }
        case EncoderKind::BiLstm: {
            const int64_t H = BiLstmParams::kHidden;
            int64_t in = 64;
            for (int i = 0; i < cfg.encoder_depth; ++i) {
                for (const char* dir : {"fwd", "bwd"}) {
                    std::string base =
                        "enc.lstm.L" + std::to_string(i) + "." + dir;
                    for (const char* g : {"Wi", "Wf", "Wc", "Wo"})
                        fn(base + "." + g, std::vector<int64_t>{in, H});
                    for (const char* g : {"Ui", "Uf", "Uc", "Uo"})
                        fn(base + "." + g, std::vector<int64_t>{H, H});
                    for (const char* g : {"bi", "bf", "bc", "bo"})
                        fn(base + "." + g, std::vector<int64_t>{H});
                }
                in = 2 * H;
            }
            fn("enc.lstm.proj.w", std::vector<int64_t>{2 * H, 256});
            fn("enc.lstm.proj.b", std::vector<int64_t>{256});
            break;
        }
    }

    const int64_t A = static_cast<int64_t>(Alphabet::from_utf8(cfg.alphabet_utf8).size());
    if (cfg.decoder == DecoderKind::Ctc) {
        fn("head.logits.w", std::vector<int64_t>{cfg.encoder_output_dim(), A + 1});
        fn("head.logits.b", std::vector<int64_t>{A + 1});
    } else {
        if (cfg.encoder_output_dim() != d)
            fn("dec.tfmr.enc_proj", std::vector<int64_t>{cfg.encoder_output_dim(), d});
        fn("dec.tfmr.embed", std::vector<int64_t>{A + 2, d});
        for (int i = 0; i < TfmrDecoderParams::kLayers; ++i) {
            std::string base = "dec.tfmr.L" + std::to_string(i);
            for (const char* n : {"ln1", "ln2", "ln3"}) fn(base + "." + n, std::vector<int64_t>{2, d});
            for (const char* n : {"wq", "wk", "wv", "wo", "cq", "ck", "cv", "co"})
                fn(base + "." + n, std::vector<int64_t>{d, d});
            fn(base + ".ffn1", std::vector<int64_t>{d, 4 * d});
            fn(base + ".ffn2", std::vector<int64_t>{4 * d, d});
        }
        fn("dec.tfmr.lnf", std::vector<int64_t>{2, d});
        fn("dec.tfmr.out.w", std::vector<int64_t>{d, A + 2});
        fn("dec.tfmr.out.b", std::vector<int64_t>{A + 2});
    }
}

}  // namespace

ModelBundle init_random(const ModelConfig& config, uint64_t seed) {
    config.validate();
    ModelBundle bundle;
    bundle.config = config;
    Rng rng(seed);
    for_each_weight(config, [&](const std::string& name, const std::vector<int64_t>& shape) {
        bundle.weights.emplace(name, rng.uniform(shape, -0.08f, 0.08f));
    });
    return bundle;
}

LoadedModel assemble(const ModelBundle& bundle) {
    bundle.config.validate();
    LoadedModel m;
    m.config = bundle.config;
    m.alphabet = Alphabet::from_utf8(bundle.config.alphabet_utf8);

    // Reject tensors the config does not call for.
    std::set<std::string> expected;
    for_each_weight(bundle.config,
                    [&](const std::string& name, const std::vector<int64_t>&) { expected.insert(name); });
    for (const auto& [name, t] : bundle.weights)
        if (!expected.contains(name)) throw FormatError("model: unexpected weight '" + name + "'");

    const ModelConfig& cfg = bundle.config;
    const int64_t C = BackboneParams::kChannels;
    const int64_t E = C * BackboneParams::kExpansion;
    const int64_t grid_h = BackboneParams::kInputHeight / BackboneParams::kBlock;

    m.backbone.stem_w = bundle.weight("bb.stem.proj.w", {1, 1, 16, C});
    m.backbone.stem_b = bundle.weight("bb.stem.proj.b", {C});
    for (int i = 0; i < BackboneParams::kStandardLayers; ++i) {
        std::string base = "bb.ibn" + std::to_string(i);
        FusedIbnParams l;
        l.expand_w = bundle.weight(base + ".expand.w", {3, 3, C, E});
        l.expand_b = bundle.weight(base + ".expand.b", {E});
        l.norm = bundle.weight(base + ".norm", {2, E});
        l.project_w = bundle.weight(base + ".project.w", {1, 1, E, C});
        l.project_b = bundle.weight(base + ".project.b", {C});
        m.backbone.layers.push_back(std::move(l));
    }
    m.backbone.collapse_w = bundle.weight("bb.collapse.conv.w", {grid_h, 1, C, C});
    m.backbone.collapse_b = bundle.weight("bb.collapse.conv.b", {C});
    m.backbone.resid_w = bundle.weight("bb.collapse.resid.w", {1, 1, C, C});
    m.backbone.resid_b = bundle.weight("bb.collapse.resid.b", {C});

    const int64_t d = SelfAttnEncoderParams::kModelDim;
    switch (cfg.encoder) {
        case EncoderKind::SelfAttn: {
            SelfAttnEncoderParams p;
            p.input_proj = bundle.weight("enc.sa.in_proj", {64, d});
            p.pos = cfg.pos;
            for (int i = 0; i < cfg.encoder_depth; ++i) {
                std::string base = "enc.sa.L" + std::to_string(i);
                SelfAttnLayerParams l;
                l.wq = bundle.weight(base + ".wq", {d, d});
                l.wk = bundle.weight(base + ".wk", {d, d});
                l.wv = bundle.weight(base + ".wv", {d, d});
                l.wo = bundle.weight(base + ".wo", {d, d});
                l.ffn1 = bundle.weight(base + ".ffn1", {d, 4 * d});
                l.ffn2 = bundle.weight(base + ".ffn2", {4 * d, d});
                l.ln1 = bundle.weight(base + ".ln1", {2, d});
                l.ln2 = bundle.weight(base + ".ln2", {2, d});
                p.layers.push_back(std::move(l));
            }
            m.self_attn = std::move(p);
            break;
        }
        case EncoderKind::Grcl: {
            GrclParams p;
            int64_t in_ch = 64;
            for (int s = 0; s < GrclParams::kSets; ++s) {
                const int64_t out_ch = GrclParams::kFilters[s];
                const int64_t kw = GrclParams::kKernelWidths[s];
                std::vector<GrclBlockParams> blocks;
                for (int b = 0; b < cfg.encoder_depth; ++b) {
                    std::string base =
                        "enc.grcl.S" + std::to_string(s) + ".B" + std::to_string(b);
                    GrclBlockParams g;
                    g.feed_w = bundle.weight(base + ".feed.w", {kw, in_ch, out_ch});
                    g.feed_b = bundle.weight(base + ".feed.b", {out_ch});
                    g.feed_norm = bundle.weight(base + ".feed.norm", {2, out_ch});
                    g.gate_w = bundle.weight(base + ".gate.w", {kw, in_ch + out_ch, out_ch});
                    g.gate_b = bundle.weight(base + ".gate.b", {out_ch});
                    g.gate_norm = bundle.weight(base + ".gate.norm", {2, out_ch});
                    blocks.push_back(std::move(g));
                }
                p.sets.push_back(std::move(blocks));
                in_ch = out_ch;
            }
            m.grcl = std::move(p);
            break;
        }
        case EncoderKind::BiLstm: {
            BiLstmParams p;
            const int64_t H = BiLstmParams::kHidden;
            int64_t in = 64;
            for (int i = 0; i < cfg.encoder_depth; ++i) {
                BiLstmParams::Layer layer;
                for (auto [dir, cell] : {std::pair{"fwd", &layer.fwd}, std::pair{"bwd", &layer.bwd}}) {
                    std::string base = "enc.lstm.L" + std::to_string(i) + "." + dir;
                    cell->wi = bundle.weight(base + ".Wi", {in, H});
                    cell->wf = bundle.weight(base + ".Wf", {in, H});
                    cell->wc = bundle.weight(base + ".Wc", {in, H});
                    cell->wo = bundle.weight(base + ".Wo", {in, H});
                    cell->ui = bundle.weight(base + ".Ui", {H, H});
                    cell->uf = bundle.weight(base + ".Uf", {H, H});
                    cell->uc = bundle.weight(base + ".Uc", {H, H});
                    cell->uo = bundle.weight(base + ".Uo", {H, H});
                    cell->bi = bundle.weight(base + ".bi", {H});
                    cell->bf = bundle.weight(base + ".bf", {H});
                    cell->bc = bundle.weight(base + ".bc", {H});
                    cell->bo = bundle.weight(base + ".bo", {H});
                }
                p.layers.push_back(std::move(layer));
                in = 2 * H;
            }
            p.proj_w = bundle.weight("enc.lstm.proj.w", {2 * H, 256});
            p.proj_b = bundle.weight("enc.lstm.proj.b", {256});
            m.bilstm = std::move(p);
            break;
        }
    }

    const int64_t A = m.alphabet.size();
    if (cfg.decoder == DecoderKind::Ctc) {
        LogitsHead head;
        head.w = bundle.weight("head.logits.w", {cfg.encoder_output_dim(), A + 1});
        head.b = bundle.weight("head.logits.b", {A + 1});
        m.head = std::move(head);
    } else {
        if (cfg.encoder_output_dim() != d)
            m.tfmr_enc_proj = bundle.weight("dec.tfmr.enc_proj", {cfg.encoder_output_dim(), d});
        TfmrDecoderParams p;
        p.alphabet = m.alphabet;
        p.embed = bundle.weight("dec.tfmr.embed", {A + 2, d});
        for (int i = 0; i < TfmrDecoderParams::kLayers; ++i) {
            std::string base = "dec.tfmr.L" + std::to_string(i);
            TfmrLayerParams l;
            l.ln1 = bundle.weight(base + ".ln1", {2, d});
            l.ln2 = bundle.weight(base + ".ln2", {2, d});
            l.ln3 = bundle.weight(base + ".ln3", {2, d});
            l.wq = bundle.weight(base + ".wq", {d, d});
            l.wk = bundle.weight(base + ".wk", {d, d});
            l.wv = bundle.weight(base + ".wv", {d, d});
            l.wo = bundle.weight(base + ".wo", {d, d});
            l.cq = bundle.weight(base + ".cq", {d, d});
            l.ck = bundle.weight(base + ".ck", {d, d});
            l.cv = bundle.weight(base + ".cv", {d, d});
            l.co = bundle.weight(base + ".co", {d, d});
            l.ffn1 = bundle.weight(base + ".ffn1", {d, 4 * d});
            l.ffn2 = bundle.weight(base + ".ffn2", {4 * d, d});
            p.layers.push_back(std::move(l));
        }
        p.ln_final = bundle.weight("dec.tfmr.lnf", {2, d});
        p.out_w = bundle.weight("dec.tfmr.out.w", {d, A + 2});
        p.out_b = bundle.weight("dec.tfmr.out.b", {A + 2});
        m.tfmr = std::move(p);
    }
    return m;
}

Tensor LoadedModel::encode(const Tensor& frames) const {
    switch (config.encoder) {
        case EncoderKind::SelfAttn: return encode_self_attn(frames, *self_attn);
        case EncoderKind::Grcl: return encode_grcl(frames, *grcl);
        case EncoderKind::BiLstm: return encode_bilstm(frames, *bilstm);
    }
    throw InputError("encode: bad encoder kind");
}

LoadedModel load_model(const std::string& path) {
    return assemble(load_bundle(path));
}

}  // namespace linerec
