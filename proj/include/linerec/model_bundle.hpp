#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linerec/alphabet.hpp"
#include "linerec/backbone.hpp"
#include "linerec/chunking.hpp"
#include "linerec/encoders.hpp"
#include "linerec/tensor.hpp"
#include "linerec/transformer_decoder.hpp"

namespace linerec {

enum class EncoderKind { SelfAttn, Grcl, BiLstm };
enum class DecoderKind { Ctc, Transformer };

struct ModelConfig {
    EncoderKind encoder = EncoderKind::SelfAttn;
    int encoder_depth = 4;  // self_attn layers / grcl blocks per set / lstm depth
    DecoderKind decoder = DecoderKind::Ctc;
    std::string alphabet_utf8;
    int64_t chunk_pad_px = 48;
    PaddingPolicy chunk_policy = PaddingPolicy::EdgeReplicate;
    int64_t max_width = 1024;       // transformer-path input width M
    int64_t max_output_len = 256;   // transformer generation cap
    PosEncoding pos = PosEncoding::Relative;

    void validate() const;  // throws FormatError on schema violations
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);

    int64_t encoder_output_dim() const;
};

// Raw container: config plus named tensors, as stored on disk.
struct ModelBundle {
    ModelConfig config;
    std::map<std::string, Tensor> weights;

    const Tensor& weight(const std::string& name, const std::vector<int64_t>& shape) const;
};

// Binary weight file, magic "TLRW". See README for the byte layout.
void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// Ready-to-run parameter structs assembled (and shape-checked) from a bundle.
struct LoadedModel {
    ModelConfig config;
    Alphabet alphabet;
    BackboneParams backbone;
    std::optional<SelfAttnEncoderParams> self_attn;
    std::optional<GrclParams> grcl;
    std::optional<BiLstmParams> bilstm;
    std::optional<LogitsHead> head;              // decoder == ctc
    std::optional<TfmrDecoderParams> tfmr;       // decoder == transformer
    std::optional<Tensor> tfmr_enc_proj;         // only when encoder dim != 256

    Tensor encode(const Tensor& frames) const;   // dispatch to the encoder
};

LoadedModel assemble(const ModelBundle& bundle);
LoadedModel load_model(const std::string& path);

// All weights uniform in [-0.08, 0.08) from the seeded generator.
ModelBundle init_random(const ModelConfig& config, uint64_t seed);

}  // namespace linerec
