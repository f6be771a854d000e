#pragma once

#include <optional>
#include <vector>

#include "linerec/tensor.hpp"

namespace linerec {

// ---------------------------------------------------------------------------
// Self-attention encoder
// ---------------------------------------------------------------------------

enum class PosEncoding {
    None,      // test hook: permutation-equivariant stack
    Relative,  // sinusoidal bias of the query/key offset, added per head
    Absolute,  // sinusoidal embedding added to the projected input
};

struct SelfAttnLayerParams {
    Tensor wq, wk, wv, wo;  // [d,d]
    Tensor ffn1;            // [d,4d]
    Tensor ffn2;            // [4d,d]
    Tensor ln1, ln2;        // [2,d]: row 0 gain, row 1 bias
};

struct SelfAttnEncoderParams {
    static constexpr int64_t kModelDim = 256;
    static constexpr int kDefaultHeads = 4;

    Tensor input_proj;  // [64,256]
    std::vector<SelfAttnLayerParams> layers;
    int heads = kDefaultHeads;
    PosEncoding pos = PosEncoding::Relative;

    static SelfAttnEncoderParams random(Rng& rng, int num_layers, float lo = -0.08f,
                                        float hi = 0.08f);
    static SelfAttnLayerParams random_layer(Rng& rng, float lo = -0.08f, float hi = 0.08f);
};

// Optional collector for attention rows (tests assert they sum to 1).
struct AttnTrace {
    std::vector<Tensor> matrices;  // one [n,n] per (layer, head) visited
};

// Pre-norm residual block: x + MHA(LN(x)), then + FFN(LN(.)).
Tensor self_attention_layer(const Tensor& x, const SelfAttnLayerParams& p, int heads,
                            PosEncoding pos, AttnTrace* trace = nullptr);

// [n x 64] frames -> [n x 256].
Tensor encode_self_attn(const Tensor& frames, const SelfAttnEncoderParams& p,
                        AttnTrace* trace = nullptr);

// Sinusoidal position embedding table [n x d] (absolute variant).
Tensor sinusoid_embedding(int64_t n, int64_t d);

// ---------------------------------------------------------------------------
// GRCL encoder
// ---------------------------------------------------------------------------

// One gated block: state = relu(norm(feed(x))) * sigmoid(norm(gate(x, prev))).
// The first block of a set sees prev = 0.
struct GrclBlockParams {
    Tensor feed_w;     // [kw, in_ch, out_ch] 1-D conv along width
    Tensor feed_b;     // [out_ch]
    Tensor feed_norm;  // [2, out_ch]
    Tensor gate_w;     // [kw, in_ch + out_ch, out_ch]
    Tensor gate_b;     // [out_ch]
    Tensor gate_norm;  // [2, out_ch]
};

struct GrclParams {
    static constexpr int kSets = 3;
    static constexpr int64_t kFilters[kSets] = {384, 256, 128};
    static constexpr int64_t kKernelWidths[kSets] = {3, 5, 7};

    std::vector<std::vector<GrclBlockParams>> sets;  // [3][blocks_per_set]

    static GrclParams random(Rng& rng, int blocks_per_set, float lo = -0.08f, float hi = 0.08f);
};

// [n x 64] -> [n x 128].
Tensor encode_grcl(const Tensor& frames, const GrclParams& p);

// ---------------------------------------------------------------------------
// BiLSTM encoder
// ---------------------------------------------------------------------------

struct LstmCellParams {
    Tensor wi, wf, wc, wo;  // [in,512]
    Tensor ui, uf, uc, uo;  // [512,512]
    Tensor bi, bf, bc, bo;  // [512]
};

struct BiLstmParams {
    static constexpr int64_t kHidden = 512;
    static constexpr int64_t kOutputDim = 256;

    struct Layer {
        LstmCellParams fwd;
        LstmCellParams bwd;
    };
    std::vector<Layer> layers;  // depth 1..3
    Tensor proj_w;              // [1024,256]
    Tensor proj_b;              // [256]

    static BiLstmParams random(Rng& rng, int depth, float lo = -0.08f, float hi = 0.08f);
};

// [n x 64] -> [n x 256].
Tensor encode_bilstm(const Tensor& frames, const BiLstmParams& p);

// ---------------------------------------------------------------------------
// Logits head
// ---------------------------------------------------------------------------

struct LogitsHead {
    Tensor w;  // [d_enc, A+1], blank last
    Tensor b;  // [A+1]
};

// [n x d_enc] -> raw scores [n x (A+1)].
Tensor logits(const Tensor& encoded, const LogitsHead& head);

}  // namespace linerec
