#pragma once

#include <string>
#include <vector>

#include "linerec/alphabet.hpp"
#include "linerec/tensor.hpp"

namespace linerec {

// Autoregressive decoder: 8 layers of masked multi-head self-attention,
// single-head cross-attention over the encoded frames, and a feed-forward
// block, all pre-norm with residuals. Token ids: 0..A-1 alphabet, A = BOS,
// A+1 = EOS.
struct TfmrLayerParams {
    Tensor ln1, ln2, ln3;   // [2,256]
    Tensor wq, wk, wv, wo;  // [256,256] masked self-attention (4 heads)
    Tensor cq, ck, cv, co;  // [256,256] single-head cross-attention
    Tensor ffn1;            // [256,1024]
    Tensor ffn2;            // [1024,256]
};

struct TfmrDecoderParams {
    static constexpr int kLayers = 8;
    static constexpr int64_t kModelDim = 256;
    static constexpr int kSelfAttnHeads = 4;

    Alphabet alphabet;
    Tensor embed;  // [A+2, 256]
    std::vector<TfmrLayerParams> layers;
    Tensor ln_final;  // [2,256]
    Tensor out_w;     // [256, A+2]
    Tensor out_b;     // [A+2]
    int64_t max_positions = 256;

    int bos_id() const { return alphabet.size(); }
    int eos_id() const { return alphabet.size() + 1; }
    int vocab() const { return alphabet.size() + 2; }

    static TfmrDecoderParams random(Rng& rng, const Alphabet& alphabet, float lo = -0.08f,
                                    float hi = 0.08f);
};

struct GenerationConfig {
    int64_t max_output_len = 256;
};

// Optional collector of cross-attention rows (each sums to 1).
struct CrossAttnTrace {
    std::vector<Tensor> rows;  // [1 x n] per (layer, position)
};

// Teacher-forced logits at every position: row i predicts tokens[i] from
// BOS + tokens[0..i). Self-attention is strictly causal, so row i is
// independent of tokens[j] for j >= i. Throws CapacityError past
// max_positions.
Tensor decoder_forward(const std::vector<int>& tokens, const Tensor& encoded,
                       const TfmrDecoderParams& p, CrossAttnTrace* trace = nullptr);

// Next-token logits after the given prefix (BOS is prepended internally;
// `tokens_so_far` holds already-emitted ids).
Tensor decoder_step(const std::vector<int>& tokens_so_far, const Tensor& encoded,
                    const TfmrDecoderParams& p, CrossAttnTrace* trace = nullptr);

// Greedy argmax generation until EOS or the configured output cap.
std::string greedy_generate(const Tensor& encoded, const TfmrDecoderParams& p,
                            const GenerationConfig& g);

}  // namespace linerec
