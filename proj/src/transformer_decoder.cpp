#include "linerec/transformer_decoder.hpp"

#include <cmath>
#include <limits>

#include "linerec/encoders.hpp"
#include "linerec/errors.hpp"
#include "linerec/kernels.hpp"
#include "linerec/utf8.hpp"

namespace linerec {

TfmrDecoderParams TfmrDecoderParams::random(Rng& rng, const Alphabet& alphabet, float lo,
                                            float hi) {
    TfmrDecoderParams p;
    p.alphabet = alphabet;
    const int64_t d = kModelDim;
    const int64_t vocab = alphabet.size() + 2;
    p.embed = rng.uniform({vocab, d}, lo, hi);
    for (int i = 0; i < kLayers; ++i) {
        TfmrLayerParams l;
        l.ln1 = rng.uniform({2, d}, lo, hi);
        l.ln2 = rng.uniform({2, d}, lo, hi);
        l.ln3 = rng.uniform({2, d}, lo, hi);
        l.wq = rng.uniform({d, d}, lo, hi);
        l.wk = rng.uniform({d, d}, lo, hi);
        l.wv = rng.uniform({d, d}, lo, hi);
        l.wo = rng.uniform({d, d}, lo, hi);
        l.cq = rng.uniform({d, d}, lo, hi);
        l.ck = rng.uniform({d, d}, lo, hi);
        l.cv = rng.uniform({d, d}, lo, hi);
        l.co = rng.uniform({d, d}, lo, hi);
        l.ffn1 = rng.uniform({d, 4 * d}, lo, hi);
        l.ffn2 = rng.uniform({4 * d, d}, lo, hi);
        p.layers.push_back(std::move(l));
    }
    p.ln_final = rng.uniform({2, d}, lo, hi);
    p.out_w = rng.uniform({d, vocab}, lo, hi);
    p.out_b = rng.uniform({vocab}, lo, hi);
    return p;
}

namespace {

Tensor ln_rows(const Tensor& x, const Tensor& pack) {
    const int64_t d = pack.dim(1);
    Tensor gain({d}), bias({d});
    for (int64_t j = 0; j < d; ++j) {
        gain.at(j) = pack.at(0, j);
        bias.at(j) = pack.at(1, j);
    }
    return layer_norm(x, gain, bias);
}

// Incremental state: positions are processed strictly left to right, so the
// cached activations equal those of a full masked recomputation bit for bit.
class IncrementalDecoder {
public:
    IncrementalDecoder(const Tensor& encoded, const TfmrDecoderParams& p, CrossAttnTrace* trace)
        : p_(p), trace_(trace), enc_frames_(encoded.dim(0)) {
        if (encoded.rank() != 2 || encoded.dim(1) != TfmrDecoderParams::kModelDim)
            throw DimensionError("decoder: encoded features must be n x 256");
        for (const TfmrLayerParams& l : p.layers) {
            LayerState s;
            s.cross_k = matmul(encoded, l.ck);  // [n,256]
            s.cross_v = matmul(encoded, l.cv);
            layers_.push_back(std::move(s));
        }
    }

    // Feed the token at the given position; returns next-token logits.
    Tensor step(int token, int64_t position) {
        const int64_t d = TfmrDecoderParams::kModelDim;
        const int heads = TfmrDecoderParams::kSelfAttnHeads;
        const int64_t hd = d / heads;
        const float self_scale = 1.0f / std::sqrt(static_cast<float>(hd));
        const float cross_scale = 1.0f / std::sqrt(static_cast<float>(d));

        if (token < 0 || token >= p_.vocab()) throw InputError("decoder: token id out of range");
        if (position > p_.max_positions)
            throw CapacityError("decoder: position exceeds max_positions");

        Tensor x({1, d});
        Tensor pe = sinusoid_embedding(position + 1, d);
        for (int64_t j = 0; j < d; ++j) x.at(0, j) = p_.embed.at(token, j) + pe.at(position, j);

        for (size_t li = 0; li < p_.layers.size(); ++li) {
            const TfmrLayerParams& l = p_.layers[li];
            LayerState& s = layers_[li];

            // Masked self-attention over positions 0..position.
            Tensor normed = ln_rows(x, l.ln1);
            Tensor q = matmul(normed, l.wq);
            Tensor k_new = matmul(normed, l.wk);
            Tensor v_new = matmul(normed, l.wv);
            s.self_k.push_back(k_new);
            s.self_v.push_back(v_new);
            const int64_t t = static_cast<int64_t>(s.self_k.size());
            Tensor concat({1, d});
            for (int h = 0; h < heads; ++h) {
                std::vector<float> scores(static_cast<size_t>(t));
                float mx = -std::numeric_limits<float>::infinity();
                for (int64_t j = 0; j < t; ++j) {
                    float dot = 0.0f;
                    for (int64_t a = 0; a < hd; ++a)
                        dot += q.at(0, h * hd + a) * s.self_k[static_cast<size_t>(j)].at(0, h * hd + a);
                    scores[static_cast<size_t>(j)] = dot * self_scale;
                    mx = std::max(mx, scores[static_cast<size_t>(j)]);
                }
                float sum = 0.0f;
                for (float& v : scores) {
                    v = std::exp(v - mx);
                    sum += v;
                }
                float inv = 1.0f / sum;
                for (int64_t a = 0; a < hd; ++a) {
                    float acc = 0.0f;
                    for (int64_t j = 0; j < t; ++j)
                        acc += scores[static_cast<size_t>(j)] * inv *
                               s.self_v[static_cast<size_t>(j)].at(0, h * hd + a);
                    concat.at(0, h * hd + a) = acc;
                }
            }
            Tensor attended = add(x, matmul(concat, l.wo));

            // Single-head cross-attention over the encoded frames.
            Tensor cn = ln_rows(attended, l.ln2);
            Tensor qc = matmul(cn, l.cq);
            Tensor row({1, enc_frames_});
            float mx = -std::numeric_limits<float>::infinity();
            for (int64_t j = 0; j < enc_frames_; ++j) {
                float dot = 0.0f;
                for (int64_t a = 0; a < d; ++a) dot += qc.at(0, a) * s.cross_k.at(j, a);
                row.at(0, j) = dot * cross_scale;
                mx = std::max(mx, row.at(0, j));
            }
            float sum = 0.0f;
            for (int64_t j = 0; j < enc_frames_; ++j) {
                row.at(0, j) = std::exp(row.at(0, j) - mx);
                sum += row.at(0, j);
            }
            float inv = 1.0f / sum;
            for (int64_t j = 0; j < enc_frames_; ++j) row.at(0, j) *= inv;
            if (trace_ != nullptr) trace_->rows.push_back(row);
            Tensor context({1, d});
            for (int64_t a = 0; a < d; ++a) {
                float acc = 0.0f;
                for (int64_t j = 0; j < enc_frames_; ++j) acc += row.at(0, j) * s.cross_v.at(j, a);
                context.at(0, a) = acc;
            }
            Tensor crossed = add(attended, matmul(context, l.co));

            Tensor fn = ln_rows(crossed, l.ln3);
            Tensor hidden = relu(matmul(fn, l.ffn1));
            x = add(crossed, matmul(hidden, l.ffn2));
        }

        Tensor final = ln_rows(x, p_.ln_final);
        return add_channel_bias(matmul(final, p_.out_w), p_.out_b);
    }

private:
    struct LayerState {
        std::vector<Tensor> self_k;  // one [1,256] row per position
        std::vector<Tensor> self_v;
        Tensor cross_k;
        Tensor cross_v;
    };

    const TfmrDecoderParams& p_;
    CrossAttnTrace* trace_;
    int64_t enc_frames_;
    std::vector<LayerState> layers_;
};

}  // namespace

Tensor decoder_forward(const std::vector<int>& tokens, const Tensor& encoded,
                       const TfmrDecoderParams& p, CrossAttnTrace* trace) {
    if (static_cast<int64_t>(tokens.size()) > p.max_positions)
        throw CapacityError("decoder: prefix exceeds max_positions");
    IncrementalDecoder dec(encoded, p, trace);
    Tensor out({static_cast<int64_t>(tokens.size()) + 1, p.vocab()});
    Tensor row = dec.step(p.bos_id(), 0);
    for (int64_t j = 0; j < p.vocab(); ++j) out.at(0, j) = row.at(0, j);
    for (size_t i = 0; i < tokens.size(); ++i) {
        row = dec.step(tokens[i], static_cast<int64_t>(i) + 1);
        for (int64_t j = 0; j < p.vocab(); ++j) out.at(static_cast<int64_t>(i) + 1, j) = row.at(0, j);
    }
    return out;
}

Tensor decoder_step(const std::vector<int>& tokens_so_far, const Tensor& encoded,
                    const TfmrDecoderParams& p, CrossAttnTrace* trace) {
    Tensor all = decoder_forward(tokens_so_far, encoded, p, trace);
    Tensor last({1, p.vocab()});
    for (int64_t j = 0; j < p.vocab(); ++j)
        last.at(0, j) = all.at(all.dim(0) - 1, j);
    return last;
}

std::string greedy_generate(const Tensor& encoded, const TfmrDecoderParams& p,
                            const GenerationConfig& g) {
    if (g.max_output_len < 1) throw ParameterError("greedy_generate: max_output_len must be >= 1");
    IncrementalDecoder dec(encoded, p, nullptr);
    std::vector<int> emitted;
    int token = p.bos_id();
    int64_t position = 0;
    while (static_cast<int64_t>(emitted.size()) < g.max_output_len &&
           position <= p.max_positions) {
        Tensor row = dec.step(token, position);
        int best = 0;
        float best_val = row.at(0, 0);
        for (int64_t j = 1; j < p.vocab(); ++j) {
            if (row.at(0, j) > best_val) {
                best_val = row.at(0, j);
                best = static_cast<int>(j);
            }
        }
        if (best == p.eos_id()) break;
        // BOS in the middle of generation is kept as a literal no-op symbol;
        // it maps to no alphabet character.
        emitted.push_back(best);
        token = best;
        ++position;
    }
    std::u32string text;
    for (int id : emitted)
        if (id < p.alphabet.size()) text.push_back(p.alphabet.character(id));
    return utf8_encode(text);
}

}  // namespace linerec
