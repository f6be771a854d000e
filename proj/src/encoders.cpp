#include "linerec/encoders.hpp"

#include <cmath>

#include "linerec/errors.hpp"
#include "linerec/kernels.hpp"

namespace linerec {

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

Tensor affine_rows(const Tensor& x, const Tensor& pack) {
    const int64_t d = pack.dim(1);
    Tensor scale({d}), shift({d});
    for (int64_t j = 0; j < d; ++j) {
        scale.at(j) = pack.at(0, j);
        shift.at(j) = pack.at(1, j);
    }
    return channel_affine(x, scale, shift);
}

Tensor slice_cols(const Tensor& x, int64_t begin, int64_t count) {
    Tensor out({x.dim(0), count});
    for (int64_t i = 0; i < x.dim(0); ++i)
        for (int64_t j = 0; j < count; ++j) out.at(i, j) = x.at(i, begin + j);
    return out;
}

// Fixed sinusoid of the query/key offset; one frequency per head.
float relative_bias(int head, int heads, int64_t offset) {
    double theta = std::pow(10000.0, -static_cast<double>(head) / static_cast<double>(heads));
    double arg = static_cast<double>(offset) * theta;
    return static_cast<float>(head % 2 == 0 ? std::sin(arg) : std::cos(arg));
}

}  // namespace

Tensor sinusoid_embedding(int64_t n, int64_t d) {
    Tensor pe({n, d});
    for (int64_t pos = 0; pos < n; ++pos) {
        for (int64_t i = 0; i < d; i += 2) {
            double div = std::exp(-static_cast<double>(i) * std::log(10000.0) /
                                  static_cast<double>(d));
            pe.at(pos, i) = static_cast<float>(std::sin(static_cast<double>(pos) * div));
            if (i + 1 < d)
                pe.at(pos, i + 1) = static_cast<float>(std::cos(static_cast<double>(pos) * div));
        }
    }
    return pe;
}

SelfAttnLayerParams SelfAttnEncoderParams::random_layer(Rng& rng, float lo, float hi) {
    const int64_t d = kModelDim;
    SelfAttnLayerParams l;
    l.wq = rng.uniform({d, d}, lo, hi);
    l.wk = rng.uniform({d, d}, lo, hi);
    l.wv = rng.uniform({d, d}, lo, hi);
    l.wo = rng.uniform({d, d}, lo, hi);
    l.ffn1 = rng.uniform({d, 4 * d}, lo, hi);
    l.ffn2 = rng.uniform({4 * d, d}, lo, hi);
    l.ln1 = rng.uniform({2, d}, lo, hi);
    l.ln2 = rng.uniform({2, d}, lo, hi);
    return l;
}

SelfAttnEncoderParams SelfAttnEncoderParams::random(Rng& rng, int num_layers, float lo, float hi) {
    SelfAttnEncoderParams p;
    p.input_proj = rng.uniform({64, kModelDim}, lo, hi);
    p.layers.reserve(static_cast<size_t>(num_layers));
    for (int i = 0; i < num_layers; ++i) p.layers.push_back(random_layer(rng, lo, hi));
    return p;
}

Tensor self_attention_layer(const Tensor& x, const SelfAttnLayerParams& p, int heads,
                            PosEncoding pos, AttnTrace* trace) {
    if (x.rank() != 2) throw DimensionError("self_attention_layer: input must be n x d");
    const int64_t n = x.dim(0), d = x.dim(1);
    if (d % heads != 0) throw ParameterError("self_attention_layer: d must divide by heads");
    const int64_t hd = d / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

    Tensor normed = ln_rows(x, p.ln1);
    Tensor q = matmul(normed, p.wq);
    Tensor k = matmul(normed, p.wk);
    Tensor v = matmul(normed, p.wv);

    Tensor concat({n, d});
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * hd, hd);
        Tensor kh = slice_cols(k, h * hd, hd);
        Tensor vh = slice_cols(v, h * hd, hd);
        Tensor scores({n, n});
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j) {
                float dot = 0.0f;
                for (int64_t a = 0; a < hd; ++a) dot += qh.at(i, a) * kh.at(j, a);
                float s = dot * scale;
                if (pos == PosEncoding::Relative) s += relative_bias(h, heads, i - j);
                scores.at(i, j) = s;
            }
        Tensor attn = softmax_rows(scores);
        if (trace != nullptr) trace->matrices.push_back(attn);
        Tensor yh = matmul(attn, vh);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t a = 0; a < hd; ++a) concat.at(i, h * hd + a) = yh.at(i, a);
    }
    Tensor attended = add(x, matmul(concat, p.wo));

    Tensor ffn_in = ln_rows(attended, p.ln2);
    Tensor hidden = relu(matmul(ffn_in, p.ffn1));
    return add(attended, matmul(hidden, p.ffn2));
}

Tensor encode_self_attn(const Tensor& frames, const SelfAttnEncoderParams& p, AttnTrace* trace) {
    if (frames.rank() != 2) throw DimensionError("encode_self_attn: input must be n x 64");
    if (frames.dim(0) < 1) throw InputError("encode_self_attn: need at least one frame");
    Tensor x = matmul(frames, p.input_proj);
    if (p.pos == PosEncoding::Absolute)
        x = add(x, sinusoid_embedding(x.dim(0), x.dim(1)));
    for (const SelfAttnLayerParams& l : p.layers)
        x = self_attention_layer(x, l, p.heads, p.pos, trace);
    return x;
}

GrclParams GrclParams::random(Rng& rng, int blocks_per_set, float lo, float hi) {
    if (blocks_per_set < 1 || blocks_per_set > 6)
        throw ParameterError("grcl: blocks per set must be in 1..6");
    GrclParams p;
    int64_t in_ch = 64;
    for (int s = 0; s < kSets; ++s) {
        const int64_t out_ch = kFilters[s];
        const int64_t kw = kKernelWidths[s];
        std::vector<GrclBlockParams> blocks;
        for (int b = 0; b < blocks_per_set; ++b) {
            GrclBlockParams g;
            g.feed_w = rng.uniform({kw, in_ch, out_ch}, lo, hi);
            g.feed_b = rng.uniform({out_ch}, lo, hi);
            g.feed_norm = rng.uniform({2, out_ch}, lo, hi);
            g.gate_w = rng.uniform({kw, in_ch + out_ch, out_ch}, lo, hi);
            g.gate_b = rng.uniform({out_ch}, lo, hi);
            g.gate_norm = rng.uniform({2, out_ch}, lo, hi);
            blocks.push_back(std::move(g));
        }
        p.sets.push_back(std::move(blocks));
        in_ch = out_ch;
    }
    return p;
}

namespace {

// 1-D same-padded conv along the frame axis: x [n,in], w [kw,in,out].
Tensor conv1d_frames(const Tensor& x, const Tensor& w, const Tensor& bias) {
    const int64_t n = x.dim(0), in_ch = x.dim(1);
    Tensor x3({1, n, in_ch}, x.values());
    Tensor kernel({1, w.dim(0), w.dim(1), w.dim(2)}, w.values());
    Tensor y = conv2d(x3, kernel, {}, Padding::Same);
    y = add_channel_bias(y, bias);
    return Tensor({n, y.dim(2)}, y.values());
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    const int64_t n = a.dim(0);
    Tensor out({n, a.dim(1) + b.dim(1)});
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < a.dim(1); ++j) out.at(i, j) = a.at(i, j);
        for (int64_t j = 0; j < b.dim(1); ++j) out.at(i, a.dim(1) + j) = b.at(i, j);
    }
    return out;
}

}  // namespace

Tensor encode_grcl(const Tensor& frames, const GrclParams& p) {
    if (frames.rank() != 2) throw DimensionError("encode_grcl: input must be n x 64");
    if (frames.dim(0) < 1) throw InputError("encode_grcl: need at least one frame");
    Tensor x = frames;
    for (const auto& blocks : p.sets) {
        // Every block of a set reads the set input; the gated state threads
        // through the blocks, starting from zero.
        const int64_t out_ch = blocks.front().feed_w.dim(2);
        Tensor state({x.dim(0), out_ch});
        for (const GrclBlockParams& g : blocks) {
            Tensor feed = relu(affine_rows(conv1d_frames(x, g.feed_w, g.feed_b), g.feed_norm));
            Tensor gate_in = concat_cols(x, state);
            Tensor gate =
                sigmoid(affine_rows(conv1d_frames(gate_in, g.gate_w, g.gate_b), g.gate_norm));
            state = mul(feed, gate);
        }
        x = state;
    }
    return x;
}

BiLstmParams BiLstmParams::random(Rng& rng, int depth, float lo, float hi) {
    if (depth < 1 || depth > 3) throw ParameterError("bilstm: depth must be in 1..3");
    BiLstmParams p;
    int64_t in = 64;
    for (int i = 0; i < depth; ++i) {
        Layer layer;
        for (LstmCellParams* cell : {&layer.fwd, &layer.bwd}) {
            cell->wi = rng.uniform({in, kHidden}, lo, hi);
            cell->wf = rng.uniform({in, kHidden}, lo, hi);
            cell->wc = rng.uniform({in, kHidden}, lo, hi);
            cell->wo = rng.uniform({in, kHidden}, lo, hi);
            cell->ui = rng.uniform({kHidden, kHidden}, lo, hi);
            cell->uf = rng.uniform({kHidden, kHidden}, lo, hi);
            cell->uc = rng.uniform({kHidden, kHidden}, lo, hi);
            cell->uo = rng.uniform({kHidden, kHidden}, lo, hi);
            cell->bi = rng.uniform({kHidden}, lo, hi);
            cell->bf = rng.uniform({kHidden}, lo, hi);
            cell->bc = rng.uniform({kHidden}, lo, hi);
            cell->bo = rng.uniform({kHidden}, lo, hi);
        }
        p.layers.push_back(std::move(layer));
        in = 2 * kHidden;
    }
    p.proj_w = rng.uniform({2 * kHidden, kOutputDim}, lo, hi);
    p.proj_b = rng.uniform({kOutputDim}, lo, hi);
    return p;
}

namespace {

// Runs one direction over the sequence; returns [n x 512] hidden states.
Tensor lstm_direction(const Tensor& x, const LstmCellParams& c, bool backward) {
    const int64_t n = x.dim(0);
    const int64_t H = BiLstmParams::kHidden;
    // Precompute the input contribution of each gate for all frames.
    Tensor xi = add_channel_bias(matmul(x, c.wi), c.bi);
    Tensor xf = add_channel_bias(matmul(x, c.wf), c.bf);
    Tensor xc = add_channel_bias(matmul(x, c.wc), c.bc);
    Tensor xo = add_channel_bias(matmul(x, c.wo), c.bo);

    Tensor out({n, H});
    Tensor h({1, H}), cell({1, H});
    for (int64_t step = 0; step < n; ++step) {
        const int64_t t = backward ? n - 1 - step : step;
        Tensor hi = matmul(h, c.ui);
        Tensor hf = matmul(h, c.uf);
        Tensor hc = matmul(h, c.uc);
        Tensor ho = matmul(h, c.uo);
        for (int64_t j = 0; j < H; ++j) {
            float ig = 1.0f / (1.0f + std::exp(-(xi.at(t, j) + hi.at(0, j))));
            float fg = 1.0f / (1.0f + std::exp(-(xf.at(t, j) + hf.at(0, j))));
            float cand = std::tanh(xc.at(t, j) + hc.at(0, j));
            float og = 1.0f / (1.0f + std::exp(-(xo.at(t, j) + ho.at(0, j))));
            float cv = fg * cell.at(0, j) + ig * cand;
            cell.at(0, j) = cv;
            float hv = og * std::tanh(cv);
            h.at(0, j) = hv;
            out.at(t, j) = hv;
        }
    }
    return out;
}

}  // namespace

Tensor encode_bilstm(const Tensor& frames, const BiLstmParams& p) {
    if (frames.rank() != 2) throw DimensionError("encode_bilstm: input must be n x 64");
    if (frames.dim(0) < 1) throw InputError("encode_bilstm: need at least one frame");
    Tensor x = frames;
    for (const BiLstmParams::Layer& layer : p.layers) {
        Tensor fwd = lstm_direction(x, layer.fwd, false);
        Tensor bwd = lstm_direction(x, layer.bwd, true);
        x = concat_cols(fwd, bwd);
    }
    return add_channel_bias(matmul(x, p.proj_w), p.proj_b);
}

Tensor logits(const Tensor& encoded, const LogitsHead& head) {
    if (encoded.rank() != 2) throw DimensionError("logits: input must be n x d");
    return add_channel_bias(matmul(encoded, head.w), head.b);
}

}  // namespace linerec
