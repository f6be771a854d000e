#include "linerec/backbone.hpp"

#include "linerec/errors.hpp"
#include "linerec/kernels.hpp"

namespace linerec {

BackboneParams BackboneParams::random(Rng& rng, int num_layers, float lo, float hi) {
    BackboneParams p;
    const int64_t C = kChannels;
    const int64_t E = kChannels * kExpansion;
    p.stem_w = rng.uniform({1, 1, kBlock * kBlock, C}, lo, hi);
    p.stem_b = rng.uniform({C}, lo, hi);
    p.layers.reserve(static_cast<size_t>(num_layers));
    for (int i = 0; i < num_layers; ++i) {
        FusedIbnParams l;
        l.expand_w = rng.uniform({3, 3, C, E}, lo, hi);
        l.expand_b = rng.uniform({E}, lo, hi);
        l.norm = rng.uniform({2, E}, lo, hi);
        l.project_w = rng.uniform({1, 1, E, C}, lo, hi);
        l.project_b = rng.uniform({C}, lo, hi);
        p.layers.push_back(std::move(l));
    }
    const int64_t grid_h = kInputHeight / kBlock;
    p.collapse_w = rng.uniform({grid_h, 1, C, C}, lo, hi);
    p.collapse_b = rng.uniform({C}, lo, hi);
    p.resid_w = rng.uniform({1, 1, C, C}, lo, hi);
    p.resid_b = rng.uniform({C}, lo, hi);
    return p;
}

namespace {

Tensor fused_ibn(const Tensor& x, const FusedIbnParams& l) {
    Tensor h = conv2d(x, l.expand_w, {}, Padding::Same);
    h = add_channel_bias(h, l.expand_b);
    const int64_t E = l.norm.dim(1);
    Tensor scale({E}), shift({E});
    for (int64_t c = 0; c < E; ++c) {
        scale.at(c) = l.norm.at(0, c);
        shift.at(c) = l.norm.at(1, c);
    }
    h = channel_affine(h, scale, shift);
    h = relu(h);
    h = conv2d(h, l.project_w, {}, Padding::Valid);
    h = add_channel_bias(h, l.project_b);
    return add(h, x);
}

// Full-height valid conv plus a projection of the column mean, both 1-high.
Tensor collapse_height(const Tensor& x, const BackboneParams& p) {
    Tensor tall = conv2d(x, p.collapse_w, {}, Padding::Valid);
    tall = add_channel_bias(tall, p.collapse_b);

    const int64_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
    Tensor mean({1, W, C});
    const float inv_h = 1.0f / static_cast<float>(H);
    for (int64_t w = 0; w < W; ++w)
        for (int64_t c = 0; c < C; ++c) {
            float acc = 0.0f;
            for (int64_t y = 0; y < H; ++y) acc += x.at(y, w, c);
            mean.at(0, w, c) = acc * inv_h;
        }
    Tensor resid = conv2d(mean, p.resid_w, {}, Padding::Valid);
    resid = add_channel_bias(resid, p.resid_b);
    return add(tall, resid);
}

}  // namespace

Tensor backbone_forward(const Tensor& image, const BackboneParams& params) {
    if (image.rank() != 3 || image.dim(2) != 1)
        throw DimensionError("backbone: input must be H x W x 1");
    if (image.dim(0) != BackboneParams::kInputHeight)
        throw DimensionError("backbone: input height must be 40");
    if (image.dim(1) % BackboneParams::kBlock != 0)
        throw DimensionError("backbone: width must be a multiple of 4");

    Tensor x = space_to_depth(image, BackboneParams::kBlock);
    x = conv2d(x, params.stem_w, {}, Padding::Valid);
    x = add_channel_bias(x, params.stem_b);
    for (const FusedIbnParams& l : params.layers) x = fused_ibn(x, l);
    x = collapse_height(x, params);

    // [1, W/4, 64] -> [W/4, 64]
    const int64_t frames = x.dim(1), C = x.dim(2);
    Tensor out({frames, C});
    for (int64_t f = 0; f < frames; ++f)
        for (int64_t c = 0; c < C; ++c) out.at(f, c) = x.at(0, f, c);
    return out;
}

int64_t receptive_field_radius(const BackboneParams& params) {
    const int64_t block = BackboneParams::kBlock;
    int64_t grid_radius = 0;
    for (const FusedIbnParams& l : params.layers) grid_radius += l.expand_w.dim(1) / 2;
    grid_radius += params.collapse_w.dim(1) / 2;
    return (block - 1) + block * grid_radius;
}

}  // namespace linerec
