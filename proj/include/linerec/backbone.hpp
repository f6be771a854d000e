#pragma once

#include <vector>

#include "linerec/tensor.hpp"

namespace linerec {

// One fused inverted-bottleneck layer: full 3x3 expansion conv (8x), channel
// affine (folded train-time normalization), ReLU, 1x1 projection, residual.
struct FusedIbnParams {
    Tensor expand_w;   // [3,3,C,8C]
    Tensor expand_b;   // [8C]
    Tensor norm;       // [2,8C]: row 0 scale, row 1 shift
    Tensor project_w;  // [1,1,8C,C]
    Tensor project_b;  // [C]
};

struct BackboneParams {
    static constexpr int64_t kBlock = 4;
    static constexpr int64_t kInputHeight = 40;
    static constexpr int64_t kChannels = 64;
    static constexpr int64_t kExpansion = 8;
    static constexpr int kStandardLayers = 11;

    Tensor stem_w;  // [1,1,16,64] projection after space-to-depth
    Tensor stem_b;  // [64]
    std::vector<FusedIbnParams> layers;
    Tensor collapse_w;  // [10,1,64,64] full-height valid conv
    Tensor collapse_b;  // [64]
    Tensor resid_w;     // [1,1,64,64] projection of the column mean
    Tensor resid_b;     // [64]

    // Layer count is free here so tests can use shallow stacks; model loading
    // enforces the standard depth of 11.
    static BackboneParams random(Rng& rng, int num_layers = kStandardLayers,
                                 float lo = -0.08f, float hi = 0.08f);
};

// [40 x W x 1] normalized grayscale -> [W/4 x 64] frame features.
// W must be a multiple of 4.
Tensor backbone_forward(const Tensor& image, const BackboneParams& params);

// One-sided horizontal radius, in input pixels, of the influence of a single
// output frame: (block-1) + block * sum of per-layer horizontal conv radii.
int64_t receptive_field_radius(const BackboneParams& params);

}  // namespace linerec
