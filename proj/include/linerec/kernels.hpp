#pragma once

#include "linerec/tensor.hpp"

namespace linerec {

// All kernels are pure, single threaded, and use a fixed accumulation order,
// so identical inputs give bit-identical outputs within one build.

// [m x k] * [k x p] -> [m x p]; k-major inner loop.
Tensor matmul(const Tensor& a, const Tensor& b);

// Row-wise softmax with per-row max subtraction. Input [m x n].
Tensor softmax_rows(const Tensor& x);

enum class Padding { Same, Valid };

struct Stride {
    int64_t y = 1;
    int64_t x = 1;
};

// Cross-correlation of x [H x W x Cin] with kernel [kh x kw x Cin x Cout].
// "Same" zero-pads symmetrically (extra pixel goes to the bottom/right).
Tensor conv2d(const Tensor& x, const Tensor& kernel, Stride stride, Padding padding);

// [H x W x C] -> [H/b x W/b x C*b*b]; output channel = (dy*b + dx)*C + c.
Tensor space_to_depth(const Tensor& x, int64_t block);
// Exact inverse of space_to_depth.
Tensor depth_to_space(const Tensor& x, int64_t block);

// Normalize each length-d vector along the last axis to zero mean and unit
// variance (population variance, + eps), then scale by gain and add bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps = 1e-6f);

// Elementwise helpers used throughout the model code.
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_t(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// Adds bias[c] to every channel c along the last axis.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
// Per-channel affine along the last axis: x*scale[c] + shift[c].
Tensor channel_affine(const Tensor& x, const Tensor& scale, const Tensor& shift);

// Throws InputError when t contains NaN or Inf.
void ensure_finite(const Tensor& t, const char* op);

}  // namespace linerec
