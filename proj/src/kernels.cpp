#include "linerec/kernels.hpp"

#include <cmath>
#include <string>

#include "linerec/errors.hpp"

namespace linerec {

void ensure_finite(const Tensor& t, const char* op) {
    if (!t.all_finite()) throw InputError(std::string(op) + ": output contains NaN/Inf");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul: operands must be rank 2");
    if (a.dim(1) != b.dim(0)) throw DimensionError("matmul: inner extents do not match");
    const int64_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
    Tensor out({m, p});
    const float* pa = a.data();
    const float* pb = b.data();
    float* po = out.data();
    for (int64_t i = 0; i < m; ++i) {
        const float* arow = pa + i * k;
        float* orow = po + i * p;
        for (int64_t kk = 0; kk < k; ++kk) {
            const float av = arow[kk];
            const float* brow = pb + kk * p;
            for (int64_t j = 0; j < p; ++j) orow[j] += av * brow[j];
        }
    }
    ensure_finite(out, "matmul");
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.rank() != 2) throw DimensionError("softmax_rows: input must be rank 2");
    const int64_t m = x.dim(0), n = x.dim(1);
    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i) {
        float mx = x.at(i, 0);
        for (int64_t j = 1; j < n; ++j) mx = std::max(mx, x.at(i, j));
        float sum = 0.0f;
        for (int64_t j = 0; j < n; ++j) {
            float e = std::exp(x.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        float inv = 1.0f / sum;
        for (int64_t j = 0; j < n; ++j) out.at(i, j) *= inv;
    }
    ensure_finite(out, "softmax_rows");
    return out;
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, Stride stride, Padding padding) {
    if (x.rank() != 3) throw DimensionError("conv2d: input must be H x W x Cin");
    if (kernel.rank() != 4) throw DimensionError("conv2d: kernel must be kh x kw x Cin x Cout");
    if (stride.y <= 0 || stride.x <= 0) throw ParameterError("conv2d: stride must be positive");
    const int64_t H = x.dim(0), W = x.dim(1), Cin = x.dim(2);
    const int64_t kh = kernel.dim(0), kw = kernel.dim(1), Cout = kernel.dim(3);
    if (kernel.dim(2) != Cin) throw DimensionError("conv2d: kernel Cin does not match input");

    int64_t out_h, out_w, pad_top = 0, pad_left = 0;
    if (padding == Padding::Same) {
        out_h = (H + stride.y - 1) / stride.y;
        out_w = (W + stride.x - 1) / stride.x;
        int64_t pad_h = std::max<int64_t>((out_h - 1) * stride.y + kh - H, 0);
        int64_t pad_w = std::max<int64_t>((out_w - 1) * stride.x + kw - W, 0);
        pad_top = pad_h / 2;
        pad_left = pad_w / 2;
    } else {
        if (kh > H || kw > W) throw DimensionError("conv2d: kernel larger than input");
        out_h = (H - kh) / stride.y + 1;
        out_w = (W - kw) / stride.x + 1;
    }

    Tensor out({out_h, out_w, Cout});
    const float* px = x.data();
    const float* pk = kernel.data();
    float* po = out.data();
    for (int64_t oy = 0; oy < out_h; ++oy) {
        for (int64_t ox = 0; ox < out_w; ++ox) {
            float* acc = po + (oy * out_w + ox) * Cout;
            for (int64_t ky = 0; ky < kh; ++ky) {
                const int64_t iy = oy * stride.y + ky - pad_top;
                if (iy < 0 || iy >= H) continue;
                for (int64_t kx = 0; kx < kw; ++kx) {
                    const int64_t ix = ox * stride.x + kx - pad_left;
                    if (ix < 0 || ix >= W) continue;
                    const float* in = px + (iy * W + ix) * Cin;
                    const float* wk = pk + (ky * kw + kx) * Cin * Cout;
                    for (int64_t ci = 0; ci < Cin; ++ci) {
                        const float a = in[ci];
                        const float* wrow = wk + ci * Cout;
                        for (int64_t co = 0; co < Cout; ++co) acc[co] += a * wrow[co];
                    }
                }
            }
        }
    }
    ensure_finite(out, "conv2d");
    return out;
}

Tensor space_to_depth(const Tensor& x, int64_t block) {
    if (x.rank() != 3) throw DimensionError("space_to_depth: input must be H x W x C");
    if (block <= 0) throw ParameterError("space_to_depth: block must be positive");
    const int64_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
    if (H % block != 0 || W % block != 0)
        throw DimensionError("space_to_depth: extents not divisible by block");
    const int64_t oh = H / block, ow = W / block, oc = C * block * block;
    Tensor out({oh, ow, oc});
    for (int64_t y = 0; y < oh; ++y)
        for (int64_t x2 = 0; x2 < ow; ++x2)
            for (int64_t dy = 0; dy < block; ++dy)
                for (int64_t dx = 0; dx < block; ++dx)
                    for (int64_t c = 0; c < C; ++c)
                        out.at(y, x2, (dy * block + dx) * C + c) =
                            x.at(y * block + dy, x2 * block + dx, c);
    return out;
}

Tensor depth_to_space(const Tensor& x, int64_t block) {
    if (x.rank() != 3) throw DimensionError("depth_to_space: input must be H x W x C");
    if (block <= 0) throw ParameterError("depth_to_space: block must be positive");
    const int64_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
    if (C % (block * block) != 0)
        throw DimensionError("depth_to_space: channels not divisible by block^2");
    const int64_t oc = C / (block * block);
    Tensor out({H * block, W * block, oc});
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x2 = 0; x2 < W; ++x2)
            for (int64_t dy = 0; dy < block; ++dy)
                for (int64_t dx = 0; dx < block; ++dx)
                    for (int64_t c = 0; c < oc; ++c)
                        out.at(y * block + dy, x2 * block + dx, c) =
                            x.at(y, x2, (dy * block + dx) * oc + c);
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
    if (x.rank() < 1) throw DimensionError("layer_norm: input must have rank >= 1");
    const int64_t d = x.dim(x.rank() - 1);
    if (gain.size() != d || bias.size() != d)
        throw DimensionError("layer_norm: gain/bias length must equal last extent");
    const int64_t rows = x.size() / d;
    Tensor out(x.shape());
    const float* px = x.data();
    float* po = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        const float* v = px + r * d;
        float* o = po + r * d;
        float mean = 0.0f;
        for (int64_t j = 0; j < d; ++j) mean += v[j];
        mean /= static_cast<float>(d);
        float var = 0.0f;
        for (int64_t j = 0; j < d; ++j) {
            float c = v[j] - mean;
            var += c * c;
        }
        var /= static_cast<float>(d);
        float inv = 1.0f / std::sqrt(var + eps);
        for (int64_t j = 0; j < d; ++j)
            o[j] = (v[j] - mean) * inv * gain.at(j) + bias.at(j);
    }
    ensure_finite(out, "layer_norm");
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out.at(i) = x.at(i) > 0.0f ? x.at(i) : 0.0f;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out.at(i) = 1.0f / (1.0f + std::exp(-x.at(i)));
    return out;
}

Tensor tanh_t(const Tensor& x) {
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out.at(i) = std::tanh(x.at(i));
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("add: shape mismatch");
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out.at(i) = a.at(i) + b.at(i);
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("mul: shape mismatch");
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out.at(i) = a.at(i) * b.at(i);
    return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
    const int64_t d = x.dim(x.rank() - 1);
    if (bias.size() != d) throw DimensionError("add_channel_bias: bias length mismatch");
    Tensor out(x.shape());
    const int64_t rows = x.size() / d;
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < d; ++j) out.at(r * d + j) = x.at(r * d + j) + bias.at(j);
    return out;
}

Tensor channel_affine(const Tensor& x, const Tensor& scale, const Tensor& shift) {
    const int64_t d = x.dim(x.rank() - 1);
    if (scale.size() != d || shift.size() != d)
        throw DimensionError("channel_affine: scale/shift length mismatch");
    Tensor out(x.shape());
    const int64_t rows = x.size() / d;
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < d; ++j)
            out.at(r * d + j) = x.at(r * d + j) * scale.at(j) + shift.at(j);
    return out;
}

}  // namespace linerec
