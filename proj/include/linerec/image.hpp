#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linerec/tensor.hpp"

namespace linerec {

struct LineImage {
    static constexpr int64_t kHeight = 40;
    Tensor pixels;                // [40 x W x 1], values in [-1, 1]
    int64_t width = 0;            // W after padding to a multiple of 4
    int64_t normalized_width = 0; // width after height normalization, pre-pad
};

// Gray [H x W] values 0..255 -> bilinear resample with half-pixel centers.
Tensor bilinear_resize_gray(const Tensor& gray, int64_t out_h, int64_t out_w);

// Height-normalize to 40 px (keeping aspect), pad the width up to the next
// multiple of 4 by edge replication, map p -> p/127.5 - 1.
LineImage line_image_from_gray(const Tensor& gray);

// Binary PGM (P5, maxval 255).
LineImage load_line_image(const std::string& path);
void write_pgm(const std::string& path, int64_t h, int64_t w,
               const std::vector<uint8_t>& pixels);

}  // namespace linerec
