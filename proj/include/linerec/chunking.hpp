#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linerec/tensor.hpp"

namespace linerec {

// How out-of-image reads (and the last chunk's tail) are synthesized.
// Zero fills with 0.0 in the normalized pixel domain; EdgeReplicate copies
// the nearest real column.
enum class PaddingPolicy { Zero, EdgeReplicate };

PaddingPolicy padding_policy_from_string(const std::string& s);
std::string to_string(PaddingPolicy p);

struct Chunk {
    int64_t core_start_px;
    int64_t core_end_px;
    int64_t read_start_px;  // core_start - pad
    int64_t read_end_px;    // read_start + 320
    int64_t valid_frame_begin;  // chunk-local, = pad/4
    int64_t valid_frame_end;    // chunk-local, exclusive
};

struct ChunkPlan {
    static constexpr int64_t kChunkWidth = 320;
    int64_t line_width_px = 0;
    int64_t pad_px = 0;
    int64_t core_px = 0;  // 320 - 2*pad
    std::vector<Chunk> chunks;
    int64_t total_frames = 0;  // line_width / 4
};

// Cores partition [0, W) exactly; every read window is 320 px wide.
// W must be a positive multiple of 4; pad must be a multiple of 4 in [0, 160).
ChunkPlan plan_chunks(int64_t width_px, int64_t pad_px);

// Cut the normalized line image [40 x W x 1] into read windows, synthesizing
// out-of-range pixels per the policy.
std::vector<Tensor> split(const Tensor& image, const ChunkPlan& plan, PaddingPolicy policy);

// Concatenate each chunk's valid frame range; features are [80 x d] per chunk.
Tensor merge_valid(const std::vector<Tensor>& per_chunk_features, const ChunkPlan& plan);

// The image extended by `pad` policy-synthesized columns on each side. This is
// exactly the pixel stream the chunk pipeline sees, so the whole-line backbone
// output on it (cropped by pad/4 frames per side) is the chunking reference.
Tensor extend_line(const Tensor& image, int64_t left_px, int64_t right_px, PaddingPolicy policy);

}  // namespace linerec
