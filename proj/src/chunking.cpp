#include "linerec/chunking.hpp"

#include <string>

#include "linerec/errors.hpp"

namespace linerec {

PaddingPolicy padding_policy_from_string(const std::string& s) {
    if (s == "zero") return PaddingPolicy::Zero;
    if (s == "edge-replicate" || s == "edge") return PaddingPolicy::EdgeReplicate;
    throw ParameterError("unknown padding policy: " + s);
}

std::string to_string(PaddingPolicy p) {
    return p == PaddingPolicy::Zero ? "zero" : "edge-replicate";
}

ChunkPlan plan_chunks(int64_t width_px, int64_t pad_px) {
    if (width_px < 1) throw ParameterError("plan_chunks: width must be >= 1");
    if (width_px % 4 != 0) throw DimensionError("plan_chunks: width must be a multiple of 4");
    if (pad_px < 0 || pad_px >= ChunkPlan::kChunkWidth / 2)
        throw ParameterError("plan_chunks: pad must be in [0, 160)");
    if (pad_px % 4 != 0) throw ParameterError("plan_chunks: pad must be a multiple of 4");

    ChunkPlan plan;
    plan.line_width_px = width_px;
    plan.pad_px = pad_px;
    plan.core_px = ChunkPlan::kChunkWidth - 2 * pad_px;
    const int64_t k = (width_px + plan.core_px - 1) / plan.core_px;
    plan.chunks.reserve(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i) {
        Chunk c;
        c.core_start_px = i * plan.core_px;
        c.core_end_px = std::min((i + 1) * plan.core_px, width_px);
        c.read_start_px = c.core_start_px - pad_px;
        c.read_end_px = c.read_start_px + ChunkPlan::kChunkWidth;
        c.valid_frame_begin = pad_px / 4;
        c.valid_frame_end = c.valid_frame_begin + (c.core_end_px - c.core_start_px) / 4;
        plan.chunks.push_back(c);
    }
    plan.total_frames = width_px / 4;
    return plan;
}

namespace {

float read_pixel(const Tensor& image, int64_t y, int64_t x, PaddingPolicy policy) {
    const int64_t W = image.dim(1);
    if (x >= 0 && x < W) return image.at(y, x, 0);
    if (policy == PaddingPolicy::Zero) return 0.0f;
    return image.at(y, x < 0 ? 0 : W - 1, 0);
}

}  // namespace

std::vector<Tensor> split(const Tensor& image, const ChunkPlan& plan, PaddingPolicy policy) {
    if (image.rank() != 3 || image.dim(2) != 1)
        throw InputError("split: image must be H x W x 1");
    if (image.dim(1) != plan.line_width_px)
        throw InputError("split: plan width does not match image");
    const int64_t H = image.dim(0);
    std::vector<Tensor> out;
    out.reserve(plan.chunks.size());
    for (const Chunk& c : plan.chunks) {
        Tensor chunk({H, ChunkPlan::kChunkWidth, 1});
        for (int64_t y = 0; y < H; ++y)
            for (int64_t q = 0; q < ChunkPlan::kChunkWidth; ++q)
                chunk.at(y, q, 0) = read_pixel(image, y, c.read_start_px + q, policy);
        out.push_back(std::move(chunk));
    }
    return out;
}

Tensor merge_valid(const std::vector<Tensor>& per_chunk_features, const ChunkPlan& plan) {
    if (per_chunk_features.size() != plan.chunks.size())
        throw InputError("merge_valid: chunk count does not match plan");
    if (per_chunk_features.empty()) throw InputError("merge_valid: no chunks");
    const int64_t frames_per_chunk = ChunkPlan::kChunkWidth / 4;
    const int64_t d = per_chunk_features.front().dim(1);
    Tensor out({plan.total_frames, d});
    int64_t row = 0;
    for (size_t i = 0; i < plan.chunks.size(); ++i) {
        const Tensor& f = per_chunk_features[i];
        if (f.rank() != 2 || f.dim(0) != frames_per_chunk || f.dim(1) != d)
            throw InputError("merge_valid: chunk features must be 80 x d");
        const Chunk& c = plan.chunks[i];
        for (int64_t j = c.valid_frame_begin; j < c.valid_frame_end; ++j, ++row)
            for (int64_t col = 0; col < d; ++col) out.at(row, col) = f.at(j, col);
    }
    if (row != plan.total_frames) throw InputError("merge_valid: frame bookkeeping mismatch");
    return out;
}

Tensor extend_line(const Tensor& image, int64_t left_px, int64_t right_px, PaddingPolicy policy) {
    const int64_t H = image.dim(0), W = image.dim(1);
    Tensor out({H, W + left_px + right_px, 1});
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < out.dim(1); ++x)
            out.at(y, x, 0) = read_pixel(image, y, x - left_px, policy);
    return out;
}

}  // namespace linerec
