#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "linerec/backbone.hpp"
#include "linerec/chunking.hpp"
#include "linerec/errors.hpp"

using namespace linerec;

TEST_CASE("plan arithmetic matches the worked example") {
    ChunkPlan plan = plan_chunks(600, 48);
    CHECK(plan.core_px == 224);
    REQUIRE(plan.chunks.size() == 3);
    CHECK(plan.chunks[0].core_start_px == 0);
    CHECK(plan.chunks[0].core_end_px == 224);
    CHECK(plan.chunks[1].core_start_px == 224);
    CHECK(plan.chunks[1].core_end_px == 448);
    CHECK(plan.chunks[2].core_start_px == 448);
    CHECK(plan.chunks[2].core_end_px == 600);
    CHECK(plan.total_frames == 150);
    for (const Chunk& c : plan.chunks) {
        CHECK(c.read_end_px - c.read_start_px == 320);
        CHECK(c.read_start_px == c.core_start_px - 48);
    }
    // Valid ranges: 56 + 56 + 38 frames.
    CHECK(plan.chunks[0].valid_frame_end - plan.chunks[0].valid_frame_begin == 56);
    CHECK(plan.chunks[1].valid_frame_end - plan.chunks[1].valid_frame_begin == 56);
    CHECK(plan.chunks[2].valid_frame_end - plan.chunks[2].valid_frame_begin == 38);
}

TEST_CASE("single-chunk cases and parameter validation") {
    ChunkPlan small = plan_chunks(100, 48);
    CHECK(small.chunks.size() == 1);
    CHECK(small.chunks[0].valid_frame_end - small.chunks[0].valid_frame_begin == 25);

    ChunkPlan exact = plan_chunks(224, 48);
    CHECK(exact.chunks.size() == 1);
    CHECK(exact.chunks[0].core_end_px == 224);

    CHECK_THROWS_AS(plan_chunks(600, 46), ParameterError);   // not a multiple of 4
    CHECK_THROWS_AS(plan_chunks(600, 160), ParameterError);  // core would vanish
    CHECK_THROWS_AS(plan_chunks(0, 48), ParameterError);
    CHECK_THROWS_AS(plan_chunks(602, 48), DimensionError);   // width not padded
}

TEST_CASE("cores always partition the line exactly") {
    Rng rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        int64_t w = 4 * (1 + static_cast<int64_t>(rng.next_below(1200)));
        int64_t pad = 4 * static_cast<int64_t>(rng.next_below(40));
        ChunkPlan plan = plan_chunks(w, pad);
        int64_t cursor = 0, frames = 0;
        for (const Chunk& c : plan.chunks) {
            CHECK(c.core_start_px == cursor);
            CHECK(c.core_end_px > c.core_start_px);
            cursor = c.core_end_px;
            frames += c.valid_frame_end - c.valid_frame_begin;
        }
        CHECK(cursor == w);
        CHECK(frames == w / 4);
    }
}

TEST_CASE("split synthesizes pads and copies interior pixels verbatim") {
    Rng rng(23);
    Tensor img = rng.uniform({40, 600, 1}, -1.0f, 1.0f);
    ChunkPlan plan = plan_chunks(600, 48);

    std::vector<Tensor> zero_chunks = split(img, plan, PaddingPolicy::Zero);
    REQUIRE(zero_chunks.size() == 3);
    for (int64_t y = 0; y < 40; ++y)
        for (int64_t q = 0; q < 48; ++q) CHECK(zero_chunks[0].at(y, q, 0) == 0.0f);

    std::vector<Tensor> edge_chunks = split(img, plan, PaddingPolicy::EdgeReplicate);
    for (int64_t y = 0; y < 40; ++y) {
        CHECK(edge_chunks[0].at(y, 0, 0) == img.at(y, 0, 0));
        // Tail of the last chunk replicates the final column.
        CHECK(edge_chunks[2].at(y, 319, 0) == img.at(y, 599, 0));
    }

    // Interior chunk: the read window lies fully inside the image.
    const Chunk& mid = plan.chunks[1];
    for (int64_t y = 0; y < 40; ++y)
        for (int64_t q = 0; q < 320; ++q)
            CHECK(edge_chunks[1].at(y, q, 0) == img.at(y, mid.read_start_px + q, 0));

    // Pasting the cores back reproduces the image.
    Tensor pasted({40, 600, 1});
    for (size_t i = 0; i < plan.chunks.size(); ++i) {
        const Chunk& c = plan.chunks[i];
        for (int64_t y = 0; y < 40; ++y)
            for (int64_t x = c.core_start_px; x < c.core_end_px; ++x)
                pasted.at(y, x, 0) = edge_chunks[i].at(y, x - c.read_start_px, 0);
    }
    for (int64_t i = 0; i < img.size(); ++i) CHECK(pasted.at(i) == img.at(i));

    CHECK_THROWS_AS(split(Tensor({40, 604, 1}), plan, PaddingPolicy::Zero), InputError);
}

TEST_CASE("merge_valid concatenates valid ranges in order") {
    Rng rng(29);
    ChunkPlan plan = plan_chunks(600, 48);
    std::vector<Tensor> features;
    for (int i = 0; i < 3; ++i) features.push_back(rng.uniform({80, 16}, -1.0f, 1.0f));
    Tensor merged = merge_valid(features, plan);
    CHECK(merged.dim(0) == 150);
    CHECK(merged.dim(1) == 16);
    // Row 0 comes from chunk 0 frame 12; row 56 from chunk 1 frame 12.
    for (int64_t c = 0; c < 16; ++c) {
        CHECK(merged.at(0, c) == features[0].at(12, c));
        CHECK(merged.at(56, c) == features[1].at(12, c));
        CHECK(merged.at(149, c) == features[2].at(12 + 37, c));
    }

    ChunkPlan one = plan_chunks(100, 48);
    std::vector<Tensor> single = {rng.uniform({80, 8}, -1.0f, 1.0f)};
    Tensor cropped = merge_valid(single, one);
    CHECK(cropped.dim(0) == 25);

    std::vector<Tensor> wrong = {rng.uniform({79, 8}, -1.0f, 1.0f)};
    CHECK_THROWS_AS(merge_valid(wrong, one), InputError);
    CHECK_THROWS_AS(merge_valid({}, one), InputError);
}

TEST_CASE("chunked backbone equals the extended full-image forward") {
    Rng rng(31);
    const int layers = 3;  // radius 3 + 12 = 15; pad 16 covers it
    const int64_t pad = 16;
    BackboneParams p = BackboneParams::random(rng, layers);
    REQUIRE(receptive_field_radius(p) <= pad);

    for (PaddingPolicy policy : {PaddingPolicy::EdgeReplicate, PaddingPolicy::Zero}) {
        Tensor img = rng.uniform({40, 600, 1}, -1.0f, 1.0f);
        ChunkPlan plan = plan_chunks(600, pad);
        std::vector<Tensor> chunks = split(img, plan, policy);
        std::vector<Tensor> feats;
        for (const Tensor& c : chunks) feats.push_back(backbone_forward(c, p));
        Tensor merged = merge_valid(feats, plan);

        // Reference: the same pixel stream the chunks see is the image
        // extended by `pad` policy columns per side; crop pad/4 frames.
        Tensor ext = extend_line(img, pad, pad, policy);
        Tensor full = backbone_forward(ext, p);
        const int64_t off = pad / 4;
        REQUIRE(merged.dim(0) == 150);
        for (int64_t f = 0; f < merged.dim(0); ++f)
            for (int64_t c = 0; c < merged.dim(1); ++c) {
                float got = merged.at(f, c);
                float want = full.at(f + off, c);
                CHECK(std::fabs(got - want) <=
                      1e-5f * std::max(1.0f, std::fabs(want)));
            }
    }
}

TEST_CASE("merge output does not depend on chunk processing order") {
    Rng rng(37);
    BackboneParams p = BackboneParams::random(rng, 1);
    Tensor img = rng.uniform({40, 480, 1}, -1.0f, 1.0f);
    ChunkPlan plan = plan_chunks(480, 16);
    std::vector<Tensor> chunks = split(img, plan, PaddingPolicy::EdgeReplicate);

    std::vector<Tensor> forward(chunks.size()), reversed(chunks.size());
    for (size_t i = 0; i < chunks.size(); ++i) forward[i] = backbone_forward(chunks[i], p);
    for (size_t i = chunks.size(); i-- > 0;) reversed[i] = backbone_forward(chunks[i], p);
    Tensor a = merge_valid(forward, plan);
    Tensor b = merge_valid(reversed, plan);
    for (int64_t i = 0; i < a.size(); ++i) CHECK(a.at(i) == b.at(i));
}
