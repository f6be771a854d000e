#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "linerec/backbone.hpp"
#include "linerec/errors.hpp"

using namespace linerec;

namespace {

void zero_offsets(BackboneParams& p) {
    auto zero = [](Tensor& t) {
        for (int64_t i = 0; i < t.size(); ++i) t.at(i) = 0.0f;
    };
    zero(p.stem_b);
    for (FusedIbnParams& l : p.layers) {
        zero(l.expand_b);
        zero(l.project_b);
        for (int64_t c = 0; c < l.norm.dim(1); ++c) l.norm.at(1, c) = 0.0f;  // shift row
    }
    zero(p.collapse_b);
    zero(p.resid_b);
}

bool frames_equal(const Tensor& a, const Tensor& b, int64_t frame) {
    for (int64_t c = 0; c < a.dim(1); ++c)
        if (a.at(frame, c) != b.at(frame, c)) return false;
    return true;
}

}  // namespace

TEST_CASE("frame count is W/4 and dimension errors fire") {
    Rng rng(1);
    BackboneParams full = BackboneParams::random(rng, 11);
    BackboneParams thin = BackboneParams::random(rng, 0);

    Tensor w4 = rng.uniform({40, 4, 1}, -1.0f, 1.0f);
    CHECK(backbone_forward(w4, full).dim(0) == 1);

    Tensor w320 = rng.uniform({40, 320, 1}, -1.0f, 1.0f);
    Tensor out = backbone_forward(w320, full);
    CHECK(out.dim(0) == 80);
    CHECK(out.dim(1) == 64);

    // Geometry only; a conv stack does not change the frame count.
    for (int64_t w : {1024, 4096}) {
        Tensor img = rng.uniform({40, w, 1}, -1.0f, 1.0f);
        CHECK(backbone_forward(img, thin).dim(0) == w / 4);
    }

    CHECK_THROWS_AS(backbone_forward(Tensor({40, 318, 1}), thin), DimensionError);
    CHECK_THROWS_AS(backbone_forward(Tensor({20, 320, 1}), thin), DimensionError);
}

TEST_CASE("zero image with zero offsets maps to zero output") {
    Rng rng(2);
    BackboneParams p = BackboneParams::random(rng, 11);
    zero_offsets(p);
    Tensor img({40, 64, 1});
    Tensor out = backbone_forward(img, p);
    for (int64_t i = 0; i < out.size(); ++i) CHECK(out.at(i) == 0.0f);
}

TEST_CASE("forward is bit-deterministic") {
    Rng rng(3);
    BackboneParams p = BackboneParams::random(rng, 2);
    Tensor img = rng.uniform({40, 80, 1}, -1.0f, 1.0f);
    Tensor a = backbone_forward(img, p);
    Tensor b = backbone_forward(img, p);
    for (int64_t i = 0; i < a.size(); ++i) CHECK(a.at(i) == b.at(i));
}

TEST_CASE("receptive field radius from layer geometry") {
    Rng rng(4);
    CHECK(receptive_field_radius(BackboneParams::random(rng, 0)) == 3);
    CHECK(receptive_field_radius(BackboneParams::random(rng, 11)) == 47);
    // Doubling the conv stack doubles the conv contribution: 3 + 4*22.
    CHECK(receptive_field_radius(BackboneParams::random(rng, 22)) == 91);
}

TEST_CASE("perturbations outside the radius leave a frame bit-identical") {
    Rng rng(5);
    const int layers = 2;  // radius 3 + 4*2 = 11
    BackboneParams p = BackboneParams::random(rng, layers);
    const int64_t radius = receptive_field_radius(p);
    CHECK(radius == 11);

    const int64_t W = 96;
    Tensor img = rng.uniform({40, W, 1}, -1.0f, 1.0f);
    Tensor base = backbone_forward(img, p);

    const int64_t frame = 12;  // own pixels [48, 52)
    // The frame is influenced by pixels [4f - (radius-3), 4f + radius]:
    // the within-block offset of 3 extends the reach only to the right.
    const int64_t lo = 4 * frame - (radius - 3);
    const int64_t hi = 4 * frame + radius;
    for (int trial = 0; trial < 50; ++trial) {
        int64_t x;
        do {
            x = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(W)));
        } while (x >= lo && x <= hi);
        int64_t y = static_cast<int64_t>(rng.next_below(40));
        Tensor poked = img;
        poked.at(y, x, 0) += 7.0f;
        Tensor out = backbone_forward(poked, p);
        CHECK(frames_equal(base, out, frame));
    }

    // Tightness: pixels at both edges of the window do reach the frame.
    for (int64_t x : {lo, hi}) {
        Tensor poked = img;
        poked.at(20, x, 0) += 7.0f;
        CHECK(!frames_equal(base, backbone_forward(poked, p), frame));
    }
}

TEST_CASE("full-depth radius 47 is tight under a perturbation oracle") {
    Rng rng(6);
    BackboneParams p = BackboneParams::random(rng, 11);
    Tensor img = rng.uniform({40, 320, 1}, -1.0f, 1.0f);
    Tensor base = backbone_forward(img, p);
    Tensor poked = img;
    poked.at(15, 0, 0) += 7.0f;  // flip one pixel at the left edge
    Tensor out = backbone_forward(poked, p);
    // Frames whose window [4f-47, 4f+50] contains pixel 0: f <= 11.
    for (int64_t f = 12; f < base.dim(0); ++f) CHECK(frames_equal(base, out, f));
    CHECK(!frames_equal(base, out, 11));
}
