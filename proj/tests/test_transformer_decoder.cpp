#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "linerec/errors.hpp"
#include "linerec/transformer_decoder.hpp"

using namespace linerec;

namespace {

std::vector<int> random_prefix(Rng& rng, int vocab, size_t max_len) {
    std::vector<int> tokens;
    size_t len = 1 + rng.next_below(max_len);
    for (size_t i = 0; i < len; ++i)
        tokens.push_back(static_cast<int>(rng.next_below(static_cast<uint64_t>(vocab))));
    return tokens;
}

}  // namespace

TEST_CASE("first step sees only BOS and returns vocab-sized logits") {
    Rng rng(7);
    Alphabet ab = Alphabet::from_utf8("ab");
    TfmrDecoderParams p = TfmrDecoderParams::random(rng, ab);
    Tensor encoded = rng.uniform({5, 256}, -1.0f, 1.0f);
    Tensor first = decoder_step({}, encoded, p);
    CHECK(first.dim(0) == 1);
    CHECK(first.dim(1) == 4);  // a, b, BOS, EOS
}

TEST_CASE("future-token perturbations leave earlier logits bit-identical") {
    Rng rng(11);
    Alphabet abc = Alphabet::from_utf8("abcde");
    for (int trial = 0; trial < 5; ++trial) {
        TfmrDecoderParams p = TfmrDecoderParams::random(rng, abc);
        Tensor encoded = rng.uniform({4, 256}, -1.0f, 1.0f);
        std::vector<int> tokens = random_prefix(rng, abc.size(), 12);
        Tensor base = decoder_forward(tokens, encoded, p);

        size_t t = rng.next_below(tokens.size());
        std::vector<int> altered = tokens;
        altered[t] = (altered[t] + 1) % abc.size();
        Tensor poked = decoder_forward(altered, encoded, p);

        // Rows 0..t predict tokens[0..t] from strictly earlier context.
        for (size_t row = 0; row <= t; ++row)
            for (int64_t j = 0; j < base.dim(1); ++j)
                CHECK(base.at(static_cast<int64_t>(row), j) ==
                      poked.at(static_cast<int64_t>(row), j));
    }
}

TEST_CASE("teacher-forced rows equal one-step recomputation") {
    Rng rng(13);
    Alphabet ab = Alphabet::from_utf8("ab");
    TfmrDecoderParams p = TfmrDecoderParams::random(rng, ab);
    Tensor encoded = rng.uniform({3, 256}, -1.0f, 1.0f);
    std::vector<int> tokens = {0, 1, 1, 0};
    Tensor all = decoder_forward(tokens, encoded, p);
    for (size_t i = 0; i <= tokens.size(); ++i) {
        std::vector<int> prefix(tokens.begin(), tokens.begin() + static_cast<long>(i));
        Tensor step = decoder_step(prefix, encoded, p);
        for (int64_t j = 0; j < all.dim(1); ++j)
            CHECK(step.at(0, j) == all.at(static_cast<int64_t>(i), j));
    }
}

TEST_CASE("single encoded frame pins cross-attention to one") {
    Rng rng(17);
    Alphabet ab = Alphabet::from_utf8("ab");
    TfmrDecoderParams p = TfmrDecoderParams::random(rng, ab);
    Tensor encoded = rng.uniform({1, 256}, -1.0f, 1.0f);
    CrossAttnTrace trace;
    decoder_step({0, 1}, encoded, p, &trace);
    REQUIRE(trace.rows.size() == 8 * 3);  // 8 layers x 3 positions
    for (const Tensor& row : trace.rows) {
        REQUIRE(row.size() == 1);
        CHECK(row.at(0) == 1.0f);
    }
}

TEST_CASE("cross-attention rows always sum to one") {
    Rng rng(19);
    Alphabet ab = Alphabet::from_utf8("ab");
    TfmrDecoderParams p = TfmrDecoderParams::random(rng, ab);
    Tensor encoded = rng.uniform({9, 256}, -2.0f, 2.0f);
    CrossAttnTrace trace;
    decoder_forward({0, 1, 0}, encoded, p, &trace);
    for (const Tensor& row : trace.rows) {
        float sum = 0.0f;
        for (int64_t j = 0; j < row.size(); ++j) sum += row.at(j);
        CHECK(std::fabs(sum - 1.0f) < 1e-6f);
    }
}

TEST_CASE("zero weights with an EOS-leaning bias generate the empty string") {
    Alphabet ab = Alphabet::from_utf8("ab");
    TfmrDecoderParams p;
    p.alphabet = ab;
    p.embed = Tensor({4, 256});
    for (int i = 0; i < TfmrDecoderParams::kLayers; ++i) {
        TfmrLayerParams l;
        l.ln1 = Tensor({2, 256});
        l.ln2 = Tensor({2, 256});
        l.ln3 = Tensor({2, 256});
        l.wq = Tensor({256, 256});
        l.wk = Tensor({256, 256});
        l.wv = Tensor({256, 256});
        l.wo = Tensor({256, 256});
        l.cq = Tensor({256, 256});
        l.ck = Tensor({256, 256});
        l.cv = Tensor({256, 256});
        l.co = Tensor({256, 256});
        l.ffn1 = Tensor({256, 1024});
        l.ffn2 = Tensor({1024, 256});
        p.layers.push_back(std::move(l));
    }
    p.ln_final = Tensor({2, 256});
    p.out_w = Tensor({256, 4});
    p.out_b = Tensor({4});
    p.out_b.at(p.eos_id()) = 5.0f;

    Rng rng(23);
    Tensor encoded = rng.uniform({4, 256}, -1.0f, 1.0f);
    GenerationConfig g;
    CHECK(greedy_generate(encoded, p, g) == "");

    // Leaning on a real character instead must hit the output cap.
    p.out_b.at(p.eos_id()) = 0.0f;
    p.out_b.at(0) = 5.0f;
    g.max_output_len = 7;
    CHECK(greedy_generate(encoded, p, g) == "aaaaaaa");
}

TEST_CASE("generation is deterministic and respects the cap") {
    Rng rng(29);
    Alphabet ab = Alphabet::from_utf8("abc");
    TfmrDecoderParams p = TfmrDecoderParams::random(rng, ab);
    Tensor encoded = rng.uniform({6, 256}, -1.0f, 1.0f);
    GenerationConfig g;
    g.max_output_len = 11;
    std::string a = greedy_generate(encoded, p, g);
    std::string b = greedy_generate(encoded, p, g);
    CHECK(a == b);
    CHECK(a.size() <= 11);
}

TEST_CASE("position overflow raises a capacity error") {
    Rng rng(31);
    Alphabet ab = Alphabet::from_utf8("ab");
    TfmrDecoderParams p = TfmrDecoderParams::random(rng, ab);
    p.max_positions = 4;
    Tensor encoded = rng.uniform({2, 256}, -1.0f, 1.0f);
    std::vector<int> ok(4, 0);
    CHECK(decoder_step(ok, encoded, p).size() == 4);
    std::vector<int> over(5, 0);
    CHECK_THROWS_AS(decoder_step(over, encoded, p), CapacityError);
}
