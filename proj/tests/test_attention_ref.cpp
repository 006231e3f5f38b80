#include "cvmask/attention_ref.hpp"
#include "cvmask/error.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace cvmask;

namespace {

// Two blocks: tokens [0, split) and [split, n).
AttentionMask two_blocks(std::size_t n, std::size_t split) {
    std::vector<std::vector<std::uint32_t>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i < split;
        for (std::size_t j = 0; j < n; ++j) {
            if ((j < split) == left) rows[i].push_back(static_cast<std::uint32_t>(j));
        }
    }
    return AttentionMask::from_rows(rows);
}

}  // namespace

TEST_CASE("strategy schedule") {
    CHECK(strategy_schedule(4, LayerStrategy::All) == std::vector<bool>{true, true, true, true});
    CHECK(strategy_schedule(4, LayerStrategy::Alternate) == std::vector<bool>{true, false, true, false});
    CHECK(strategy_schedule(1, LayerStrategy::Alternate) == std::vector<bool>{true});
    CHECK_THROWS_AS(strategy_schedule(0, LayerStrategy::All), Error);
}

TEST_CASE("config validation") {
    ToyEncoderConfig c;
    c.layers = 0;
    CHECK_THROWS_AS(ToyEncoder{c}, Error);
    c.layers = 1;
    c.model_dim = 1;
    CHECK_THROWS_AS(ToyEncoder{c}, Error);
}

TEST_CASE("dimension mismatch") {
    const ToyEncoder enc(ToyEncoderConfig{});
    const Eigen::MatrixXd x = random_inputs(4, 8, 1);
    try {
        (void)enc.forward(x, AttentionMask::all_ones(5));
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
    CHECK_THROWS_AS((void)enc.forward(random_inputs(4, 6, 1)), Error);
}

TEST_CASE("masked positions vanish and rows stay normalized") {
    ToyEncoderConfig c;
    c.layers = 3;
    const ToyEncoder enc(c);
    const auto mask = two_blocks(7, 3);
    const auto r = enc.forward(random_inputs(7, 8, 9), mask);
    REQUIRE(r.trace.attention.size() == 3);
    for (const auto& a : r.trace.attention) {
        for (Eigen::Index i = 0; i < 7; ++i) {
            CHECK(std::abs(a.row(i).sum() - 1.0) < 1e-9);
            for (Eigen::Index j = 0; j < 7; ++j) {
                if (!mask.allowed(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) CHECK(a(i, j) < 1e-12);
            }
        }
    }
}

TEST_CASE("alternate: layer 0 masked, layer 1 free") {
    ToyEncoderConfig c;
    c.layer_strategy = LayerStrategy::Alternate;
    const ToyEncoder enc(c);
    const auto mask = two_blocks(6, 2);
    const auto r = enc.forward(random_inputs(6, 8, 4), mask);
    CHECK(r.trace.mask_applied == std::vector<bool>{true, false});
    double leak = 0.0;
    for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index j = 0; j < 6; ++j) {
            if (mask.allowed(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) continue;
            CHECK(r.trace.attention[0](i, j) < 1e-12);
            leak = std::max(leak, r.trace.attention[1](i, j));
        }
    }
    CHECK(leak > 1e-3);
}

TEST_CASE("all-ones mask is neutral") {
    const ToyEncoder enc(ToyEncoderConfig{});
    const Eigen::MatrixXd x = random_inputs(5, 8, 3);
    const auto free = enc.forward(x);
    const auto ones = enc.forward(x, AttentionMask::all_ones(5));
    CHECK(free.outputs == ones.outputs);
    CHECK((enc.input_gradient(x) - enc.input_gradient(x, AttentionMask::all_ones(5))).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("block isolation") {
    ToyEncoderConfig c;
    c.layers = 4;
    const ToyEncoder enc(c);
    const auto mask = two_blocks(8, 3);
    Eigen::MatrixXd x = random_inputs(8, 8, 5);
    const auto base = enc.forward(x, mask).outputs;
    x.bottomRows(5) = random_inputs(5, 8, 99) * 10.0;
    const auto moved = enc.forward(x, mask).outputs;
    CHECK((base.topRows(3) - moved.topRows(3)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((base.bottomRows(5) - moved.bottomRows(5)).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("gradient check") {
    for (auto strategy : {LayerStrategy::All, LayerStrategy::Alternate}) {
        ToyEncoderConfig c;
        c.layers = 3;
        c.layer_strategy = strategy;
        CHECK(grad_check(random_inputs(6, 8, 21), two_blocks(6, 4), c) < 1e-4);
        CHECK(grad_check(random_inputs(5, 8, 22), AttentionMask::all_ones(5), c) < 1e-4);
    }
    CHECK(grad_check(random_inputs(1, 8, 23), AttentionMask::all_ones(1), ToyEncoderConfig{}) < 1e-10);

    ToyEncoderConfig literal;
    literal.literal_hadamard = true;
    CHECK(grad_check(random_inputs(6, 8, 24), two_blocks(6, 2), literal) < 1e-4);
}

TEST_CASE("literal hadamard rows do not sum to one") {
    ToyEncoderConfig c;
    c.literal_hadamard = true;
    const auto r = ToyEncoder(c).forward(random_inputs(6, 8, 8), two_blocks(6, 3));
    CHECK(r.trace.attention[0].row(0).sum() < 1.0 - 1e-6);
}

TEST_CASE("determinism and trace json") {
    ToyEncoderConfig c;
    const auto a = ToyEncoder(c).forward(random_inputs(4, 8, 1), two_blocks(4, 2));
    const auto b = ToyEncoder(c).forward(random_inputs(4, 8, 1), two_blocks(4, 2));
    CHECK(a.outputs == b.outputs);
    const auto doc = nlohmann::json::parse(trace_to_json_string(a.trace, c));
    CHECK(doc["layers"].size() == 2);
    CHECK(doc["layers"][0]["attention"].size() == 4);
    CHECK(doc["strategy"] == "all");
}
