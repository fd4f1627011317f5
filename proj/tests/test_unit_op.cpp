#include <catch2/catch_amalgamated.hpp>

#include "oretrack/assets/crusher.hpp"
#include "oretrack/core/rng.hpp"
#include "oretrack/core/unit_op.hpp"

using namespace oretrack;

TEST_CASE("empty op list is the identity", "[unitop]") {
    PseudoParticle p;
    p.id = 1;
    p.mass = 100.0;
    p.position = {3.0, 4.0};
    const auto q = compose_unit_ops({}, p);
    CHECK(q.position.x == p.position.x);
    CHECK(q.mass == p.mass);
}

TEST_CASE("two translations add", "[unitop]") {
    PseudoParticle p;
    p.id = 1;
    p.mass = 100.0;
    std::vector<UnitOp> ops;
    ops.push_back(make_translation_op("a", 0.0, 1.0, {1.0, 2.0}));
    ops.push_back(make_translation_op("a", 1.0, 1.0, {0.5, -1.0}));
    const auto q = compose_unit_ops(ops, p);
    CHECK(q.position.x == Catch::Approx(1.5));
    CHECK(q.position.y == Catch::Approx(1.0));
}

TEST_CASE("gaps and overlaps are rejected", "[unitop]") {
    PseudoParticle p;
    p.id = 1;
    p.mass = 1.0;
    std::vector<UnitOp> gap = {make_translation_op("a", 0.0, 1.0, {1, 0}),
                               make_translation_op("a", 2.5, 1.0, {1, 0})};
    CHECK_THROWS_AS(compose_unit_ops(gap, p), invalid_sequence);
    std::vector<UnitOp> overlap = {make_translation_op("a", 0.0, 1.0, {1, 0}),
                                   make_translation_op("a", 0.5, 1.0, {1, 0})};
    CHECK_THROWS_AS(compose_unit_ops(overlap, p), invalid_sequence);
}

TEST_CASE("fragment then move equals the inlined two-call sequence", "[unitop]") {
    const auto bins = make_log_bins(1e-5, 1.0, 16);
    PseudoParticle p;
    p.id = 7;
    p.mass = 120.0;
    p.psd = rosin_rammler(bins, 0.3, 0.8);

    // Oracle: direct calls.
    PseudoParticle direct = p;
    apply_crush(direct.psd, 0.25);
    direct.position += Vec2{2.0, 0.0};

    std::vector<UnitOp> ops;
    ops.push_back(UnitOp{"crusher", UnitOpKind::fragment, 0.0, 1.0, [](PseudoParticle x) {
                             apply_crush(x.psd, 0.25);
                             return x;
                         }});
    ops.push_back(make_translation_op("belt", 1.0, 1.0, {2.0, 0.0}));
    const auto composed = compose_unit_ops(ops, p);

    CHECK(composed.position.x == Catch::Approx(direct.position.x));
    for (std::size_t k = 0; k < 16; ++k)
        CHECK(composed.psd.fraction(k) == Catch::Approx(direct.psd.fraction(k)).margin(1e-15));
}

TEST_CASE("composition is associative on random op sequences", "[unitop]") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        PseudoParticle p;
        p.id = trial;
        p.mass = 50.0;
        p.position = {rng.uniform(-10, 10), rng.uniform(-10, 10)};
        const int n = 2 + static_cast<int>(rng.below(5));
        std::vector<UnitOp> ops;
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            ops.push_back(make_translation_op("a", t, 1.0,
                                              {rng.uniform(-1, 1), rng.uniform(-1, 1)}));
            t += 1.0;
        }
        const std::size_t split = 1 + rng.below(n - 1);
        const auto whole = compose_unit_ops(ops, p);
        const auto first = compose_unit_ops(std::span(ops).first(split), p);
        const auto then = compose_unit_ops(std::span(ops).subspan(split), first);
        CHECK(whole.position.x == Catch::Approx(then.position.x).margin(1e-12));
        CHECK(whole.position.y == Catch::Approx(then.position.y).margin(1e-12));
    }
}

TEST_CASE("move ops preserve mass and psd, fragment ops preserve mass", "[unitop]") {
    const auto bins = make_log_bins(1e-5, 1.0, 16);
    PseudoParticle p;
    p.id = 1;
    p.mass = 88.0;
    p.psd = rosin_rammler(bins, 0.3, 0.8);
    const auto moved = make_translation_op("a", 0, 1, {1, 1}).effect(p);
    CHECK(moved.mass == p.mass);
    for (std::size_t k = 0; k < 16; ++k) CHECK(moved.psd.fraction(k) == p.psd.fraction(k));

    PseudoParticle frag = p;
    apply_crush(frag.psd, 0.25);
    CHECK(frag.mass == p.mass);
    CHECK(frag.position.x == p.position.x);
}
