#include <catch2/catch_amalgamated.hpp>

#include "oretrack/core/rng.hpp"
#include "oretrack/core/virtual_sensor.hpp"

using namespace oretrack;

namespace {

PseudoParticle particle(ParticleId id, double mass, double hardness) {
    PseudoParticle p;
    p.id = id;
    p.mass = mass;
    p.spawn_mass = mass;
    p.hardness = hardness;
    return p;
}

}  // namespace

TEST_CASE("mass-weighted scalar", "[sensor]") {
    auto h = [](const PseudoParticle& p) { return p.hardness; };

    SECTION("constant field is returned exactly for any masses") {
        const auto a = particle(1, 17.0, 1.4), b = particle(2, 123.0, 1.4);
        const PseudoParticle* set[] = {&a, &b};
        CHECK(*mass_weighted_scalar(std::begin(set), std::end(set), h) ==
              Catch::Approx(1.4).epsilon(1e-12));
    }
    SECTION("weighted mean of masses 1 and 3") {
        const auto a = particle(1, 1.0, 2.0), b = particle(2, 3.0, 1.0);
        const PseudoParticle* set[] = {&a, &b};
        CHECK(*mass_weighted_scalar(std::begin(set), std::end(set), h) ==
              Catch::Approx(1.25).epsilon(1e-12));
    }
    SECTION("empty set signals no data") {
        std::vector<const PseudoParticle*> none;
        CHECK(!mass_weighted_scalar(none.begin(), none.end(), h).has_value());
    }
}

TEST_CASE("mass-weighted psd average", "[sensor]") {
    const auto bins = make_log_bins(1e-5, 1.0, 16);
    auto a = particle(1, 50.0, 1.0);
    auto b = particle(2, 50.0, 1.0);
    a.psd = SizeDistribution(bins);
    b.psd = SizeDistribution(bins);
    a.psd.fractions()[2] = 1.0;
    b.psd.fractions()[4] = 1.0;
    const PseudoParticle* set[] = {&a, &b};
    const auto avg = mass_weighted_psd(std::begin(set), std::end(set));
    REQUIRE(avg.has_value());
    CHECK(avg->fraction(2) == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(avg->fraction(4) == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(avg->normalized());
}

TEST_CASE("moving average window semantics", "[sensor]") {
    MovingAverage ma(30.0);
    CHECK(!ma.value().has_value());

    SECTION("single sample returns exactly that sample") {
        ma.push(0.0, 1.75);
        CHECK(*ma.value() == Catch::Approx(1.75).epsilon(1e-12));
    }
    SECTION("samples older than the window are evicted") {
        ma.push(0.0, 100.0);
        ma.push(10.0, 1.0);
        ma.push(35.0, 3.0);  // sample at t=0 now stale, t=10 still inside
        CHECK(*ma.value() == Catch::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("virtual sensor pipeline holds history through gaps", "[sensor]") {
    MovingAverage ma(30.0);
    auto h = [](const PseudoParticle& p) { return p.hardness; };
    const auto a = particle(1, 10.0, 2.0);
    const PseudoParticle* one[] = {&a};
    std::vector<const PseudoParticle*> none;

    const auto v1 = mass_weighted_attribute(std::begin(one), std::end(one), h, 0.0, ma);
    REQUIRE(v1.has_value());
    CHECK(*v1 == Catch::Approx(2.0));
    // Gap: no particles, but the window still has the old sample.
    const auto v2 = mass_weighted_attribute(none.begin(), none.end(), h, 5.0, ma);
    REQUIRE(v2.has_value());
    CHECK(*v2 == Catch::Approx(2.0));
}

TEST_CASE("no data and no history is a gap", "[sensor]") {
    MovingAverage ma(30.0);
    std::vector<const PseudoParticle*> none;
    auto h = [](const PseudoParticle& p) { return p.hardness; };
    CHECK(!mass_weighted_attribute(none.begin(), none.end(), h, 0.0, ma).has_value());
}

TEST_CASE("single particle sensor returns its attribute exactly", "[sensor]") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        MovingAverage ma(1e-9);  // window of one sample
        const auto p = particle(1, rng.uniform(12.0, 160.0), rng.uniform(0.5, 3.0));
        const PseudoParticle* one[] = {&p};
        auto h = [](const PseudoParticle& q) { return q.hardness; };
        const auto v = mass_weighted_attribute(std::begin(one), std::end(one), h, trial, ma);
        REQUIRE(v.has_value());
        CHECK(*v == p.hardness);
    }
}
