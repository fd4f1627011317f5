#include <catch2/catch_amalgamated.hpp>

#include "oretrack/core/rng.hpp"
#include "oretrack/core/size_distribution.hpp"

using namespace oretrack;

TEST_CASE("log bins are geometrically spaced", "[psd]") {
    const auto bins = make_log_bins(0.001, 1.0, 16);
    REQUIRE(bins->edges.size() == 17);
    REQUIRE(bins->rep.size() == 16);
    const double ratio = std::pow(1000.0, 1.0 / 16.0);
    CHECK(ratio == Catch::Approx(1.539927).epsilon(1e-5));
    for (std::size_t k = 0; k + 1 < bins->edges.size(); ++k) {
        CHECK(bins->edges[k + 1] / bins->edges[k] == Catch::Approx(ratio).epsilon(1e-12));
        CHECK(bins->rep[k] ==
              Catch::Approx(std::sqrt(bins->edges[k] * bins->edges[k + 1])).epsilon(1e-12));
        CHECK(bins->rep[k] > bins->edges[k]);
        CHECK(bins->rep[k] < bins->edges[k + 1]);
    }
    CHECK(bins->edges.front() == 0.001);
    CHECK(bins->edges.back() == 1.0);
}

TEST_CASE("log bins with ratio 2 are exact", "[psd]") {
    const auto bins = make_log_bins(0.01, 0.16, 4);
    const double expect[] = {0.01, 0.02, 0.04, 0.08, 0.16};
    for (std::size_t k = 0; k < 5; ++k)
        CHECK(bins->edges[k] == Catch::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("degenerate bin ranges are rejected", "[psd]") {
    CHECK_THROWS_AS(make_log_bins(1.0, 1.0, 16), invalid_argument);
    CHECK_THROWS_AS(make_log_bins(-0.1, 1.0, 16), invalid_argument);
    CHECK_THROWS_AS(make_log_bins(0.0, 1.0, 16), invalid_argument);
    CHECK_THROWS_AS(make_log_bins(0.1, 1.0, 1), invalid_argument);
}

TEST_CASE("cumulative passing endpoints", "[psd]") {
    const auto bins = make_log_bins(1e-5, 1.0, 16);
    SizeDistribution psd(bins);

    SECTION("all mass in the first class") {
        psd.fractions()[0] = 1.0;
        const auto p = cumulative_passing(psd);
        for (double v : p) CHECK(v == Catch::Approx(1.0));
    }
    SECTION("all mass in the last class") {
        psd.fractions()[15] = 1.0;
        const auto p = cumulative_passing(psd);
        for (std::size_t k = 0; k < 15; ++k) CHECK(p[k] == Catch::Approx(0.0));
        CHECK(p[15] == Catch::Approx(1.0));
    }
    SECTION("uniform fractions accumulate linearly") {
        for (auto& f : psd.fractions()) f = 1.0 / 16.0;
        const auto p = cumulative_passing(psd);
        for (std::size_t k = 0; k < 16; ++k)
            CHECK(p[k] == Catch::Approx((k + 1) / 16.0).epsilon(1e-12));
    }
    SECTION("unnormalized input is rejected") {
        psd.fractions()[0] = 0.5;
        CHECK_THROWS_AS(cumulative_passing(psd), invalid_state);
    }
}

TEST_CASE("cumulative passing is non-decreasing on random psds", "[psd]") {
    const auto bins = make_log_bins(1e-5, 1.0, 16);
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        SizeDistribution psd(bins);
        for (auto& f : psd.fractions()) f = rng.uniform01();
        psd.normalize();
        const auto p = cumulative_passing(psd);
        for (std::size_t k = 1; k < p.size(); ++k) CHECK(p[k] >= p[k - 1]);
        CHECK(p.back() == Catch::Approx(1.0));
    }
}

TEST_CASE("d_value interpolates in log diameter", "[psd]") {
    const auto bins = make_log_bins(1e-5, 1.0, 16);

    SECTION("single occupied class") {
        SizeDistribution psd(bins);
        psd.fractions()[7] = 1.0;
        const double a = bins->edges[7], b = bins->edges[8];
        CHECK(d_value(psd, 0.8) == Catch::Approx(a * std::pow(b / a, 0.8)).epsilon(1e-12));
        CHECK(d_value(psd, 0.5) == Catch::Approx(std::sqrt(a * b)).epsilon(1e-12));
    }
    SECTION("uniform psd hits the lattice point exactly") {
        SizeDistribution psd(bins);
        for (auto& f : psd.fractions()) f = 1.0 / 16.0;
        CHECK(d_value(psd, 8.0 / 16.0) == Catch::Approx(bins->edges[8]).epsilon(1e-9));
    }
    SECTION("clamped at the top") {
        SizeDistribution psd(bins);
        psd.fractions()[15] = 1.0;
        CHECK(d_value(psd, 0.999999) <= bins->d_max() * (1.0 + 1e-12));
    }
    SECTION("F outside (0,1) rejected") {
        SizeDistribution psd(bins);
        psd.fractions()[0] = 1.0;
        CHECK_THROWS_AS(d_value(psd, 0.0), invalid_argument);
        CHECK_THROWS_AS(d_value(psd, 1.0), invalid_argument);
        CHECK_THROWS_AS(d_value(psd, -0.5), invalid_argument);
    }
    SECTION("monotone non-decreasing in F") {
        Rng rng(11);
        SizeDistribution psd(bins);
        for (auto& f : psd.fractions()) f = rng.uniform01();
        psd.normalize();
        double prev = 0.0;
        for (double F = 0.02; F < 1.0; F += 0.02) {
            const double d = d_value(psd, F);
            CHECK(d >= prev);
            prev = d;
        }
    }
}

TEST_CASE("mean diameter is the rep/fraction dot product", "[psd]") {
    SECTION("all mass in one class gives its representative diameter") {
        const auto bins = make_log_bins(1e-5, 1.0, 16);
        SizeDistribution psd(bins);
        psd.fractions()[4] = 1.0;
        CHECK(mean_diameter(psd) == Catch::Approx(bins->rep[4]).epsilon(1e-12));
    }
    SECTION("two-class arithmetic") {
        // Edges picked so the representative diameters are exactly 0.1, 0.3.
        Binning b;
        b.edges = {0.05, 0.2, 0.45};
        b.rep = {std::sqrt(0.05 * 0.2), std::sqrt(0.2 * 0.45)};
        REQUIRE(b.rep[0] == Catch::Approx(0.1).epsilon(1e-12));
        REQUIRE(b.rep[1] == Catch::Approx(0.3).epsilon(1e-12));
        SizeDistribution psd(std::make_shared<const Binning>(b), {0.5, 0.5});
        CHECK(mean_diameter(psd) == Catch::Approx(0.2).epsilon(1e-12));
    }
    SECTION("uniform psd gives the arithmetic mean of rep diameters") {
        const auto bins = make_log_bins(1e-5, 1.0, 16);
        SizeDistribution psd(bins);
        for (auto& f : psd.fractions()) f = 1.0 / 16.0;
        double mean = 0.0;
        for (double r : bins->rep) mean += r / 16.0;
        CHECK(mean_diameter(psd) == Catch::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("rosin-rammler blast psd is normalized with sensible oversize", "[psd]") {
    const auto bins = make_log_bins(1e-5, 1.0, 16);
    const auto psd = rosin_rammler(bins, 0.30, 0.8);
    CHECK(psd.normalized());
    double oversize = 0.0;
    for (std::size_t k = 0; k < 16; ++k)
        if (bins->rep[k] >= 0.25) oversize += psd.fraction(k);
    CHECK(oversize > 0.2);
    CHECK(oversize < 0.7);
}

TEST_CASE("default binning puts 1 mm at class index 7 (1-based)", "[psd]") {
    const auto bins = make_log_bins(1e-5, 1.0, 16);
    CHECK(bins->class_of(1.0e-3) == 6);  // 0-based
    CHECK(bins->rep[6] == Catch::Approx(1.0746e-3).epsilon(1e-3));
}
