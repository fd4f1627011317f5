#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "oretrack/core/errors.hpp"

namespace oretrack {

inline constexpr double kPsdNormTol = 1e-9;

// Log-spaced size classes shared by every distribution built from the same
// template. Representative diameters are the geometric mean of the class
// edges, consistent with the logarithmic binning.
struct Binning {
    std::vector<double> edges;  // n+1 strictly increasing diameters (m)
    std::vector<double> rep;    // n per-class representative diameters (m)

    std::size_t classes() const { return rep.size(); }
    double d_min() const { return edges.front(); }
    double d_max() const { return edges.back(); }

    // Class index (0-based) whose span contains d; clamps to the end classes.
    std::size_t class_of(double d) const {
        if (d <= edges.front()) return 0;
        if (d >= edges.back()) return classes() - 1;
        auto it = std::upper_bound(edges.begin(), edges.end(), d);
        return static_cast<std::size_t>(it - edges.begin()) - 1;
    }
};

using BinningPtr = std::shared_ptr<const Binning>;

inline BinningPtr make_log_bins(double d_min, double d_max, std::size_t n) {
    if (!(d_min > 0.0) || !(d_max > d_min))
        throw invalid_argument("make_log_bins: need 0 < d_min < d_max");
    if (n < 2) throw invalid_argument("make_log_bins: need at least 2 classes");
    Binning b;
    b.edges.resize(n + 1);
    b.rep.resize(n);
    const double step = (std::log(d_max) - std::log(d_min)) / static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k)
        b.edges[k] = std::exp(std::log(d_min) + step * static_cast<double>(k));
    b.edges.front() = d_min;  // exact ends
    b.edges.back() = d_max;
    for (std::size_t k = 0; k < n; ++k) b.rep[k] = std::sqrt(b.edges[k] * b.edges[k + 1]);
    return std::make_shared<const Binning>(std::move(b));
}

// Mass-fraction size distribution over a shared binning. f[k] is the mass
// share in span [edges[k], edges[k+1]).
class SizeDistribution {
  public:
    SizeDistribution() = default;
    explicit SizeDistribution(BinningPtr bins)
        : bins_(std::move(bins)), f_(bins_->classes(), 0.0) {}
    SizeDistribution(BinningPtr bins, std::vector<double> fractions)
        : bins_(std::move(bins)), f_(std::move(fractions)) {
        if (f_.size() != bins_->classes())
            throw invalid_argument("SizeDistribution: fraction count != class count");
    }

    const Binning& bins() const { return *bins_; }
    const BinningPtr& bins_ptr() const { return bins_; }
    std::size_t classes() const { return f_.size(); }

    double fraction(std::size_t k) const { return f_[k]; }
    const std::vector<double>& fractions() const { return f_; }
    std::vector<double>& fractions() { return f_; }

    double sum() const { return std::accumulate(f_.begin(), f_.end(), 0.0); }
    bool normalized(double tol = kPsdNormTol) const { return std::abs(sum() - 1.0) <= tol; }

    void require_normalized(const char* who) const {
        if (!normalized())
            throw invalid_state(std::string(who) + ": size distribution is not normalized");
        for (double v : f_)
            if (v < 0.0) throw invalid_state(std::string(who) + ": negative mass fraction");
    }

    void normalize() {
        const double s = sum();
        if (s <= 0.0) throw invalid_state("normalize: zero total fraction");
        for (double& v : f_) v /= s;
    }

  private:
    BinningPtr bins_;
    std::vector<double> f_;
};

// Cumulative passing P^k = sum of fractions up to and including class k.
// The retained-from-above convention is the complement shifted one class:
// retained^k = 1 - P^{k-1}.
inline std::vector<double> cumulative_passing(const SizeDistribution& psd) {
    psd.require_normalized("cumulative_passing");
    std::vector<double> p(psd.classes());
    double acc = 0.0;
    for (std::size_t k = 0; k < psd.classes(); ++k) {
        acc += psd.fraction(k);
        p[k] = std::min(acc, 1.0);
    }
    p.back() = 1.0;
    return p;
}

// Diameter at cumulative passing F, interpolated linearly in log diameter
// inside the bracketing class; clamped to the binning range.
inline double d_value(const SizeDistribution& psd, double F) {
    if (!(F > 0.0) || !(F < 1.0)) throw invalid_argument("d_value: F must lie in (0,1)");
    psd.require_normalized("d_value");
    const auto& b = psd.bins();
    double below = 0.0;
    for (std::size_t k = 0; k < psd.classes(); ++k) {
        const double above = below + psd.fraction(k);
        if (F <= above + 1e-15) {
            if (psd.fraction(k) <= 0.0) return b.edges[k + 1];
            const double u = std::clamp((F - below) / psd.fraction(k), 0.0, 1.0);
            return b.edges[k] * std::pow(b.edges[k + 1] / b.edges[k], u);
        }
        below = above;
    }
    return b.d_max();
}

inline double mean_diameter(const SizeDistribution& psd) {
    psd.require_normalized("mean_diameter");
    double m = 0.0;
    for (std::size_t k = 0; k < psd.classes(); ++k) m += psd.bins().rep[k] * psd.fraction(k);
    return m;
}

// Bins a cumulative passing curve P(d) into class fractions; the tails
// outside [d_min, d_max] are folded into the end classes.
template <typename CumulativeFn>
SizeDistribution bin_cumulative(const BinningPtr& bins, CumulativeFn&& passing) {
    SizeDistribution psd(bins);
    const auto& e = bins->edges;
    double prev = 0.0;  // everything below d_min goes to class 0
    for (std::size_t k = 0; k + 1 < e.size(); ++k) {
        const double cur = (k + 2 == e.size()) ? 1.0 : std::clamp(passing(e[k + 1]), 0.0, 1.0);
        psd.fractions()[k] = std::max(cur - prev, 0.0);
        prev = cur;
    }
    psd.normalize();
    return psd;
}

// Rosin-Rammler cumulative passing; the stock parametrization for blasted
// muck piles.
inline SizeDistribution rosin_rammler(const BinningPtr& bins, double d63, double n) {
    if (!(d63 > 0.0) || !(n > 0.0)) throw invalid_argument("rosin_rammler: bad parameters");
    return bin_cumulative(bins,
                          [&](double d) { return 1.0 - std::exp(-std::pow(d / d63, n)); });
}

}  // namespace oretrack
