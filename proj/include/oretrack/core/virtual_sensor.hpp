#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "oretrack/core/particle.hpp"

namespace oretrack {

// Instantaneous mass-weighted scalar over a particle set. Empty set (or zero
// mass) is a no-data condition, reported as nullopt so the caller can decide
// between holding the last value and emitting a gap.
template <typename Iter, typename Accessor>
std::optional<double> mass_weighted_scalar(Iter first, Iter last, Accessor&& attr) {
    double num = 0.0, den = 0.0;
    std::size_t count = 0;
    double single = 0.0;
    for (auto it = first; it != last; ++it) {
        const PseudoParticle& p = **it;
        single = attr(p);
        num += p.mass * single;
        den += p.mass;
        ++count;
    }
    if (den <= 0.0) return std::nullopt;
    if (count == 1) return single;  // exact, no mass round trip
    return num / den;
}

// Mass-weighted average size distribution, renormalized.
template <typename Iter>
std::optional<SizeDistribution> mass_weighted_psd(Iter first, Iter last) {
    double den = 0.0;
    std::vector<double> num;
    BinningPtr bins;
    for (auto it = first; it != last; ++it) {
        const PseudoParticle& p = **it;
        if (!bins) {
            bins = p.psd.bins_ptr();
            num.assign(bins->classes(), 0.0);
        }
        for (std::size_t k = 0; k < num.size(); ++k) num[k] += p.mass * p.psd.fraction(k);
        den += p.mass;
    }
    if (den <= 0.0) return std::nullopt;
    SizeDistribution out(bins, std::move(num));
    out.normalize();
    return out;
}

// Time-stamped moving average. Samples older than the window are evicted on
// push; value() is the plain mean of the retained samples. Single writer.
class MovingAverage {
  public:
    explicit MovingAverage(double window_s) : window_(window_s) {}

    void push(double t, double v) {
        samples_.push_back({t, v});
        sum_ += v;
        evict(t);
    }

    std::optional<double> value() const {
        if (samples_.empty()) return std::nullopt;
        return sum_ / static_cast<double>(samples_.size());
    }

    double window() const { return window_; }
    std::size_t size() const { return samples_.size(); }

  private:
    void evict(double now) {
        while (!samples_.empty() && samples_.front().t < now - window_) {
            sum_ -= samples_.front().v;
            samples_.pop_front();
        }
    }

    struct Sample {
        double t;
        double v;
    };
    double window_;
    double sum_ = 0.0;
    std::deque<Sample> samples_;
};

// Vector-valued variant used for windowed size distributions.
class MovingAverageVec {
  public:
    explicit MovingAverageVec(double window_s) : window_(window_s) {}

    void push(double t, const std::vector<double>& v) {
        if (sum_.empty()) sum_.assign(v.size(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) sum_[i] += v[i];
        samples_.push_back({t, v});
        while (!samples_.empty() && samples_.front().t < now_front_cutoff(t)) {
            for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] -= samples_.front().v[i];
            samples_.pop_front();
        }
    }

    std::optional<std::vector<double>> value() const {
        if (samples_.empty()) return std::nullopt;
        std::vector<double> out(sum_);
        for (double& v : out) v /= static_cast<double>(samples_.size());
        return out;
    }

  private:
    double now_front_cutoff(double now) const { return now - window_; }

    struct Sample {
        double t;
        std::vector<double> v;
    };
    double window_;
    std::vector<double> sum_;
    std::deque<Sample> samples_;
};

// The full virtual-sensor pipeline: instantaneous mass-weighted attribute
// pushed into the moving average, returning the windowed value. With neither
// fresh data nor history this is a no-data signal.
template <typename Iter, typename Accessor>
std::optional<double> mass_weighted_attribute(Iter first, Iter last, Accessor&& attr,
                                              double t, MovingAverage& history) {
    if (auto inst = mass_weighted_scalar(first, last, attr)) history.push(t, *inst);
    return history.value();
}

}  // namespace oretrack
