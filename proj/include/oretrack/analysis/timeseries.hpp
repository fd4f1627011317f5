#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "oretrack/core/errors.hpp"

namespace oretrack {

struct TimeSeries {
    std::vector<double> t;
    std::vector<double> v;

    void push(double time, double value) {
        if (!t.empty() && time <= t.back())
            throw invalid_argument("TimeSeries: timestamps must be strictly increasing");
        t.push_back(time);
        v.push_back(value);
    }

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }

    // Mean of the values with t in [t0, t1].
    std::optional<double> mean(double t0, double t1) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] < t0 || t[i] > t1) continue;
            sum += v[i];
            ++n;
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

// Trailing moving average with time window w: sample i becomes the mean of
// all samples within (t_i - w, t_i].
inline TimeSeries moving_average(const TimeSeries& s, double window) {
    TimeSeries out;
    double sum = 0.0;
    std::size_t lo = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        sum += s.v[i];
        while (s.t[lo] <= s.t[i] - window) {
            sum -= s.v[lo];
            ++lo;
        }
        out.push(s.t[i], sum / static_cast<double>(i - lo + 1));
    }
    return out;
}

// Lag of the first local autocorrelation maximum, in seconds. The series is
// resampled to a uniform grid (hold-last) and mean-removed first.
inline std::optional<double> autocorrelation_period(const TimeSeries& s, double min_lag,
                                                    double max_lag) {
    if (s.size() < 8) return std::nullopt;
    const double span = s.t.back() - s.t.front();
    if (span <= 0.0) return std::nullopt;
    const double grid = std::max(span / 4096.0, 1e-3);
    const std::size_t n = static_cast<std::size_t>(span / grid) + 1;
    std::vector<double> u(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = s.t.front() + static_cast<double>(i) * grid;
        while (j + 1 < s.size() && s.t[j + 1] <= ti) ++j;
        u[i] = s.v[j];
    }
    double mean = 0.0;
    for (double x : u) mean += x;
    mean /= static_cast<double>(n);
    for (double& x : u) x -= mean;
    double c0 = 0.0;
    for (double x : u) c0 += x * x;
    if (c0 <= 1e-30) return std::nullopt;
    const auto lag0 = static_cast<std::size_t>(min_lag / grid);
    const auto lag1 = std::min(static_cast<std::size_t>(max_lag / grid), n - 2);
    std::vector<double> rho(lag1 + 1, 0.0);
    for (std::size_t lag = std::max<std::size_t>(lag0, 1); lag <= lag1; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) c += u[i] * u[i + lag];
        rho[lag] = c / c0;
    }
    for (std::size_t lag = std::max<std::size_t>(lag0, 1) + 1; lag + 1 <= lag1; ++lag) {
        if (rho[lag] > 0.05 && rho[lag] >= rho[lag - 1] && rho[lag] > rho[lag + 1])
            return static_cast<double>(lag) * grid;
    }
    return std::nullopt;
}

struct StepResponse {
    bool conclusive = false;
    double pre_plateau = 0.0;
    double post_plateau = 0.0;
    double relative_increase = 0.0;
    double delay = 0.0;  // step time -> windowed signal crossing the midpoint
    std::optional<double> oscillation_period;
};

// Plateau change metrics around a known step time. The plateaus are means
// of the windowed signal over [step - pre_span, step] and the final
// post_span of the series.
inline StepResponse step_response_metrics(const TimeSeries& signal, double step_time,
                                          double window = 30.0, double pre_span = 150.0,
                                          double post_span = 200.0) {
    StepResponse r;
    if (signal.size() < 4) return r;
    const TimeSeries smooth = moving_average(signal, window);
    const auto pre = smooth.mean(step_time - pre_span, step_time);
    const auto post = smooth.mean(smooth.t.back() - post_span, smooth.t.back());
    if (!pre || !post || *pre == 0.0) return r;
    r.pre_plateau = *pre;
    r.post_plateau = *post;
    r.relative_increase = (*post - *pre) / *pre;
    const double mid = 0.5 * (*pre + *post);
    r.conclusive = std::abs(*post - *pre) > 0.02 * std::abs(*pre);
    if (r.conclusive) {
        const bool rising = *post > *pre;
        for (std::size_t i = 0; i < smooth.size(); ++i) {
            if (smooth.t[i] < step_time) continue;
            if ((rising && smooth.v[i] >= mid) || (!rising && smooth.v[i] <= mid)) {
                r.delay = smooth.t[i] - step_time;
                break;
            }
        }
    }
    TimeSeries post_region;
    for (std::size_t i = 0; i < signal.size(); ++i)
        if (signal.t[i] >= step_time) post_region.push(signal.t[i], signal.v[i]);
    r.oscillation_period = autocorrelation_period(post_region, 5.0, 300.0);
    return r;
}

}  // namespace oretrack
