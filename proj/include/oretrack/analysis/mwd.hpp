#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "oretrack/assets/crusher.hpp"
#include "oretrack/tracking/historian.hpp"

namespace oretrack {

// One crusher-zone composition sample: per particle the torque prefactor
// m_n (k . f_n) with the pre-crush psd, and the carried MWD value.
struct ZoneSample {
    double t = 0.0;
    double torque_obs = 0.0;
    std::vector<std::pair<double, double>> members;  // (m * k.f, mwd)
};

struct MwdFit {
    double beta = 0.0;
    double residual = 0.0;  // sum of squared torque errors at beta
    bool identifiable = true;
    double scan_lo = 0.1;
    double scan_hi = 1.0;
};

inline double mwd_predicted_torque(const ZoneSample& s, double beta) {
    double tau = 0.0;
    for (const auto& [a, mwd] : s.members) tau += a * std::pow(mwd, 1.0 / beta);
    return tau;
}

inline double mwd_sse(const std::vector<ZoneSample>& samples, double beta) {
    double sse = 0.0;
    for (const auto& s : samples) {
        const double e = s.torque_obs - mwd_predicted_torque(s, beta);
        sse += e * e;
    }
    return sse;
}

// Least-squares fit of the ansatz s = h^beta against observed crusher
// torque: coarse scan to bracket the minimum, then golden-section refined
// to 1e-4. A flat residual landscape is reported as unidentifiable.
inline MwdFit fit_mwd_beta(const std::vector<ZoneSample>& samples, double lo = 0.1,
                           double hi = 1.0) {
    MwdFit fit;
    fit.scan_lo = lo;
    fit.scan_hi = hi;
    constexpr int kScan = 19;
    std::vector<double> sse(kScan);
    double smin = std::numeric_limits<double>::max(), smax = 0.0;
    int imin = 0;
    for (int i = 0; i < kScan; ++i) {
        const double b = lo + (hi - lo) * i / (kScan - 1);
        sse[i] = mwd_sse(samples, b);
        if (sse[i] < smin) {
            smin = sse[i];
            imin = i;
        }
        smax = std::max(smax, sse[i]);
    }
    if (smax <= 0.0 || (smax - smin) <= 1e-9 * smax) {
        fit.identifiable = false;
        fit.beta = lo + 0.5 * (hi - lo);
        fit.residual = smin;
        return fit;
    }
    double a = lo + (hi - lo) * std::max(imin - 1, 0) / (kScan - 1);
    double b = lo + (hi - lo) * std::min(imin + 1, kScan - 1) / (kScan - 1);
    const double gr = (std::sqrt(5.0) + 1.0) / 2.0;
    double c = b - (b - a) / gr;
    double d = a + (b - a) / gr;
    while (std::abs(b - a) > 1e-4) {
        if (mwd_sse(samples, c) < mwd_sse(samples, d))
            b = d;
        else
            a = c;
        c = b - (b - a) / gr;
        d = a + (b - a) / gr;
    }
    fit.beta = 0.5 * (a + b);
    fit.residual = mwd_sse(samples, fit.beta);
    return fit;
}

inline double predict_hardness_from_mwd(const MwdFit& fit, double mwd) {
    if (mwd < 0.0) throw invalid_argument("predict_hardness_from_mwd: negative MWD value");
    return std::pow(mwd, 1.0 / fit.beta);
}

// Rebuilds the crusher-zone composition at every torque sample from the
// historian alone: a particle occupies the zone from the enter time stamped
// on its crusher_pass event until the pass itself; its pre-crush psd is the
// truck_dump snapshot.
inline std::vector<ZoneSample> build_zone_history(const Historian& hist,
                                                  const AssetId& crusher,
                                                  const CrusherParams& params,
                                                  const BinningPtr& bins) {
    const auto coeffs =
        crush_coefficients(*bins, params.gap, params.k_oversize, params.k_undersize);
    struct Interval {
        double enter;
        double exit;
        double a;    // m * k.f (pre-crush)
        double mwd;
    };
    std::vector<Interval> intervals;
    std::vector<std::pair<double, double>> torque;  // (t, tau)
    for (const auto& e : hist.events()) {
        if (e.asset != crusher) continue;
        if (e.type == EventType::sensor_sample) {
            const auto it = e.payload.find("torque_nm");
            const auto zm = e.payload.find("zone_mass_kg");
            if (it != e.payload.end() && zm != e.payload.end() && zm->second > 0.0)
                torque.emplace_back(e.time, it->second);
        } else if (e.type == EventType::crusher_pass) {
            const auto it = e.payload.find("zone_enter_time_s");
            if (it == e.payload.end() || e.particles.empty()) continue;
            const ParticleId pid = e.particles.front().first;
            // Pre-crush state: the latest snapshot before the zone entry.
            const auto trace = hist.trace_particle(pid);
            const PseudoParticle* pre = nullptr;
            for (const auto* te : trace) {
                if (te->time > it->second && pre) break;
                for (const auto& [id, state] : te->particles)
                    if (id == pid) pre = &state;
                if (te->event_id == e.event_id) break;
            }
            if (!pre) continue;
            Interval iv;
            iv.enter = it->second;
            iv.exit = e.time;
            iv.a = crusher_torque_term(*pre, coeffs) / pre->hardness;
            const auto mwd = pre->extrinsic.find("mwd");
            iv.mwd = mwd != pre->extrinsic.end() ? mwd->second : 1.0;
            intervals.push_back(iv);
        }
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.enter < b.enter; });
    std::sort(torque.begin(), torque.end());
    std::vector<ZoneSample> samples;
    using ExitQueue =
        std::priority_queue<std::pair<double, std::size_t>,
                            std::vector<std::pair<double, std::size_t>>, std::greater<>>;
    ExitQueue active;
    std::size_t next = 0;
    std::vector<bool> in(intervals.size(), false);
    for (const auto& [t, tau] : torque) {
        while (next < intervals.size() && intervals[next].enter <= t) {
            active.emplace(intervals[next].exit, next);
            in[next] = true;
            ++next;
        }
        while (!active.empty() && active.top().first <= t) {
            in[active.top().second] = false;
            active.pop();
        }
        ZoneSample s;
        s.t = t;
        s.torque_obs = tau;
        for (std::size_t i = 0; i < next; ++i)
            if (in[i]) s.members.emplace_back(intervals[i].a, intervals[i].mwd);
        if (!s.members.empty()) samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace oretrack
