#pragma once

#include <cmath>
#include <vector>

#include "oretrack/analysis/timeseries.hpp"
#include "oretrack/core/size_distribution.hpp"
#include "oretrack/tracking/historian.hpp"

namespace oretrack {

// Bond work index from work per unit mass and the 80% passing diameters of
// the feed and the product (diameters in metres, W in W/kg).
inline double bond_work_index(double work_per_mass, double d80_out, double d80_in) {
    const double denom = 10.0 / std::sqrt(d80_out) - 10.0 / std::sqrt(d80_in);
    if (denom <= 0.0) throw invalid_argument("bond_work_index: product not finer than feed");
    return 3.6 * work_per_mass / denom;
}

struct BwiPoint {
    double t = 0.0;
    double work_per_mass = 0.0;  // W/kg
    double d80_in = 0.0;         // m
    double d80_out = 0.0;        // m
    double bwi = 0.0;
    double grindability = 0.0;   // 1 / bwi
};

struct BwiSeries {
    std::vector<BwiPoint> points;
    std::size_t skipped = 0;  // windows without flow or with d80_out >= d80_in

    TimeSeries bwi() const {
        TimeSeries s;
        for (const auto& p : points) s.push(p.t, p.bwi);
        return s;
    }
    TimeSeries grindability() const {
        TimeSeries s;
        for (const auto& p : points) s.push(p.t, p.grindability);
        return s;
    }
};

// BWI time series over the mill history in the log: moving-average power
// over outflow rate, with windowed mass-weighted psds of the mass entering
// (mill_in snapshots) and leaving (fine-product flux psd).
inline BwiSeries bwi_timeseries(const Historian& hist, const AssetId& mill,
                                const BinningPtr& bins, double window = 60.0) {
    struct Flow {
        double t;
        double mass;
        std::vector<double> class_mass;
    };
    std::vector<std::pair<double, double>> power;  // (t, W)
    std::vector<Flow> in_flow, out_flow;
    const std::size_t n = bins->classes();
    for (const auto& e : hist.events()) {
        if (e.asset != mill) continue;
        if (e.type == EventType::sensor_sample) {
            if (auto it = e.payload.find("power_w"); it != e.payload.end())
                power.emplace_back(e.time, it->second);
        } else if (e.type == EventType::mill_in) {
            Flow f{e.time, 0.0, std::vector<double>(n, 0.0)};
            for (const auto& [pid, state] : e.particles) {
                f.mass += state.mass;
                for (std::size_t k = 0; k < n; ++k)
                    f.class_mass[k] += state.mass * state.psd.fraction(k);
            }
            in_flow.push_back(std::move(f));
        } else if (e.type == EventType::mill_out) {
            const auto fm = e.payload.find(kFineMassKey);
            if (fm == e.payload.end() || fm->second <= 0.0) continue;
            Flow f{e.time, fm->second, std::vector<double>(n, 0.0)};
            char key[16];
            for (std::size_t k = 0; k < n; ++k) {
                std::snprintf(key, sizeof key, "fine_f_%02u", static_cast<unsigned>(k));
                if (auto it = e.payload.find(key); it != e.payload.end())
                    f.class_mass[k] = fm->second * it->second;
            }
            out_flow.push_back(std::move(f));
        }
    }
    BwiSeries series;
    std::size_t p_lo = 0, p_hi = 0, i_lo = 0, i_hi = 0, o_lo = 0, o_hi = 0;
    double p_sum = 0.0;
    Flow in_acc{0.0, 0.0, std::vector<double>(n, 0.0)};
    Flow out_acc{0.0, 0.0, std::vector<double>(n, 0.0)};
    auto add = [n](Flow& acc, const Flow& f, double sign) {
        acc.mass += sign * f.mass;
        for (std::size_t k = 0; k < n; ++k) acc.class_mass[k] += sign * f.class_mass[k];
    };
    auto d80_of = [&](const Flow& acc) {
        SizeDistribution psd(bins, acc.class_mass);
        psd.normalize();
        return d_value(psd, 0.8);
    };
    for (const auto& out : out_flow) {
        const double t1 = out.t, t0 = out.t - window;
        while (p_hi < power.size() && power[p_hi].first <= t1) p_sum += power[p_hi++].second;
        while (p_lo < p_hi && power[p_lo].first <= t0) p_sum -= power[p_lo++].second;
        while (i_hi < in_flow.size() && in_flow[i_hi].t <= t1) add(in_acc, in_flow[i_hi++], 1.0);
        while (i_lo < i_hi && in_flow[i_lo].t <= t0) add(in_acc, in_flow[i_lo++], -1.0);
        while (o_hi < out_flow.size() && out_flow[o_hi].t <= t1)
            add(out_acc, out_flow[o_hi++], 1.0);
        while (o_lo < o_hi && out_flow[o_lo].t <= t0) add(out_acc, out_flow[o_lo++], -1.0);
        if (p_hi == p_lo || out_acc.mass <= 0.0 || in_acc.mass <= 0.0) {
            ++series.skipped;
            continue;
        }
        BwiPoint pt;
        pt.t = t1;
        const double mean_power = p_sum / static_cast<double>(p_hi - p_lo);
        pt.work_per_mass = mean_power / (out_acc.mass / window);
        pt.d80_in = d80_of(in_acc);
        pt.d80_out = d80_of(out_acc);
        if (pt.d80_out >= pt.d80_in) {
            ++series.skipped;
            continue;
        }
        pt.bwi = bond_work_index(pt.work_per_mass, pt.d80_out, pt.d80_in);
        pt.grindability = 1.0 / pt.bwi;
        if (!series.points.empty() && series.points.back().t >= pt.t) continue;
        series.points.push_back(pt);
    }
    return series;
}

}  // namespace oretrack
