#pragma once

#include <algorithm>
#include <vector>

#include "oretrack/analysis/bwi.hpp"
#include "oretrack/core/block_model.hpp"
#include "oretrack/tracking/historian.hpp"

namespace oretrack {

// Windowed mean of a step function (mass residency) built from +/- mass
// change points; used for the average in-mill mass per origin block.
class ResidencyIntegral {
  public:
    void add(double t, double delta) { changes_.emplace_back(t, delta); }

    void finalize() { std::sort(changes_.begin(), changes_.end()); }

    // Mean value over [t1 - window, t1].
    double window_mean(double t1, double window) const {
        const double t0 = t1 - window;
        double level = 0.0, integral = 0.0, prev = t0;
        for (const auto& [t, d] : changes_) {
            if (t <= t0) {
                level += d;
                continue;
            }
            if (t > t1) break;
            integral += level * (t - prev);
            level += d;
            prev = t;
        }
        integral += level * (t1 - prev);
        return window > 0.0 ? integral / window : level;
    }

  private:
    std::vector<std::pair<double, double>> changes_;
};

// Reconciles mill grindability observations back to the origin blocks with
// the confidence-weighted running average. Residency masses use the mill
// entry snapshots (retirements subtract what is left at exit).
inline BlockModel backtrack_grindability(BlockModel blocks, const Historian& hist,
                                         const AssetId& mill, const BwiSeries& observations,
                                         double window = 60.0) {
    ResidencyIntegral total;
    std::vector<ResidencyIntegral> per_block(blocks.size());
    for (const auto& e : hist.events()) {
        if (e.asset != mill) continue;
        if (e.type == EventType::mill_in) {
            for (const auto& [pid, state] : e.particles) {
                total.add(e.time, state.mass);
                const auto b = blocks.block_of(state.origin.x);
                if (b != BlockModel::npos) per_block[b].add(e.time, state.mass);
            }
        } else if (e.type == EventType::mill_out && !e.particles.empty()) {
            for (const auto& [pid, state] : e.particles) {
                total.add(e.time, -state.spawn_mass);
                const auto b = blocks.block_of(state.origin.x);
                if (b != BlockModel::npos) per_block[b].add(e.time, -state.spawn_mass);
            }
        }
    }
    total.finalize();
    for (auto& r : per_block) r.finalize();
    for (const auto& obs : observations.points) {
        const double mill_mass = total.window_mean(obs.t, window);
        if (mill_mass <= 0.0) continue;  // empty mill: nothing to attribute
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const double m_i = per_block[b].window_mean(obs.t, window);
            if (m_i <= 0.0) continue;
            blocks.observe(b, obs.grindability, m_i, mill_mass);
        }
    }
    return blocks;
}

// Spearman rank correlation (average ranks on ties).
inline double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    if (n < 2 || b.size() != n) throw invalid_argument("spearman_rho: need matched samples");
    auto ranks = [](const std::vector<double>& x) {
        const std::size_t n = x.size();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
            const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da <= 0.0 || db <= 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

}  // namespace oretrack
