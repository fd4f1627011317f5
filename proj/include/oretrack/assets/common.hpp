#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "oretrack/core/errors.hpp"
#include "oretrack/core/particle.hpp"
#include "oretrack/tracking/historian.hpp"

namespace oretrack {

// Piecewise-constant control signal; the value of the last point at or
// before t, or the first value for t before the schedule starts.
class Schedule {
  public:
    Schedule() = default;
    explicit Schedule(double constant) { points_.emplace_back(0.0, constant); }
    explicit Schedule(std::vector<std::pair<double, double>> points)
        : points_(std::move(points)) {
        std::sort(points_.begin(), points_.end());
    }

    double at(double t) const {
        if (points_.empty()) return 0.0;
        double v = points_.front().second;
        for (const auto& [pt, pv] : points_) {
            if (pt > t) break;
            v = pv;
        }
        return v;
    }

    bool empty() const { return points_.empty(); }
    const std::vector<std::pair<double, double>>& points() const { return points_; }

  private:
    std::vector<std::pair<double, double>> points_;
};

// Downstream endpoint able to accept a batch of particles.
class MaterialSink {
  public:
    virtual ~MaterialSink() = default;
    virtual void receive(std::vector<PseudoParticle> batch, double t) = 0;
    virtual const AssetId& sink_id() const = 0;
};

inline std::vector<std::pair<ParticleId, PseudoParticle>> snapshot_tuples(
    const std::vector<PseudoParticle>& batch) {
    std::vector<std::pair<ParticleId, PseudoParticle>> tuples;
    tuples.reserve(batch.size());
    for (const auto& p : batch) tuples.emplace_back(p.id, p);
    return tuples;
}

}  // namespace oretrack
