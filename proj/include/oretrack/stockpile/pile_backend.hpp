#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "oretrack/core/errors.hpp"
#include "oretrack/core/particle.hpp"

namespace oretrack {

// 2D silo/pile cross-section. The floor is y = 0 with the outlet in it;
// inlets drop material from inlet_height.
struct PileGeometry {
    double x0 = 0.0;  // wall positions, m
    double x1 = 60.0;
    double cell = 0.5;          // heightfield column width, m
    double outlet_x = 30.0;     // m
    double outlet_width = 1.0;  // m
    double inlet_height = 60.0;  // m
    std::vector<double> inlets_x = {30.0};
    double capacity = 2.0e6;    // kg
    double repose_deg = 35.0;
    double funnel_half_angle_deg = 35.0;
    double bulk_density = 1600.0;  // kg/m3
    double dispersion_per_drop = 0.05;  // lateral std dev per metre of drop height
    int avalanche_sweeps_per_step = 2;

    double width() const { return x1 - x0; }
    std::size_t columns() const {
        return static_cast<std::size_t>(std::ceil(width() / cell));
    }
    double column_centre(std::size_t c) const {
        return x0 + (static_cast<double>(c) + 0.5) * cell;
    }
    std::size_t column_of(double x) const {
        const double u = (x - x0) / cell;
        if (u <= 0.0) return 0;
        const auto c = static_cast<std::size_t>(u);
        return c >= columns() ? columns() - 1 : c;
    }
};

// Funnel-flow zone above the outlet: a cone of the configured half-angle.
// Speeds follow continuity, v(y) = q / (rho_b A(y)).
struct FunnelSpec {
    double outlet_x = 0.0;
    double outlet_halfwidth = 0.5;
    double tan_half_angle = 0.7;
    double bulk_density = 1600.0;

    static FunnelSpec from(const PileGeometry& g) {
        return {g.outlet_x, 0.5 * g.outlet_width,
                std::tan(g.funnel_half_angle_deg * kDeg), g.bulk_density};
    }

    bool contains(Vec2 pos) const {
        return std::abs(pos.x - outlet_x) <= outlet_halfwidth + std::max(pos.y, 0.0) * tan_half_angle;
    }
    // Height above which a column at lateral offset dx lies inside the cone.
    double min_height(double dx) const {
        return std::max((std::abs(dx) - outlet_halfwidth) / tan_half_angle, 0.0);
    }
    double area(double y) const {  // per metre of depth
        return 2.0 * (outlet_halfwidth + std::max(y, 0.0) * tan_half_angle);
    }
    double speed(double q, double y) const { return q / (bulk_density * area(y)); }

    // Travel time from pos to the outlet along the converging path, or
    // infinity when it exceeds the horizon.
    double time_to_outlet(double q, Vec2 pos, double horizon) const {
        if (q <= 0.0) return std::numeric_limits<double>::infinity();
        const Vec2 outlet{outlet_x, 0.0};
        double t = 0.0;
        const double h = 0.05;
        while (t <= horizon) {
            const Vec2 d = outlet - pos;
            const double dist = d.norm();
            const double v = speed(q, pos.y);
            if (v * h >= dist) return t + dist / std::max(v, 1e-12);
            pos += d * (v * h / dist);
            t += h;
        }
        return std::numeric_limits<double>::infinity();
    }

  private:
    static constexpr double kDeg = 3.14159265358979323846 / 180.0;
};

// Micro-tracking backend of the storage asset. All backends share the event
// contract; only how particles move inside differs.
class PileBackend {
  public:
    virtual ~PileBackend() = default;

    // Places the batch (dispersed over the surface) and returns the placed
    // states for the storage_in snapshot.
    virtual std::vector<PseudoParticle> deposit(std::vector<PseudoParticle> batch,
                                                double inlet_x) = 0;

    // Advances the internal flow for one step at discharge rate q (kg/s) and
    // returns the particles that left through the outlet.
    virtual std::vector<PseudoParticle> discharge_step(double q, double now, double dt) = 0;

    virtual double held_mass() const = 0;
    virtual std::size_t count() const = 0;
    virtual void for_each_particle(
        const std::function<void(const PseudoParticle&)>& fn) const = 0;
    virtual std::vector<double> heightfield() const = 0;

    // Particles expected to reach the outlet within the horizon at rate q.
    virtual std::vector<const PseudoParticle*> predict_discharge(double q,
                                                                 double horizon) const = 0;
};

}  // namespace oretrack
