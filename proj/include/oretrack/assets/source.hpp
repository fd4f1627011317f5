#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "oretrack/assets/common.hpp"
#include "oretrack/core/rng.hpp"

namespace oretrack {

enum class HardnessProfileKind { constant, step, quadratic };

// Hardness over the bench coordinate. The quadratic profile runs
// monotonically from `base` at x0 to `value` at x1.
struct HardnessProfile {
    HardnessProfileKind kind = HardnessProfileKind::constant;
    double base = 1.0;
    double value = 2.0;   // level after the step / at the far end
    double step_x = 0.0;  // step location (step profile only)
    double x0 = 0.0;
    double x1 = 1.0;

    double operator()(double x) const {
        switch (kind) {
            case HardnessProfileKind::constant: return base;
            case HardnessProfileKind::step: return x < step_x ? base : value;
            case HardnessProfileKind::quadratic: {
                const double u = std::clamp((x - x0) / (x1 - x0), 0.0, 1.0);
                return base + (value - base) * u * u;
            }
        }
        return base;
    }
};

struct SourceParams {
    AssetId id;
    double x0 = 0.0;  // bench interval, m
    double x1 = 100.0;
    double y = 0.0;
    HardnessProfile hardness;
    double concentration = 0.2;
    double mwd_dx = 0.0;        // measurement location error half-width, m
    double mwd_exponent = 0.4;  // ground-truth ansatz s = h^beta
    double mass_per_meter = 5000.0;  // kg of reserve per bench metre
    double particle_mass_min = 12.0;   // kg
    double particle_mass_max = 160.0;  // kg
    double rock_density = 2800.0;      // kg/m3, contact diameter only
    bool finite_reserve = true;
    SizeDistribution blast_psd;  // fragmentation after blasting
};

// Ore source along a 1D bench. Spawning advances a mining front; each
// particle gets an identity, an immutable origin, the local hardness and the
// blast size distribution. The MWD extrinsic carries the measurement taken
// at a position disturbed by up to +-mwd_dx.
class SourceAsset {
  public:
    SourceAsset(SourceParams params, Rng rng, Historian* hist)
        : params_(std::move(params)), rng_(rng), hist_(hist), front_(params_.x0) {}

    const AssetId& id() const { return params_.id; }
    const SourceParams& params() const { return params_; }
    double front() const { return front_; }
    bool exhausted() const { return params_.finite_reserve && front_ >= params_.x1; }

    // Spawns ~mass_requested kg (may overshoot by up to one particle). An
    // exhausted finite region yields a short or empty batch.
    std::vector<PseudoParticle> spawn(double mass_requested, double now,
                                      ParticleId& next_id) {
        std::vector<PseudoParticle> batch;
        double total = 0.0;
        while (total < mass_requested && !exhausted()) {
            PseudoParticle p;
            p.id = next_id++;
            p.mass = rng_.uniform(params_.particle_mass_min, params_.particle_mass_max);
            p.spawn_mass = p.mass;
            p.diameter = std::cbrt(6.0 * p.mass / (params_.rock_density * kPi));
            const double span = p.mass / params_.mass_per_meter;
            const double ox = front_ + 0.5 * span;
            front_ += span;
            p.origin = {ox, params_.y};
            p.position = p.origin;
            p.hardness = params_.hardness(ox);
            p.concentration = params_.concentration;
            p.psd = params_.blast_psd;
            const double probe =
                params_.mwd_dx > 0.0 ? ox + rng_.uniform(-params_.mwd_dx, params_.mwd_dx) : ox;
            const double h_probe = params_.hardness(std::clamp(probe, params_.x0, params_.x1));
            p.extrinsic["mwd"] = std::pow(h_probe, params_.mwd_exponent);
            p.current_asset = params_.id;
            total += p.mass;
            batch.push_back(std::move(p));
        }
        if (hist_ && !batch.empty()) {
            TrackingEvent ev;
            ev.type = EventType::source_spawn;
            ev.asset = params_.id;
            ev.location = {front_, params_.y};
            ev.time = now;
            ev.particles = snapshot_tuples(batch);
            hist_->emit(std::move(ev));
        }
        spawned_total_ += total;
        return batch;
    }

    double spawned_total() const { return spawned_total_; }

  private:
    static constexpr double kPi = 3.14159265358979323846;

    SourceParams params_;
    Rng rng_;
    Historian* hist_;
    double front_;
    double spawned_total_ = 0.0;
};

}  // namespace oretrack
