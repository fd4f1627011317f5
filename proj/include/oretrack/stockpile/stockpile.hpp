#pragma once

#include <array>
#include <deque>
#include <memory>

#include "oretrack/assets/common.hpp"
#include "oretrack/stockpile/dem2d.hpp"
#include "oretrack/stockpile/kinematic.hpp"
#include "oretrack/stockpile/rom.hpp"

namespace oretrack {

enum class PileBackendKind { kinematic, dem2d, rom };

inline PileBackendKind pile_backend_from(const std::string& s) {
    if (s == "kinematic") return PileBackendKind::kinematic;
    if (s == "dem2d") return PileBackendKind::dem2d;
    if (s == "rom") return PileBackendKind::rom;
    throw invalid_argument("unknown stockpile backend: " + s);
}

struct StockpileParams {
    AssetId id;
    PileGeometry geometry;
    Schedule discharge;  // kg/s
    PileBackendKind backend = PileBackendKind::kinematic;
    Dem2dParams dem;
    std::string rom_file;  // backend == rom
    double prediction_horizon = 30.0;  // s
};

// Storage asset. The backend does the micro-tracking; this wrapper owns
// capacity, events and the feed prediction, so swapping backends never
// changes the macro-event structure.
class StockpileAsset : public MaterialSink {
  public:
    StockpileAsset(StockpileParams params, std::unique_ptr<PileBackend> backend,
                   MaterialSink* target, Historian* hist)
        : params_(std::move(params)), backend_(std::move(backend)), target_(target),
          hist_(hist) {}

    static std::unique_ptr<PileBackend> make_backend(const StockpileParams& p, Rng rng) {
        switch (p.backend) {
            case PileBackendKind::kinematic:
                return std::make_unique<KinematicPile>(p.geometry, rng);
            case PileBackendKind::dem2d:
                return std::make_unique<Dem2dPile>(p.geometry, p.dem, rng);
            case PileBackendKind::rom:
                return std::make_unique<RomPile>(p.geometry, VelocityFieldRom::load(p.rom_file),
                                                 rng);
        }
        throw invalid_argument("stockpile: bad backend");
    }

    const AssetId& sink_id() const override { return params_.id; }
    const StockpileParams& params() const { return params_; }
    void set_target(MaterialSink* t) { target_ = t; }
    PileBackend& backend() { return *backend_; }
    const PileBackend& backend() const { return *backend_; }

    // Upstream conveyor discharge; queued and deposited in the next step
    // (or immediately refused deposits wait for headroom).
    void receive(std::vector<PseudoParticle> batch, double t) override {
        (void)t;
        if (!batch.empty()) pending_.push_back(std::move(batch));
    }

    // True when accepted; a deposit that would exceed capacity is refused
    // and no event is emitted.
    bool try_deposit(std::vector<PseudoParticle> batch, double inlet_x, double now) {
        double batch_mass = 0.0;
        for (const auto& p : batch) batch_mass += p.mass;
        if (backend_->held_mass() + pending_mass() + batch_mass > params_.geometry.capacity)
            return false;
        for (auto& p : batch) p.current_asset = params_.id;
        auto placed = backend_->deposit(std::move(batch), inlet_x);
        if (hist_ && !placed.empty()) {
            TrackingEvent ev;
            ev.type = EventType::storage_in;
            ev.asset = params_.id;
            ev.location = {inlet_x, params_.geometry.inlet_height};
            ev.time = now;
            ev.particles = snapshot_tuples(placed);
            hist_->emit(std::move(ev));
        }
        return true;
    }

    void step(double now, double dt) {
        while (!pending_.empty()) {
            double m = 0.0;
            for (const auto& p : pending_.front()) m += p.mass;
            if (backend_->held_mass() + m > params_.geometry.capacity) break;
            auto batch = std::move(pending_.front());
            pending_.pop_front();
            for (auto& p : batch) p.current_asset = params_.id;
            auto placed = backend_->deposit(std::move(batch), default_inlet());
            if (hist_ && !placed.empty()) {
                TrackingEvent ev;
                ev.type = EventType::storage_in;
                ev.asset = params_.id;
                ev.location = {default_inlet(), params_.geometry.inlet_height};
                ev.time = now;
                ev.particles = snapshot_tuples(placed);
                hist_->emit(std::move(ev));
            }
        }
        const double q = params_.discharge.at(now);
        auto out = backend_->discharge_step(q, now, dt);
        if (!out.empty()) {
            for (auto& p : out) {
                p.position = {params_.geometry.outlet_x, 0.0};
                p.current_asset = target_ ? target_->sink_id() : AssetId{};
            }
            discharged_total_ += mass_of(out);
            if (hist_) {
                TrackingEvent ev;
                ev.type = EventType::storage_out;
                ev.asset = params_.id;
                ev.location = {params_.geometry.outlet_x, 0.0};
                ev.time = now;
                ev.particles = snapshot_tuples(out);
                hist_->emit(std::move(ev));
            }
            if (target_) target_->receive(std::move(out), now);
        }
    }

    double held_mass() const { return backend_->held_mass() + pending_mass(); }
    double discharged_total() const { return discharged_total_; }

    std::map<std::string, double> sensor_payload() const {
        std::map<std::string, double> payload;
        payload[kHeldMassKey] = held_mass();
        payload["fill_fraction"] = held_mass() / params_.geometry.capacity;
        double num_h = 0.0, num_c = 0.0, den = 0.0;
        backend_->for_each_particle([&](const PseudoParticle& p) {
            num_h += p.mass * p.hardness;
            num_c += p.mass * p.concentration;
            den += p.mass;
        });
        if (den > 0.0) {
            payload["hardness"] = num_h / den;
            payload["concentration"] = num_c / den;
        }
        return payload;
    }

    // Funnel-zone feed prediction over the configured horizon.
    std::map<std::string, double> prediction_payload(double now) const {
        std::map<std::string, double> payload;
        const double q = params_.discharge.at(now);
        const auto set = backend_->predict_discharge(q, params_.prediction_horizon);
        double mass = 0.0, num_h = 0.0, num_c = 0.0;
        for (const auto* p : set) {
            mass += p->mass;
            num_h += p->mass * p->hardness;
            num_c += p->mass * p->concentration;
        }
        payload["pred_mass_kg"] = mass;
        payload["pred_count"] = static_cast<double>(set.size());
        if (mass > 0.0) {
            payload["pred_hardness"] = num_h / mass;
            payload["pred_concentration"] = num_c / mass;
        }
        return payload;
    }

    // Heightfield and per-column attribute profile (monitoring export).
    std::vector<std::array<double, 4>> column_report() const {
        const auto heights = backend_->heightfield();
        std::vector<double> num_h(heights.size(), 0.0), num_c(heights.size(), 0.0),
            den(heights.size(), 0.0);
        backend_->for_each_particle([&](const PseudoParticle& p) {
            const std::size_t c = params_.geometry.column_of(p.position.x);
            num_h[c] += p.mass * p.hardness;
            num_c[c] += p.mass * p.concentration;
            den[c] += p.mass;
        });
        std::vector<std::array<double, 4>> rows;
        rows.reserve(heights.size());
        for (std::size_t c = 0; c < heights.size(); ++c) {
            const double h = den[c] > 0.0 ? num_h[c] / den[c] : 0.0;
            const double conc = den[c] > 0.0 ? num_c[c] / den[c] : 0.0;
            rows.push_back({params_.geometry.column_centre(c), heights[c], h, conc});
        }
        return rows;
    }

  private:
    double pending_mass() const {
        double m = 0.0;
        for (const auto& batch : pending_)
            for (const auto& p : batch) m += p.mass;
        return m;
    }

    double default_inlet() const {
        return params_.geometry.inlets_x.empty() ? params_.geometry.outlet_x
                                                 : params_.geometry.inlets_x.front();
    }

    static double mass_of(const std::vector<PseudoParticle>& v) {
        double m = 0.0;
        for (const auto& p : v) m += p.mass;
        return m;
    }

    StockpileParams params_;
    std::unique_ptr<PileBackend> backend_;
    MaterialSink* target_;
    Historian* hist_;
    std::deque<std::vector<PseudoParticle>> pending_;
    double discharged_total_ = 0.0;
};

}  // namespace oretrack
