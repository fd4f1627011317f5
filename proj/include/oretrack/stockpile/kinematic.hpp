#pragma once

#include <map>
#include <optional>
#include <set>
#include <tuple>

#include "oretrack/core/rng.hpp"
#include "oretrack/stockpile/pile_backend.hpp"

namespace oretrack {

// Kinematic funnel-flow backend. Static material lives in per-column stacks
// (the heightfield is the stack height, packed at bulk density); material
// inside the funnel cone detaches and advects toward the outlet with the
// continuity speed; removal at the outlet is budgeted to the discharge rate.
// Surface relaxation is a deterministic slope-limited sandpile sweep, so
// dead zones below the angle of repose never move.
class KinematicPile : public PileBackend {
  public:
    KinematicPile(PileGeometry geometry, Rng rng)
        : geo_(std::move(geometry)),
          funnel_(FunnelSpec::from(geo_)),
          rng_(rng),
          tan_repose_(std::tan(geo_.repose_deg * kDeg)),
          columns_(geo_.columns()),
          static_height_(geo_.columns(), 0.0) {}

    double thickness(const PseudoParticle& p) const {
        return p.mass / (geo_.bulk_density * geo_.cell);
    }

    std::vector<PseudoParticle> deposit(std::vector<PseudoParticle> batch,
                                        double inlet_x) override {
        for (auto& p : batch) {
            const double drop =
                std::max(geo_.inlet_height - effective_height(geo_.column_of(inlet_x)), 0.0);
            const double x =
                std::clamp(inlet_x + gauss() * geo_.dispersion_per_drop * drop,
                           geo_.x0 + 1e-6, geo_.x1 - 1e-6);
            place_static(p, geo_.column_of(x));
        }
        relax(kFullRelax);  // impact settling
        std::vector<PseudoParticle> placed;
        placed.reserve(batch.size());
        for (const auto& p : batch) placed.push_back(particles_.at(p.id));
        return placed;
    }

    std::vector<PseudoParticle> discharge_step(double q, double now, double dt) override {
        (void)now;
        if (q < 0.0) throw invalid_control("stockpile: negative discharge rate");
        std::vector<PseudoParticle> out;
        if (q == 0.0) {
            freeze_flowing();
            return out;
        }
        budget_ = std::min(budget_ + q * dt, std::max(q * 1.0, 400.0));
        detach_funnel();
        advect_flowing(q, dt);
        capture(out);
        relax(geo_.avalanche_sweeps_per_step);
        return out;
    }

    double held_mass() const override { return held_mass_; }
    std::size_t count() const override { return particles_.size(); }

    void for_each_particle(
        const std::function<void(const PseudoParticle&)>& fn) const override {
        for (const auto& [id, p] : particles_) fn(p);
    }

    std::vector<double> heightfield() const override {
        std::vector<double> h(static_height_);
        for (ParticleId id : flowing_) {
            const PseudoParticle& p = particles_.at(id);
            h[geo_.column_of(p.position.x)] += thickness(p);
        }
        return h;
    }

    std::vector<const PseudoParticle*> predict_discharge(double q,
                                                         double horizon) const override {
        std::vector<const PseudoParticle*> out;
        if (q <= 0.0 || horizon <= 0.0) return out;
        for (const auto& [id, p] : particles_) {
            if (!flowing_.count(id) && !funnel_.contains(p.position)) continue;
            if (funnel_.time_to_outlet(q, p.position, horizon) <= horizon)
                out.push_back(&p);
        }
        return out;
    }

    const PileGeometry& geometry() const { return geo_; }
    const FunnelSpec& funnel() const { return funnel_; }
    std::size_t flowing_count() const { return flowing_.size(); }
    const std::vector<double>& static_heights() const { return static_height_; }

    // Mean of an attribute over one column's static stack (monitoring).
    std::optional<double> column_attribute(
        std::size_t c, const std::function<double(const PseudoParticle&)>& attr) const {
        double num = 0.0, den = 0.0;
        for (ParticleId id : columns_[c]) {
            const PseudoParticle& p = particles_.at(id);
            num += p.mass * attr(p);
            den += p.mass;
        }
        if (den <= 0.0) return std::nullopt;
        return num / den;
    }

  private:
    static constexpr double kDeg = 3.14159265358979323846 / 180.0;
    static constexpr double kPi = 3.14159265358979323846;
    static constexpr int kFullRelax = 1 << 20;

    double gauss() {
        // Box-Muller, one value per call pair.
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        const double u1 = std::max(rng_.uniform01(), 1e-300);
        const double u2 = rng_.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        return r * std::cos(2.0 * kPi * u2);
    }

    double effective_height(std::size_t c) const {
        double h = static_height_[c];
        for (ParticleId id : flowing_) {
            const PseudoParticle& p = particles_.at(id);
            if (geo_.column_of(p.position.x) == c) h += thickness(p);
        }
        return h;
    }

    void place_static(const PseudoParticle& p, std::size_t c) {
        const double tau = thickness(p);
        PseudoParticle q = p;
        q.position = {geo_.column_centre(c), static_height_[c] + 0.5 * tau};
        q.velocity = {0.0, 0.0};
        static_height_[c] += tau;
        held_mass_ += q.mass;
        columns_[c].push_back(q.id);
        particles_[q.id] = std::move(q);
    }

    // Removes the top of column c from the static stack; the particle entry
    // itself stays alive.
    ParticleId pop_static(std::size_t c) {
        const ParticleId id = columns_[c].back();
        columns_[c].pop_back();
        static_height_[c] -= thickness(particles_.at(id));
        return id;
    }

    void detach_funnel() {
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            const double y_min = funnel_.min_height(geo_.column_centre(c) - funnel_.outlet_x);
            while (!columns_[c].empty()) {
                const PseudoParticle& top = particles_.at(columns_[c].back());
                if (top.position.y < y_min) break;
                flowing_.insert(pop_static(c));
            }
        }
    }

    void advect_flowing(double q, double dt) {
        const Vec2 outlet{funnel_.outlet_x, 0.0};
        for (ParticleId id : flowing_) {
            PseudoParticle& p = particles_.at(id);
            const Vec2 d = outlet - p.position;
            const double dist = d.norm();
            const double v = funnel_.speed(q, p.position.y);
            if (dist <= v * dt || dist < 1e-9) {
                p.position = outlet;
                p.velocity = {0.0, 0.0};
            } else {
                p.velocity = d * (v / dist);
                p.position += p.velocity * dt;
            }
        }
    }

    void capture(std::vector<PseudoParticle>& out) {
        const Vec2 outlet{funnel_.outlet_x, 0.0};
        const double r_cap = std::max(geo_.outlet_width, geo_.cell);
        std::vector<std::pair<double, ParticleId>> near;  // (distance, id)
        for (ParticleId id : flowing_) {
            const double dist = (particles_.at(id).position - outlet).norm();
            if (dist <= r_cap) near.emplace_back(dist, id);
        }
        std::sort(near.begin(), near.end());
        for (const auto& [dist, id] : near) {
            PseudoParticle& p = particles_.at(id);
            if (p.mass > budget_) break;
            budget_ -= p.mass;
            held_mass_ -= p.mass;
            out.push_back(std::move(p));
            particles_.erase(id);
            flowing_.erase(id);
        }
    }

    void freeze_flowing() {
        // (column, y, id)-ordered reinsertion keeps the stacking deterministic.
        std::vector<std::tuple<std::size_t, double, ParticleId>> order;
        for (ParticleId id : flowing_) {
            const PseudoParticle& p = particles_.at(id);
            order.emplace_back(geo_.column_of(p.position.x), p.position.y, id);
        }
        std::sort(order.begin(), order.end());
        flowing_.clear();
        for (const auto& [c, y, id] : order) {
            PseudoParticle p = std::move(particles_.at(id));
            particles_.erase(id);
            held_mass_ -= p.mass;
            place_static(p, c);
        }
    }

    // Slope-limited relaxation: the top particle of a column moves to the
    // lower neighbour while the drop exceeds tan(repose)*cell by more than
    // its own thickness (the +tau keeps the mean slope unbiased).
    void relax(int max_sweeps) {
        std::vector<double> flow_vol(columns_.size(), 0.0);
        for (ParticleId id : flowing_) {
            const PseudoParticle& p = particles_.at(id);
            flow_vol[geo_.column_of(p.position.x)] += thickness(p);
        }
        const double limit = tan_repose_ * geo_.cell;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            bool moved = false;
            for (std::size_t c = 0; c < columns_.size(); ++c) {
                if (columns_[c].empty()) continue;
                const double eff = static_height_[c] + flow_vol[c];
                std::optional<std::size_t> to;
                double best = 0.0;
                for (int dir : {-1, +1}) {
                    if ((dir < 0 && c == 0) || (dir > 0 && c + 1 == columns_.size())) continue;
                    const std::size_t nb = c + static_cast<std::size_t>(dir);
                    const double drop = eff - (static_height_[nb] + flow_vol[nb]);
                    if (drop > best) {
                        best = drop;
                        to = nb;
                    }
                }
                if (!to) continue;
                const PseudoParticle& top = particles_.at(columns_[c].back());
                if (best <= limit + thickness(top)) continue;
                const ParticleId id = pop_static(c);
                PseudoParticle p = std::move(particles_.at(id));
                particles_.erase(id);
                held_mass_ -= p.mass;
                place_static(p, *to);
                moved = true;
            }
            if (!moved) break;
        }
    }

    PileGeometry geo_;
    FunnelSpec funnel_;
    Rng rng_;
    std::optional<double> spare_;
    double tan_repose_;
    std::vector<std::vector<ParticleId>> columns_;
    std::vector<double> static_height_;
    std::map<ParticleId, PseudoParticle> particles_;
    std::set<ParticleId> flowing_;
    double held_mass_ = 0.0;
    double budget_ = 0.0;
};

}  // namespace oretrack
