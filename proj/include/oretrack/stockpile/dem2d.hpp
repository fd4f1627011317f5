#pragma once

#include <deque>
#include <optional>
#include <tuple>

#include "oretrack/core/rng.hpp"
#include "oretrack/stockpile/pile_backend.hpp"

namespace oretrack {

struct Dem2dParams {
    double restitution = 0.0;  // e_p
    double friction = 0.8;     // mu_p-t
    double rolling = 0.4;      // mu_p-r
    double cohesion = 0.0;     // c_p, adhesive normal-force bound (N)
    int iterations = 100;      // projected Gauss-Seidel sweeps
    int position_iterations = 3;
    double slop = 1e-3;        // m of tolerated overlap
    double baumgarte = 0.2;
    double bias_cap = 2.0;     // m/s stabilization velocity cap
    double max_speed = 60.0;   // divergence sanity bound, m/s
    double gravity = 9.8;
    double spawn_jitter = 0.5;  // m lateral randomization at the inlet
    int max_spawn_per_step = 4;
};

// Simplified 2D nonsmooth DEM: discs, velocity-level contact constraints
// (non-penetration with Newton restitution, Coulomb friction, rolling
// resistance, optional cohesion) solved by fixed-count projected
// Gauss-Seidel, implicit position update. The outlet is a metering gate:
// particles over it are eliminated at the discharge rate.
class Dem2dPile : public PileBackend {
  public:
    Dem2dPile(PileGeometry geometry, Dem2dParams params, Rng rng)
        : geo_(std::move(geometry)),
          funnel_(FunnelSpec::from(geo_)),
          prm_(params),
          rng_(rng) {
        if (prm_.iterations < 1) throw invalid_argument("dem2d: iterations must be >= 1");
    }

    std::vector<PseudoParticle> deposit(std::vector<PseudoParticle> batch,
                                        double inlet_x) override {
        std::vector<PseudoParticle> placed;
        placed.reserve(batch.size());
        for (auto& p : batch) {
            p.position = {inlet_x, geo_.inlet_height};
            p.velocity = {0.0, 0.0};
            pending_mass_ += p.mass;
            placed.push_back(p);
            pending_.push_back({std::move(p), inlet_x});
        }
        return placed;
    }

    std::vector<PseudoParticle> discharge_step(double q, double now, double dt) override {
        (void)now;
        if (q < 0.0) throw invalid_control("dem2d: negative discharge rate");
        release_pending();
        integrate(dt);
        std::vector<PseudoParticle> out;
        if (q > 0.0) {
            budget_ = std::min(budget_ + q * dt, std::max(q * 1.0, 400.0));
            capture(out);
        }
        return out;
    }

    double held_mass() const override { return body_mass_ + pending_mass_; }
    std::size_t count() const override { return bodies_.size() + pending_.size(); }

    void for_each_particle(
        const std::function<void(const PseudoParticle&)>& fn) const override {
        for (const auto& b : bodies_) fn(b.p);
        for (const auto& s : pending_) fn(s.p);
    }

    std::vector<double> heightfield() const override {
        std::vector<double> h(geo_.columns(), 0.0);
        for (const auto& b : bodies_) {
            const std::size_t c = geo_.column_of(b.p.position.x);
            h[c] = std::max(h[c], b.p.position.y + b.r);
        }
        return h;
    }

    std::vector<const PseudoParticle*> predict_discharge(double q,
                                                         double horizon) const override {
        std::vector<const PseudoParticle*> out;
        if (q <= 0.0 || horizon <= 0.0) return out;
        for (const auto& b : bodies_) {
            if (!funnel_.contains(b.p.position)) continue;
            if (funnel_.time_to_outlet(q, b.p.position, horizon) <= horizon)
                out.push_back(&b.p);
        }
        return out;
    }

    const PileGeometry& geometry() const { return geo_; }
    const Dem2dParams& params() const { return prm_; }
    std::size_t settled_count() const { return bodies_.size(); }

    struct Body {
        PseudoParticle p;
        double w = 0.0;  // angular velocity
        double r = 0.1;
        double inv_m = 0.0;
        double inv_i = 0.0;
    };
    const std::vector<Body>& bodies() const { return bodies_; }

    // Highest surface sample, for calibration checks.
    double peak_height() const {
        double h = 0.0;
        for (const auto& b : bodies_) h = std::max(h, b.p.position.y + b.r);
        return h;
    }

  private:
    struct Pending {
        PseudoParticle p;
        double inlet_x;
    };

    struct Contact {
        int i;
        int j;  // -1 for a static wall
        Vec2 n;  // from i toward j (or into the wall)
        double pen;
        double len_i, len_j;  // contact arm lengths
        double vn0 = 0.0;     // pre-solve approach speed
        double inv_mass_n, inv_mass_t, inv_inertia_sum;
        double jn = 0.0, jt = 0.0, jr = 0.0;
        double bias = 0.0;
    };

    static double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
    static Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

    void release_pending() {
        int released = 0;
        while (!pending_.empty() && released < prm_.max_spawn_per_step) {
            Pending s = std::move(pending_.front());
            const double x =
                std::clamp(s.inlet_x + rng_.uniform(-prm_.spawn_jitter, prm_.spawn_jitter),
                           geo_.x0 + 0.3, geo_.x1 - 0.3);
            const double r = 0.5 * s.p.diameter;
            bool clear = true;
            for (const auto& b : bodies_) {
                if (b.p.position.y < geo_.inlet_height - 4.0) continue;
                const double dx = b.p.position.x - x;
                const double dy = b.p.position.y - geo_.inlet_height;
                if (dx * dx + dy * dy < (b.r + r + 0.05) * (b.r + r + 0.05)) {
                    clear = false;
                    break;
                }
            }
            if (!clear) break;  // wait for the drop zone to clear
            pending_.pop_front();
            Body b;
            b.p = std::move(s.p);
            b.p.position = {x, geo_.inlet_height};
            b.r = r;
            b.inv_m = 1.0 / b.p.mass;
            b.inv_i = 1.0 / (0.5 * b.p.mass * r * r);
            pending_mass_ -= b.p.mass;
            body_mass_ += b.p.mass;
            bodies_.push_back(std::move(b));
            ++released;
        }
    }

    std::vector<Contact> find_contacts() const {
        std::vector<Contact> contacts;
        // Uniform spatial hash over the domain, cell = largest diameter.
        const double cell = 0.52;
        const double gx0 = geo_.x0 - 1.0, gy0 = -1.0;
        const int nx = static_cast<int>((geo_.width() + 2.0) / cell) + 1;
        const int ny = static_cast<int>((geo_.inlet_height + 3.0) / cell) + 1;
        std::vector<std::vector<int>> grid(static_cast<std::size_t>(nx) * ny);
        auto cell_of = [&](Vec2 v) {
            const int ix = std::clamp(static_cast<int>((v.x - gx0) / cell), 0, nx - 1);
            const int iy = std::clamp(static_cast<int>((v.y - gy0) / cell), 0, ny - 1);
            return std::pair{ix, iy};
        };
        for (int i = 0; i < static_cast<int>(bodies_.size()); ++i) {
            const auto [ix, iy] = cell_of(bodies_[i].p.position);
            grid[static_cast<std::size_t>(iy) * nx + ix].push_back(i);
        }
        for (int i = 0; i < static_cast<int>(bodies_.size()); ++i) {
            const Body& a = bodies_[i];
            const auto [ix, iy] = cell_of(a.p.position);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int jx = ix + dx, jy = iy + dy;
                    if (jx < 0 || jy < 0 || jx >= nx || jy >= ny) continue;
                    for (int j : grid[static_cast<std::size_t>(jy) * nx + jx]) {
                        if (j <= i) continue;
                        const Body& b = bodies_[j];
                        const Vec2 d = b.p.position - a.p.position;
                        const double dist = d.norm();
                        const double pen = a.r + b.r - dist;
                        if (pen <= 0.0 || dist <= 1e-9) continue;
                        Contact c;
                        c.i = i;
                        c.j = j;
                        c.n = d * (1.0 / dist);
                        c.pen = pen;
                        c.len_i = a.r - 0.5 * pen;
                        c.len_j = b.r - 0.5 * pen;
                        contacts.push_back(c);
                    }
                }
            }
        }
        // Wall contacts: floor and side walls.
        for (int i = 0; i < static_cast<int>(bodies_.size()); ++i) {
            const Body& b = bodies_[i];
            auto add_wall = [&](Vec2 n, double pen) {
                if (pen <= 0.0) return;
                Contact c;
                c.i = i;
                c.j = -1;
                c.n = n;
                c.pen = pen;
                c.len_i = b.r - 0.5 * pen;
                c.len_j = 0.0;
                contacts.push_back(c);
            };
            add_wall({0.0, -1.0}, b.r - b.p.position.y);
            add_wall({-1.0, 0.0}, b.r - (b.p.position.x - geo_.x0));
            add_wall({1.0, 0.0}, b.r - (geo_.x1 - b.p.position.x));
        }
        std::sort(contacts.begin(), contacts.end(), [](const Contact& a, const Contact& b) {
            return std::tie(a.i, a.j, a.n.x, a.n.y) < std::tie(b.i, b.j, b.n.x, b.n.y);
        });
        return contacts;
    }

    // Relative velocity of j's surface w.r.t. i's surface at the contact.
    Vec2 rel_velocity(const Contact& c) const {
        const Body& a = bodies_[c.i];
        const Vec2 ri = c.n * c.len_i;
        Vec2 v = a.p.velocity + perp(ri) * a.w;
        if (c.j >= 0) {
            const Body& b = bodies_[c.j];
            const Vec2 rj = c.n * (-c.len_j);
            return (b.p.velocity + perp(rj) * b.w) - v;
        }
        return Vec2{0.0, 0.0} - v;
    }

    void apply_impulse(const Contact& c, Vec2 impulse) {
        Body& a = bodies_[c.i];
        const Vec2 ri = c.n * c.len_i;
        a.p.velocity += impulse * (-a.inv_m);
        a.w += -cross(ri, impulse) * a.inv_i;
        if (c.j >= 0) {
            Body& b = bodies_[c.j];
            const Vec2 rj = c.n * (-c.len_j);
            b.p.velocity += impulse * b.inv_m;
            b.w += cross(rj, impulse) * b.inv_i;
        }
    }

    void integrate(double dt) {
        for (auto& b : bodies_) b.p.velocity.y -= prm_.gravity * dt;
        auto contacts = find_contacts();
        for (auto& c : contacts) {
            const Body& a = bodies_[c.i];
            const double inv_mj = c.j >= 0 ? bodies_[c.j].inv_m : 0.0;
            const double inv_ij = c.j >= 0 ? bodies_[c.j].inv_i : 0.0;
            c.inv_mass_n = a.inv_m + inv_mj;
            c.inv_mass_t = a.inv_m + inv_mj + c.len_i * c.len_i * a.inv_i +
                           c.len_j * c.len_j * inv_ij;
            c.inv_inertia_sum = a.inv_i + inv_ij;
            c.vn0 = rel_velocity(c).dot(c.n);
            const double rest =
                c.vn0 < -2.0 * prm_.gravity * dt ? -prm_.restitution * c.vn0 : 0.0;
            const double stab = std::min(
                prm_.baumgarte * std::max(c.pen - prm_.slop, 0.0) / dt, prm_.bias_cap);
            c.bias = std::max(rest, stab);
        }
        const double cohesion_impulse = prm_.cohesion * dt;
        for (int iter = 0; iter < prm_.iterations; ++iter) {
            for (auto& c : contacts) {
                // Normal: drive approach speed to the bias target.
                const double vn = rel_velocity(c).dot(c.n);
                double djn = (c.bias - vn) / c.inv_mass_n;
                const double jn_new = std::max(c.jn + djn, -cohesion_impulse);
                djn = jn_new - c.jn;
                c.jn = jn_new;
                apply_impulse(c, c.n * (-djn));
                // Coulomb friction on the tangent.
                const Vec2 t = perp(c.n);
                const double vt = rel_velocity(c).dot(t);
                double djt = -vt / c.inv_mass_t;
                const double max_t = prm_.friction * std::max(c.jn, 0.0);
                const double jt_new = std::clamp(c.jt + djt, -max_t, max_t);
                djt = jt_new - c.jt;
                c.jt = jt_new;
                apply_impulse(c, t * djt);
                // Rolling resistance on the relative spin.
                if (c.inv_inertia_sum > 0.0 && prm_.rolling > 0.0) {
                    const Body& a = bodies_[c.i];
                    const double wj = c.j >= 0 ? bodies_[c.j].w : 0.0;
                    const double wrel = wj - a.w;
                    double djr = -wrel / c.inv_inertia_sum;
                    const double r_eff = c.len_j > 0.0
                                             ? c.len_i * c.len_j / (c.len_i + c.len_j)
                                             : c.len_i;
                    const double max_r = prm_.rolling * std::max(c.jn, 0.0) * r_eff;
                    const double jr_new = std::clamp(c.jr + djr, -max_r, max_r);
                    djr = jr_new - c.jr;
                    c.jr = jr_new;
                    bodies_[c.i].w -= djr * bodies_[c.i].inv_i;
                    if (c.j >= 0) bodies_[c.j].w += djr * bodies_[c.j].inv_i;
                }
            }
        }
        for (auto& b : bodies_) {
            if (b.p.velocity.norm() > prm_.max_speed)
                throw invalid_state("dem2d: solver divergence (velocity bound exceeded)");
            b.p.position += b.p.velocity * dt;
        }
        // Direct overlap projection keeps resting penetration near the slop.
        for (int pass = 0; pass < prm_.position_iterations; ++pass) {
            for (const auto& c : contacts) {
                Body& a = bodies_[c.i];
                double pen;
                Vec2 n;
                if (c.j >= 0) {
                    Body& b = bodies_[c.j];
                    const Vec2 d = b.p.position - a.p.position;
                    const double dist = d.norm();
                    if (dist <= 1e-9) continue;
                    pen = a.r + b.r - dist;
                    n = d * (1.0 / dist);
                    if (pen <= prm_.slop) continue;
                    const double corr = 0.4 * (pen - prm_.slop);
                    const double wsum = a.inv_m + b.inv_m;
                    a.p.position += n * (-corr * a.inv_m / wsum);
                    b.p.position += n * (corr * b.inv_m / wsum);
                } else {
                    pen = contact_wall_pen(a, c.n);
                    if (pen <= prm_.slop) continue;
                    a.p.position += c.n * (-0.4 * (pen - prm_.slop));
                }
            }
        }
    }

    double contact_wall_pen(const Body& b, Vec2 n) const {
        if (n.y < -0.5) return b.r - b.p.position.y;
        if (n.x < -0.5) return b.r - (b.p.position.x - geo_.x0);
        return b.r - (geo_.x1 - b.p.position.x);
    }

    void capture(std::vector<PseudoParticle>& out) {
        const double halfw = 0.5 * geo_.outlet_width;
        std::vector<std::pair<double, int>> near;  // (y, index)
        for (int i = 0; i < static_cast<int>(bodies_.size()); ++i) {
            const Body& b = bodies_[i];
            if (std::abs(b.p.position.x - geo_.outlet_x) <= halfw &&
                b.p.position.y <= b.r + 0.3)
                near.emplace_back(b.p.position.y, i);
        }
        std::sort(near.begin(), near.end());
        std::vector<int> taken;
        for (const auto& [y, i] : near) {
            if (bodies_[i].p.mass > budget_) break;
            budget_ -= bodies_[i].p.mass;
            taken.push_back(i);
        }
        std::sort(taken.begin(), taken.end(), std::greater<>());
        for (int i : taken) {
            body_mass_ -= bodies_[i].p.mass;
            out.push_back(std::move(bodies_[i].p));
            bodies_.erase(bodies_.begin() + i);
        }
        // Restore deterministic emission order (nearest outlet first).
        std::sort(out.begin(), out.end(),
                  [](const PseudoParticle& a, const PseudoParticle& b) {
                      return std::pair{a.position.y, a.id} < std::pair{b.position.y, b.id};
                  });
    }

    PileGeometry geo_;
    FunnelSpec funnel_;
    Dem2dParams prm_;
    Rng rng_;
    std::vector<Body> bodies_;
    std::deque<Pending> pending_;
    double body_mass_ = 0.0;
    double pending_mass_ = 0.0;
    double budget_ = 0.0;
};

}  // namespace oretrack
