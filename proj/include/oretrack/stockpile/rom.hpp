#pragma once

#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "oretrack/stockpile/dem2d.hpp"

namespace oretrack {

// Recorded velocity-field reduced-order model: per-cell mean particle
// velocity keyed by (discharge-rate bucket, fill-level bucket). Playback
// replaces contact-force computation by advecting particles with the
// interpolated field.
class VelocityFieldRom {
  public:
    struct Cell {
        double vx_sum = 0.0;
        double vy_sum = 0.0;
        double n = 0.0;
        bool flagged = false;  // insufficient samples

        Vec2 mean() const { return n > 0.0 ? Vec2{vx_sum / n, vy_sum / n} : Vec2{}; }
    };

    VelocityFieldRom() = default;
    VelocityFieldRom(double x0, double y0, double cell, int nx, int ny, double ref_mass,
                     std::string provenance)
        : x0_(x0), y0_(y0), cell_(cell), nx_(nx), ny_(ny), ref_mass_(ref_mass),
          provenance_(std::move(provenance)) {}

    double ref_mass() const { return ref_mass_; }
    const std::string& provenance() const { return provenance_; }
    std::size_t bucket_count() const { return buckets_.size(); }

    int fill_bucket(double held_mass) const {
        if (ref_mass_ <= 0.0) return 0;
        return static_cast<int>(std::clamp(held_mass / ref_mass_, 0.0, 0.9999) / 0.05);
    }
    static long rate_key(double q) { return std::lround(q * 1000.0); }

    void accumulate(double q, double held_mass, Vec2 pos, Vec2 vel) {
        auto& grid = buckets_[{rate_key(q), fill_bucket(held_mass)}];
        if (grid.empty()) grid.resize(static_cast<std::size_t>(nx_) * ny_);
        const int ix = std::clamp(static_cast<int>((pos.x - x0_) / cell_), 0, nx_ - 1);
        const int iy = std::clamp(static_cast<int>((pos.y - y0_) / cell_), 0, ny_ - 1);
        Cell& c = grid[static_cast<std::size_t>(iy) * nx_ + ix];
        c.vx_sum += vel.x;
        c.vy_sum += vel.y;
        c.n += 1.0;
    }

    // Marks cells with fewer samples than the threshold.
    std::size_t finalize(double min_samples = 10.0) {
        std::size_t flagged = 0;
        for (auto& [key, grid] : buckets_)
            for (auto& c : grid)
                if (c.n > 0.0 && c.n < min_samples) {
                    c.flagged = true;
                    ++flagged;
                }
        return flagged;
    }

    // Field lookup: bilinear over covered cells; an uncovered position falls
    // back to the nearest covered cell (the caller counts those).
    Vec2 sample(double q, double held_mass, Vec2 pos, bool* fallback = nullptr) const {
        const auto it = nearest_bucket(q, held_mass);
        if (it == buckets_.end()) {
            if (fallback) *fallback = true;
            return {};
        }
        const auto& grid = it->second;
        const double fx = (pos.x - x0_) / cell_ - 0.5;
        const double fy = (pos.y - y0_) / cell_ - 0.5;
        const int ix = static_cast<int>(std::floor(fx));
        const int iy = static_cast<int>(std::floor(fy));
        const double ux = fx - ix, uy = fy - iy;
        double w_sum = 0.0;
        Vec2 v{};
        for (int dy = 0; dy <= 1; ++dy) {
            for (int dx = 0; dx <= 1; ++dx) {
                const int cx = ix + dx, cy = iy + dy;
                if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) continue;
                const Cell& c = grid[static_cast<std::size_t>(cy) * nx_ + cx];
                if (c.n <= 0.0) continue;
                const double w = (dx ? ux : 1.0 - ux) * (dy ? uy : 1.0 - uy);
                v += c.mean() * w;
                w_sum += w;
            }
        }
        if (w_sum > 1e-9) return v * (1.0 / w_sum);
        if (fallback) *fallback = true;
        return nearest_cell_value(grid, pos);
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw invalid_argument("rom: cannot write " + path);
        nlohmann::json h;
        h["format"] = "oretrack-rom";
        h["version"] = 1;
        h["provenance"] = provenance_;
        h["grid"] = {{"x0", x0_}, {"y0", y0_}, {"cell", cell_}, {"nx", nx_}, {"ny", ny_}};
        h["ref_mass"] = ref_mass_;
        out << h.dump() << '\n';
        for (const auto& [key, grid] : buckets_) {
            for (int iy = 0; iy < ny_; ++iy) {
                for (int ix = 0; ix < nx_; ++ix) {
                    const Cell& c = grid[static_cast<std::size_t>(iy) * nx_ + ix];
                    if (c.n <= 0.0) continue;
                    nlohmann::json row = {key.first, key.second, ix, iy,
                                          c.vx_sum, c.vy_sum, c.n, c.flagged};
                    out << row.dump() << '\n';
                }
            }
        }
    }

    static VelocityFieldRom load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw not_found("rom: cannot open " + path);
        std::string line;
        if (!std::getline(in, line)) throw invalid_state("rom: empty file");
        const auto h = nlohmann::json::parse(line);
        if (h.at("format") != "oretrack-rom") throw invalid_state("rom: bad header");
        const auto& g = h.at("grid");
        VelocityFieldRom rom(g.at("x0").get<double>(), g.at("y0").get<double>(),
                             g.at("cell").get<double>(), g.at("nx").get<int>(),
                             g.at("ny").get<int>(), h.at("ref_mass").get<double>(),
                             h.at("provenance").get<std::string>());
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto row = nlohmann::json::parse(line);
            auto& grid = rom.buckets_[{row[0].get<long>(), row[1].get<int>()}];
            if (grid.empty()) grid.resize(static_cast<std::size_t>(rom.nx_) * rom.ny_);
            Cell& c = grid[row[3].get<std::size_t>() * rom.nx_ + row[2].get<std::size_t>()];
            c.vx_sum = row[4].get<double>();
            c.vy_sum = row[5].get<double>();
            c.n = row[6].get<double>();
            c.flagged = row[7].get<bool>();
        }
        return rom;
    }

  private:
    using Key = std::pair<long, int>;  // (rate key, fill bucket)

    std::map<Key, std::vector<Cell>>::const_iterator nearest_bucket(double q,
                                                                    double held) const {
        const Key want{rate_key(q), fill_bucket(held)};
        auto best = buckets_.end();
        long best_cost = std::numeric_limits<long>::max();
        for (auto it = buckets_.begin(); it != buckets_.end(); ++it) {
            const long drate = std::labs(it->first.first - want.first);
            const long dfill = std::labs(it->first.second - want.second);
            const long cost = drate * 100 + dfill;
            if (cost < best_cost) {
                best_cost = cost;
                best = it;
            }
        }
        return best;
    }

    Vec2 nearest_cell_value(const std::vector<Cell>& grid, Vec2 pos) const {
        double best = std::numeric_limits<double>::max();
        Vec2 v{};
        for (int iy = 0; iy < ny_; ++iy) {
            for (int ix = 0; ix < nx_; ++ix) {
                const Cell& c = grid[static_cast<std::size_t>(iy) * nx_ + ix];
                if (c.n <= 0.0) continue;
                const Vec2 centre{x0_ + (ix + 0.5) * cell_, y0_ + (iy + 0.5) * cell_};
                const double d = (centre - pos).norm();
                if (d < best) {
                    best = d;
                    v = c.mean();
                }
            }
        }
        return v;
    }

    double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
    int nx_ = 0, ny_ = 0;
    double ref_mass_ = 0.0;
    std::string provenance_;
    std::map<Key, std::vector<Cell>> buckets_;
};

// Records the time-averaged flow field of a DEM pile while it runs.
class RomRecorder {
  public:
    RomRecorder(const PileGeometry& geo, double cell, double ref_mass, std::string run_id)
        : rom_(geo.x0, 0.0, cell,
               static_cast<int>(std::ceil(geo.width() / cell)),
               static_cast<int>(std::ceil((geo.inlet_height + 1.0) / cell)), ref_mass,
               std::move(run_id)) {}

    void sample(const Dem2dPile& pile, double q) {
        for (const auto& b : pile.bodies())
            rom_.accumulate(q, pile.held_mass(), b.p.position, b.p.velocity);
    }

    VelocityFieldRom finish(double min_samples = 10.0) {
        rom_.finalize(min_samples);
        return std::move(rom_);
    }

  private:
    VelocityFieldRom rom_;
};

// Playback backend: bulk particles are advected with the recorded field;
// deposits use the kinematic dispersion rule (resolved contact dynamics is
// what the field replaced).
class RomPile : public PileBackend {
  public:
    RomPile(PileGeometry geometry, VelocityFieldRom rom, Rng rng)
        : geo_(std::move(geometry)),
          funnel_(FunnelSpec::from(geo_)),
          rom_(std::move(rom)),
          rng_(rng) {}

    // Adopts an existing particle arrangement (e.g. the DEM pile state the
    // field was recorded from).
    void adopt(std::vector<PseudoParticle> particles) {
        for (auto& p : particles) {
            held_mass_ += p.mass;
            particles_.emplace(p.id, std::move(p));
        }
    }

    std::vector<PseudoParticle> deposit(std::vector<PseudoParticle> batch,
                                        double inlet_x) override {
        auto heights = heightfield();
        std::vector<PseudoParticle> placed;
        placed.reserve(batch.size());
        for (auto& p : batch) {
            const std::size_t c0 = geo_.column_of(inlet_x);
            const double drop = std::max(geo_.inlet_height - heights[c0], 0.0);
            const double x = std::clamp(inlet_x + gauss() * geo_.dispersion_per_drop * drop,
                                        geo_.x0 + 1e-6, geo_.x1 - 1e-6);
            const std::size_t c = geo_.column_of(x);
            p.position = {x, heights[c] + 0.5 * p.diameter};
            p.velocity = {0.0, 0.0};
            heights[c] += p.diameter;
            held_mass_ += p.mass;
            placed.push_back(p);
            particles_.emplace(p.id, std::move(p));
        }
        return placed;
    }

    std::vector<PseudoParticle> discharge_step(double q, double now, double dt) override {
        (void)now;
        if (q < 0.0) throw invalid_control("rom: negative discharge rate");
        std::vector<PseudoParticle> out;
        if (q <= 0.0) return out;
        for (auto& [id, p] : particles_) {
            bool fb = false;
            const Vec2 v = rom_.sample(q, held_mass_, p.position, &fb);
            if (fb) ++fallback_count_;
            p.velocity = v;
            p.position += v * dt;
            p.position.y = std::max(p.position.y, 0.0);
        }
        budget_ = std::min(budget_ + q * dt, std::max(q * 1.0, 400.0));
        const double halfw = std::max(0.5 * geo_.outlet_width, 0.5);
        std::vector<std::pair<double, ParticleId>> near;
        for (const auto& [id, p] : particles_)
            if (std::abs(p.position.x - geo_.outlet_x) <= halfw &&
                p.position.y <= p.diameter + 0.3)
                near.emplace_back(p.position.y, id);
        std::sort(near.begin(), near.end());
        for (const auto& [y, id] : near) {
            PseudoParticle& p = particles_.at(id);
            if (p.mass > budget_) break;
            budget_ -= p.mass;
            held_mass_ -= p.mass;
            out.push_back(std::move(p));
            particles_.erase(id);
        }
        return out;
    }

    double held_mass() const override { return held_mass_; }
    std::size_t count() const override { return particles_.size(); }

    void for_each_particle(
        const std::function<void(const PseudoParticle&)>& fn) const override {
        for (const auto& [id, p] : particles_) fn(p);
    }

    std::vector<double> heightfield() const override {
        std::vector<double> h(geo_.columns(), 0.0);
        for (const auto& [id, p] : particles_) {
            const std::size_t c = geo_.column_of(p.position.x);
            h[c] = std::max(h[c], p.position.y + 0.5 * p.diameter);
        }
        return h;
    }

    std::vector<const PseudoParticle*> predict_discharge(double q,
                                                         double horizon) const override {
        std::vector<const PseudoParticle*> out;
        if (q <= 0.0 || horizon <= 0.0) return out;
        for (const auto& [id, p] : particles_) {
            if (!funnel_.contains(p.position)) continue;
            if (funnel_.time_to_outlet(q, p.position, horizon) <= horizon)
                out.push_back(&p);
        }
        return out;
    }

    std::size_t fallback_count() const { return fallback_count_; }

  private:
    double gauss() {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        const double u1 = std::max(rng_.uniform01(), 1e-300);
        const double u2 = rng_.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * 3.14159265358979323846 * u2);
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    PileGeometry geo_;
    FunnelSpec funnel_;
    VelocityFieldRom rom_;
    Rng rng_;
    std::optional<double> spare_;
    std::map<ParticleId, PseudoParticle> particles_;
    double held_mass_ = 0.0;
    double budget_ = 0.0;
    std::size_t fallback_count_ = 0;
};

}  // namespace oretrack
