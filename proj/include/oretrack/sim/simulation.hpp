#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <string>

#include "oretrack/sim/scenario.hpp"

namespace oretrack {

struct RunSummary {
    std::string scenario;
    std::string variant;
    double duration = 0.0;
    std::size_t steps = 0;
    std::size_t events = 0;
    double total_spawned = 0.0;  // kg
    double total_ground = 0.0;   // kg fine product
    double global_residual = 0.0;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const {
        return {{"scenario", scenario},        {"variant", variant},
                {"duration_s", duration},      {"steps", steps},
                {"events", events},            {"total_spawned_kg", total_spawned},
                {"total_ground_kg", total_ground},
                {"global_residual_kg", global_residual}};
    }
};

struct RunOptions {
    std::string log_path;  // stream the event log here when non-empty
    std::string variant;   // pile scenario variant; default: first
};

struct RunResult {
    RunSummary summary;
    Historian historian;
};

// Deterministic fixed-timestep loop. Assets advance in a documented round
// robin (sources, trucks, crusher, conveyors, stockpile, mill); sensor and
// flux events are emitted in a consistent end-of-step phase so the ledger is
// exact at sensor boundaries. Identical seed and config give a byte
// identical event log.
class Simulation {
  public:
    Simulation(const Scenario& sc, const RunOptions& opt) : sc_(sc), opt_(opt) {
        nlohmann::json meta;
        meta["scenario"] = sc.raw;
        meta["variant"] = opt.variant;
        meta["binning"] = {{"d_min", sc.d_min}, {"d_max", sc.d_max}, {"classes", sc.classes}};
        hist_ = Historian(std::move(meta));
        if (!opt.log_path.empty()) hist_.open_sink(opt.log_path);
        build();
    }

    RunSummary run() {
        const auto t0 = std::chrono::steady_clock::now();
        const auto steps = static_cast<std::size_t>(std::llround(sc_.duration / sc_.dt));
        const auto sensor_every =
            std::max<std::size_t>(1, static_cast<std::size_t>(
                                         std::llround(sc_.sensor_period / sc_.dt)));
        const auto pred_every =
            std::max<std::size_t>(1, static_cast<std::size_t>(
                                         std::llround(sc_.prediction_period / sc_.dt)));
        for (std::size_t i = 1; i <= steps; ++i) {
            const double t = static_cast<double>(i) * sc_.dt;
            step(t);
            if (i % sensor_every == 0 || i == steps) sensor_phase(t);
            if (stockpile_ && (i % pred_every == 0 || i == steps)) prediction_phase(t);
        }
        RunSummary summary;
        summary.scenario = sc_.name;
        summary.variant = opt_.variant;
        summary.duration = sc_.duration;
        summary.steps = steps;
        summary.events = hist_.size();
        for (const auto& s : sources_) summary.total_spawned += s->spawned_total();
        summary.total_spawned += script_spawned_;
        if (mill_) summary.total_ground = mill_->ground_total();
        summary.global_residual =
            hist_.mass_balance_audit(sc_.duration + 1.0).global_residual;
        summary.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hist_.close_sink();
        return summary;
    }

    // Accessors used by tests and the acceptance suite.
    MillAsset* mill() { return mill_.get(); }
    StockpileAsset* stockpile() { return stockpile_.get(); }
    CrusherAsset* crusher() { return crusher_.get(); }
    Historian& historian() { return hist_; }

  private:
    void build() {
        for (const auto& sp : sc_.sources)
            sources_.push_back(std::make_unique<SourceAsset>(
                sp, derive_stream(sc_.seed, sp.id), &hist_));
        if (sc_.mill) mill_ = std::make_unique<MillAsset>(*sc_.mill, sc_.bins, &hist_);
        if (sc_.stockpile) {
            StockpileParams p = *sc_.stockpile;
            if (sc_.kind == "pile") {
                const std::string v = variant_name();
                p.discharge = sc_.variants.at(v).discharge;
            }
            stockpile_ = std::make_unique<StockpileAsset>(
                p, StockpileAsset::make_backend(p, derive_stream(sc_.seed, p.id)), nullptr,
                &hist_);
        }
        for (const auto& cs : sc_.conveyors)
            conveyors_.push_back(
                std::make_unique<ConveyorAsset>(cs.params, nullptr, &hist_));
        if (sc_.crusher)
            crusher_ =
                std::make_unique<CrusherAsset>(*sc_.crusher, sc_.bins, nullptr, &hist_);
        // Wire the chain by id.
        std::map<AssetId, MaterialSink*> sinks;
        if (crusher_) sinks[crusher_->sink_id()] = crusher_.get();
        if (stockpile_) sinks[stockpile_->sink_id()] = stockpile_.get();
        if (mill_) sinks[mill_->sink_id()] = mill_.get();
        for (auto& c : conveyors_) sinks[c->sink_id()] = c.get();
        auto lookup = [&](const AssetId& id) -> MaterialSink* {
            auto it = sinks.find(id);
            return it == sinks.end() ? nullptr : it->second;
        };
        if (crusher_ && !sc_.crusher_to.empty()) crusher_->set_target(lookup(sc_.crusher_to));
        if (stockpile_ && !sc_.stockpile_to.empty())
            stockpile_->set_target(lookup(sc_.stockpile_to));
        for (std::size_t i = 0; i < conveyors_.size(); ++i)
            conveyors_[i]->set_target(lookup(sc_.conveyors[i].to));
        for (const auto& tp : sc_.trucks) {
            SourceAsset* src = nullptr;
            for (auto& s : sources_)
                if (s->id() == tp.source) src = s.get();
            TruckParams p = tp;
            if (crusher_ && p.dump_pos.x == 0.0 && p.dump_pos.y == 0.0)
                p.dump_pos = crusher_->params().position;
            trucks_.push_back(
                std::make_unique<TruckAsset>(p, src, crusher_.get(), &hist_));
        }
        if (sc_.kind == "pile") {
            script_ = sc_.variants.at(variant_name());
            script_rng_ = std::make_unique<Rng>(derive_stream(sc_.seed, "feed"));
        }
    }

    std::string variant_name() const {
        if (!opt_.variant.empty()) {
            if (!sc_.variants.count(opt_.variant))
                throw invalid_argument("unknown scenario variant: " + opt_.variant);
            return opt_.variant;
        }
        if (sc_.variants.empty()) throw invalid_argument("pile scenario without variants");
        return sc_.variants.begin()->first;
    }

    void step(double t) {
        // Script deposits are spawned by a pseudo-source feeding the pile.
        if (script_) run_script(t);
        for (auto& truck : trucks_) truck->step(t, sc_.dt, next_id_);
        if (crusher_) crusher_->step(t, sc_.dt);
        for (auto& c : conveyors_) c->step(t, sc_.dt);
        if (stockpile_) stockpile_->step(t, sc_.dt);
        if (mill_) mill_->step(t, sc_.dt);
    }

    void run_script(double t) {
        while (script_next_ < script_->deposits.size() &&
               script_->deposits[script_next_].t <= t) {
            const ScriptDeposit& dep = script_->deposits[script_next_++];
            std::vector<PseudoParticle> batch;
            double total = 0.0;
            while (total < dep.mass) {
                PseudoParticle p;
                p.id = next_id_++;
                p.mass = script_rng_->uniform(60.0, 140.0);
                p.spawn_mass = p.mass;
                p.diameter = std::cbrt(6.0 * p.mass / (2800.0 * 3.14159265358979323846));
                const auto& g = stockpile_->params().geometry;
                const double inlet_x = g.inlets_x.at(std::min(dep.inlet, g.inlets_x.size() - 1));
                p.origin = {inlet_x, g.inlet_height};
                p.position = p.origin;
                p.hardness = dep.hardness;
                p.concentration = dep.concentration;
                p.psd = rosin_rammler(sc_.bins, sc_.blast_d63, sc_.blast_n);
                p.current_asset = "feed";
                total += p.mass;
                batch.push_back(std::move(p));
            }
            script_spawned_ += total;
            TrackingEvent ev;
            ev.type = EventType::source_spawn;
            ev.asset = "feed";
            ev.location = batch.front().origin;
            ev.time = t;
            ev.particles = snapshot_tuples(batch);
            hist_.emit(std::move(ev));
            const auto& g = stockpile_->params().geometry;
            const double inlet_x =
                g.inlets_x.at(std::min(dep.inlet, g.inlets_x.size() - 1));
            stockpile_->try_deposit(std::move(batch), inlet_x, t);
        }
    }

    void sensor_phase(double t) {
        auto emit = [&](const AssetId& asset, Vec2 loc, std::map<std::string, double> payload) {
            TrackingEvent ev;
            ev.type = EventType::sensor_sample;
            ev.asset = asset;
            ev.location = loc;
            ev.time = t;
            ev.payload = std::move(payload);
            hist_.emit(std::move(ev));
        };
        for (auto& truck : trucks_)
            emit(truck->id(), truck->position(),
                 {{kHeldMassKey, truck->held_mass()}});
        if (crusher_)
            emit(crusher_->sink_id(), crusher_->params().position,
                 crusher_->sensor_payload());
        for (auto& c : conveyors_)
            emit(c->sink_id(), c->params().head_pos, c->sensor_payload());
        if (stockpile_)
            emit(stockpile_->sink_id(),
                 {stockpile_->params().geometry.outlet_x, 0.0},
                 stockpile_->sensor_payload());
        if (mill_) {
            mill_->flush_fines(t);
            emit(mill_->sink_id(), mill_->params().position, mill_->sensor_payload());
        }
    }

    void prediction_phase(double t) {
        TrackingEvent ev;
        ev.type = EventType::sensor_sample;
        ev.asset = stockpile_->sink_id();
        ev.location = {stockpile_->params().geometry.outlet_x, 0.0};
        ev.time = t;
        ev.payload = stockpile_->prediction_payload(t);
        hist_.emit(std::move(ev));
    }

    const Scenario& sc_;
    RunOptions opt_;
    Historian hist_;
    std::vector<std::unique_ptr<SourceAsset>> sources_;
    std::vector<std::unique_ptr<TruckAsset>> trucks_;
    std::unique_ptr<CrusherAsset> crusher_;
    std::vector<std::unique_ptr<ConveyorAsset>> conveyors_;
    std::unique_ptr<StockpileAsset> stockpile_;
    std::unique_ptr<MillAsset> mill_;
    ParticleId next_id_ = 1;
    std::optional<PileScriptVariant> script_;
    std::unique_ptr<Rng> script_rng_;
    std::size_t script_next_ = 0;
    double script_spawned_ = 0.0;
};

inline RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
    const auto problems = validate_scenario(sc);
    if (!problems.empty()) {
        std::string all = "scenario validation failed:";
        for (const auto& p : problems) all += "\n  - " + p;
        throw invalid_argument(all);
    }
    Simulation sim(sc, opt);
    RunResult result;
    result.summary = sim.run();
    result.historian = std::move(sim.historian());
    return result;
}

}  // namespace oretrack
