#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oretrack/assets/conveyor.hpp"
#include "oretrack/assets/crusher.hpp"
#include "oretrack/assets/mill.hpp"
#include "oretrack/assets/source.hpp"
#include "oretrack/assets/truck.hpp"
#include "oretrack/stockpile/stockpile.hpp"

namespace oretrack {

inline constexpr const char* kScenarioSchema = "oretrack-scenario/1";

struct ScriptDeposit {
    double t = 0.0;
    double mass = 0.0;    // kg, split into particles on spawn
    double hardness = 1.0;
    double concentration = 0.2;
    std::size_t inlet = 0;
};

struct PileScriptVariant {
    std::vector<ScriptDeposit> deposits;
    Schedule discharge;
};

struct BlockSpec {
    double size = 10.0;       // m
    double prior_g = 0.0;     // G_i^0
    double prior_alpha = 0.1;  // alpha_i^0
};

struct ConveyorSpec {
    ConveyorParams params;
    AssetId from;
    AssetId to;
};

struct Scenario {
    std::string name = "scenario";
    std::string kind = "chain";  // chain | pile
    double duration = 0.0;       // s
    double dt = 0.011;           // s
    std::uint64_t seed = 1;
    double sensor_period = 0.11;     // s
    double prediction_period = 1.0;  // s
    double d_min = 1e-5, d_max = 1.0;
    std::size_t classes = 16;
    double blast_d63 = 0.30, blast_n = 0.8;
    BinningPtr bins;
    std::vector<SourceParams> sources;
    std::vector<TruckParams> trucks;
    std::optional<CrusherParams> crusher;
    AssetId crusher_to;
    std::vector<ConveyorSpec> conveyors;
    std::optional<StockpileParams> stockpile;
    AssetId stockpile_to;
    std::optional<MillParams> mill;
    std::map<AssetId, BlockSpec> blocks;  // per source id
    std::map<std::string, PileScriptVariant> variants;
    nlohmann::json raw;
};

namespace detail {

inline Schedule schedule_from(const nlohmann::json& j) {
    if (j.is_number()) return Schedule(j.get<double>());
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : j) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return Schedule(std::move(pts));
}

inline Vec2 vec2_from(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline HardnessProfile hardness_from(const nlohmann::json& j, double x0, double x1) {
    HardnessProfile h;
    h.x0 = x0;
    h.x1 = x1;
    const std::string kind = j.value("kind", "constant");
    h.base = j.value("base", 1.0);
    h.value = j.value("value", 2.0);
    h.step_x = j.value("step_x_m", 0.5 * (x0 + x1));
    if (kind == "constant")
        h.kind = HardnessProfileKind::constant;
    else if (kind == "step")
        h.kind = HardnessProfileKind::step;
    else if (kind == "quadratic")
        h.kind = HardnessProfileKind::quadratic;
    else
        throw invalid_argument("unknown hardness profile kind: " + kind);
    return h;
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != kScenarioSchema)
        throw invalid_argument("scenario: missing or unsupported schema id");
    Scenario sc;
    sc.raw = j;
    sc.name = j.value("name", "scenario");
    sc.kind = j.value("kind", "chain");
    sc.duration = j.value("duration_s", 0.0);
    sc.dt = j.value("dt_s", 0.011);
    sc.seed = j.value("seed", std::uint64_t{1});
    sc.sensor_period = j.value("sensor_period_s", 0.11);
    sc.prediction_period = j.value("prediction_period_s", 1.0);
    if (j.contains("binning")) {
        const auto& b = j.at("binning");
        sc.d_min = b.value("d_min_m", 1e-5);
        sc.d_max = b.value("d_max_m", 1.0);
        sc.classes = b.value("classes", std::size_t{16});
    }
    sc.bins = make_log_bins(sc.d_min, sc.d_max, sc.classes);
    if (j.contains("blast_psd")) {
        sc.blast_d63 = j.at("blast_psd").value("d63_m", 0.30);
        sc.blast_n = j.at("blast_psd").value("n", 0.8);
    }
    const SizeDistribution blast = rosin_rammler(sc.bins, sc.blast_d63, sc.blast_n);
    for (const auto& s : j.value("sources", nlohmann::json::array())) {
        SourceParams p;
        p.id = s.at("id").get<std::string>();
        p.x0 = s.value("x0_m", 0.0);
        p.x1 = s.value("x1_m", 100.0);
        p.y = s.value("y_m", 0.0);
        p.hardness = detail::hardness_from(s.value("hardness", nlohmann::json::object()),
                                           p.x0, p.x1);
        p.concentration = s.value("concentration", 0.2);
        p.mwd_dx = s.value("mwd_dx_m", 0.0);
        p.mwd_exponent = s.value("mwd_exponent", 0.4);
        p.mass_per_meter = s.value("mass_per_meter_kgpm", 5000.0);
        p.finite_reserve = s.value("finite_reserve", true);
        p.blast_psd = blast;
        sc.sources.push_back(std::move(p));
        if (s.contains("blocks")) {
            BlockSpec b;
            b.size = s.at("blocks").value("size_m", 10.0);
            b.prior_g = s.at("blocks").value("prior_g", 0.0);
            b.prior_alpha = s.at("blocks").value("prior_alpha", 0.1);
            sc.blocks[sc.sources.back().id] = b;
        }
    }
    for (const auto& t : j.value("trucks", nlohmann::json::array())) {
        TruckParams p;
        p.id = t.at("id").get<std::string>();
        p.source = t.at("source").get<std::string>();
        p.capacity = t.value("capacity_kg", 15000.0);
        if (t.contains("cycle")) {
            const auto& c = t.at("cycle");
            p.load_s = c.value("load_s", 10.0);
            p.haul_s = c.value("haul_s", 40.0);
            p.dump_s = c.value("dump_s", 5.0);
            p.return_s = c.value("return_s", 55.0);
            p.phase_s = c.value("phase_s", 0.0);
        }
        if (t.contains("load_pos")) p.load_pos = detail::vec2_from(t.at("load_pos"));
        if (t.contains("dump_pos")) p.dump_pos = detail::vec2_from(t.at("dump_pos"));
        sc.trucks.push_back(std::move(p));
    }
    if (j.contains("crusher")) {
        const auto& c = j.at("crusher");
        CrusherParams p;
        p.id = c.value("id", std::string("crusher"));
        if (c.contains("position")) p.position = detail::vec2_from(c.at("position"));
        p.gap = c.value("gap_m", 0.25);
        p.omega = c.value("omega_radps", 10.0);
        p.k_oversize = c.value("k_oversize", 1.0);
        p.k_undersize = c.value("k_undersize", 0.1);
        p.throughput = c.value("throughput_kgps", 300.0);
        p.residence = c.value("residence_s", 1.0);
        sc.crusher = std::move(p);
        sc.crusher_to = c.value("discharge_to", "");
    }
    for (const auto& c : j.value("conveyors", nlohmann::json::array())) {
        ConveyorSpec spec;
        spec.params.id = c.at("id").get<std::string>();
        spec.params.length = c.value("length_m", 30.0);
        spec.params.bin_length = c.value("bin_length_m", 1.0);
        spec.params.speed = detail::schedule_from(c.value("speed_mps", nlohmann::json(2.0)));
        if (c.contains("tail_pos")) spec.params.tail_pos = detail::vec2_from(c.at("tail_pos"));
        if (c.contains("head_pos")) spec.params.head_pos = detail::vec2_from(c.at("head_pos"));
        spec.from = c.value("from", "");
        spec.to = c.value("to", "");
        sc.conveyors.push_back(std::move(spec));
    }
    if (j.contains("stockpile")) {
        const auto& s = j.at("stockpile");
        StockpileParams p;
        p.id = s.value("id", std::string("stockpile"));
        p.geometry.x0 = s.value("x0_m", 0.0);
        p.geometry.x1 = s.value("x1_m", 60.0);
        p.geometry.cell = s.value("cell_m", 0.5);
        p.geometry.outlet_x = s.value("outlet_x_m", 30.0);
        p.geometry.outlet_width = s.value("outlet_width_m", 1.0);
        p.geometry.inlet_height = s.value("inlet_height_m", 60.0);
        if (s.contains("inlets_x_m"))
            p.geometry.inlets_x = s.at("inlets_x_m").get<std::vector<double>>();
        p.geometry.capacity = s.value("capacity_kg", 2.0e6);
        p.geometry.repose_deg = s.value("repose_deg", 35.0);
        p.geometry.funnel_half_angle_deg = s.value("funnel_deg", 35.0);
        p.geometry.bulk_density = s.value("bulk_density_kgpm3", 1600.0);
        p.geometry.dispersion_per_drop = s.value("dispersion_per_drop", 0.05);
        p.geometry.avalanche_sweeps_per_step = s.value("avalanche_sweeps_per_step", 2);
        p.backend = pile_backend_from(s.value("backend", "kinematic"));
        if (s.contains("dem")) {
            const auto& d = s.at("dem");
            p.dem.restitution = d.value("restitution", 0.0);
            p.dem.friction = d.value("friction", 0.8);
            p.dem.rolling = d.value("rolling", 0.4);
            p.dem.cohesion = d.value("cohesion", 0.0);
            p.dem.iterations = d.value("iterations", 100);
        }
        p.rom_file = s.value("rom_file", "");
        p.discharge = detail::schedule_from(s.value("discharge_kgps", nlohmann::json(0.0)));
        p.prediction_horizon = s.value("prediction_horizon_s", 30.0);
        sc.stockpile = std::move(p);
        sc.stockpile_to = s.value("discharge_to", "");
    }
    if (j.contains("mill")) {
        const auto& m = j.at("mill");
        MillParams p;
        p.id = m.value("id", std::string("mill"));
        if (m.contains("position")) p.position = detail::vec2_from(m.at("position"));
        p.omega = detail::schedule_from(m.value("omega_radps", nlohmann::json(1.2)));
        p.omega_crit = m.value("omega_crit_radps", 1.5);
        p.m0 = m.value("m0_kg", 1000.0);
        p.mu_dr = m.value("mu_dr", 0.02);
        p.gravity = m.value("gravity_mps2", 9.8);
        p.r_mill = m.value("r_mill_m", 5.0);
        p.d_cl = m.value("d_cl_mm", 0.025) * 1e-3;
        p.k_cl = m.value("k_cl", 10.0);
        p.k_esc = m.value("k_esc_1ps", 1.0e3);
        p.d_gr = m.value("d_gr_mm", 1.0) * 1e-3;
        p.k_gr = m.value("k_gr", 1.0);
        p.d_gr_active = m.value("d_gr_active_mm", 1.0) * 1e-3;
        p.k_gr_active = m.value("k_gr_active", 1.0);
        p.e_ratio = m.value("e_ratio", 5.0e-8);
        p.rate_cap = m.value("rate_cap", 0.5);
        p.retire_fraction = m.value("retire_fraction", 0.01);
        p.redistribution = m.value("redistribution", std::string("conserving")) ==
                                   "paper_literal"
                               ? MillRedistribution::paper_literal
                               : MillRedistribution::conserving;
        sc.mill = std::move(p);
    }
    if (j.contains("pile_script")) {
        for (const auto& [name, v] : j.at("pile_script").at("variants").items()) {
            PileScriptVariant var;
            for (const auto& d : v.value("deposits", nlohmann::json::array())) {
                ScriptDeposit dep;
                dep.t = d.value("t_s", 0.0);
                dep.mass = d.value("mass_kg", 0.0);
                dep.hardness = d.value("hardness", 1.0);
                dep.concentration = d.value("concentration", 0.2);
                dep.inlet = d.value("inlet", std::size_t{0});
                var.deposits.push_back(dep);
            }
            var.discharge =
                detail::schedule_from(v.value("discharge_kgps", nlohmann::json(0.0)));
            sc.variants[name] = std::move(var);
        }
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw not_found("scenario: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return scenario_from_json(j);
}

// Structural and range checks; returns every problem found, not just the
// first.
inline std::vector<std::string> validate_scenario(const Scenario& sc) {
    std::vector<std::string> problems;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) problems.push_back(msg);
    };
    check(sc.dt > 0.0, "dt_s must be > 0");
    check(sc.duration >= 0.0, "duration_s must be >= 0");
    check(sc.classes >= 2, "binning: need at least 2 classes");
    check(sc.d_min > 0.0 && sc.d_max > sc.d_min, "binning: need 0 < d_min_m < d_max_m");
    check(sc.sensor_period >= sc.dt, "sensor_period_s must be >= dt_s");
    check(sc.kind == "chain" || sc.kind == "pile", "kind must be chain or pile");
    std::map<AssetId, int> ids;
    for (const auto& s : sc.sources) ids[s.id]++;
    for (const auto& t : sc.trucks) ids[t.id]++;
    if (sc.crusher) ids[sc.crusher->id]++;
    for (const auto& c : sc.conveyors) ids[c.params.id]++;
    if (sc.stockpile) ids[sc.stockpile->id]++;
    if (sc.mill) ids[sc.mill->id]++;
    for (const auto& [id, n] : ids) check(n == 1, "duplicate asset id: " + id);
    auto known = [&](const AssetId& id) { return ids.count(id) != 0; };
    for (const auto& s : sc.sources)
        check(s.x1 > s.x0, "source " + s.id + ": bench extent must be positive");
    for (const auto& t : sc.trucks) {
        check(known(t.source), "truck " + t.id + ": unknown source " + t.source);
        check(t.capacity > 0.0, "truck " + t.id + ": capacity must be > 0");
        check(t.period() > 0.0, "truck " + t.id + ": cycle period must be > 0");
        check(sc.crusher.has_value(), "truck " + t.id + ": no crusher to dump to");
    }
    if (sc.crusher) {
        check(sc.crusher->throughput > 0.0, "crusher: throughput must be > 0");
        check(sc.crusher->residence >= 0.0, "crusher: residence must be >= 0");
        if (!sc.crusher_to.empty())
            check(known(sc.crusher_to), "crusher: unknown discharge_to " + sc.crusher_to);
        else if (!sc.conveyors.empty())
            problems.push_back("crusher: discharge_to missing (dangling output)");
    }
    for (const auto& c : sc.conveyors) {
        check(c.params.length > 0.0, "conveyor " + c.params.id + ": length must be > 0");
        check(c.params.bin_length > 0.0,
              "conveyor " + c.params.id + ": bin length must be > 0");
        check(!c.from.empty() && known(c.from),
              "conveyor " + c.params.id + ": missing or unknown upstream endpoint");
        check(!c.to.empty() && known(c.to),
              "conveyor " + c.params.id + ": missing or unknown downstream endpoint");
        for (const auto& [t, v] : c.params.speed.points())
            check(v >= 0.0, "conveyor " + c.params.id + ": negative speed in schedule");
    }
    if (sc.stockpile) {
        const auto& g = sc.stockpile->geometry;
        check(g.x1 > g.x0, "stockpile: cross-section extent must be positive");
        check(g.capacity > 0.0, "stockpile: capacity must be > 0");
        check(g.outlet_x > g.x0 && g.outlet_x < g.x1, "stockpile: outlet outside section");
        check(g.bulk_density > 0.0, "stockpile: bulk density must be > 0");
        for (const auto& [t, v] : sc.stockpile->discharge.points())
            check(v >= 0.0, "stockpile: negative discharge rate in schedule");
        if (!sc.stockpile_to.empty())
            check(known(sc.stockpile_to),
                  "stockpile: unknown discharge_to " + sc.stockpile_to);
    }
    if (sc.kind == "pile") {
        check(sc.stockpile.has_value(), "pile scenario: stockpile section required");
        check(!sc.variants.empty(), "pile scenario: pile_script.variants required");
    }
    return problems;
}

}  // namespace oretrack
