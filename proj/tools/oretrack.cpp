// oretrack: run, validate, analyze and query mine-to-mill tracking scenarios.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "oretrack/analysis/report.hpp"
#include "oretrack/sim/simulation.hpp"

namespace fs = std::filesystem;
using namespace oretrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int cmd_validate(const std::string& path) {
    nlohmann::json j;
    {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "cannot open " << path << "\n";
            return kExitValidation;
        }
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            std::cerr << "parse error: " << e.what() << "\n";
            return kExitValidation;
        }
    }
    try {
        const Scenario sc = scenario_from_json(j);
        const auto problems = validate_scenario(sc);
        if (problems.empty()) {
            std::cout << "ok: " << sc.name << "\n";
            return kExitOk;
        }
        for (const auto& p : problems) std::cerr << "invalid: " << p << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kExitValidation;
    }
}

int cmd_run(const std::string& path, const std::string& out_dir, const std::string& variant,
            bool dump_pile) {
    Scenario sc = load_scenario(path);
    const auto problems = validate_scenario(sc);
    if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "invalid: " << p << "\n";
        return kExitValidation;
    }
    fs::create_directories(out_dir);
    RunOptions opt;
    opt.log_path = (fs::path(out_dir) / "events.log").string();
    opt.variant = variant;
    Simulation sim(sc, opt);
    const RunSummary summary = sim.run();
    if (dump_pile && sim.stockpile()) {
        CsvWriter csv((fs::path(out_dir) / "pile_columns.csv").string(),
                      {"x_m", "height_m", "hardness", "concentration"});
        for (const auto& row : sim.stockpile()->column_report())
            csv.row({row[0], row[1], row[2], row[3]});
    }
    std::ofstream sum(fs::path(out_dir) / "summary.json");
    sum << summary.to_json().dump(2) << "\n";
    std::cout << summary.to_json().dump(2) << "\n";
    return kExitOk;
}

int cmd_analyze(const std::string& log_path, const std::string& spec_path,
                const std::string& out_dir) {
    const Historian hist = Historian::load(log_path);
    nlohmann::json spec;
    std::ifstream in(spec_path);
    if (!in) {
        std::cerr << "cannot open " << spec_path << "\n";
        return kExitValidation;
    }
    in >> spec;
    const auto out = run_analysis(hist, spec, out_dir);
    for (const auto& f : out.files) std::cout << "wrote " << f << "\n";
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
    return kExitOk;
}

int cmd_query_trace(const std::string& log_path, ParticleId id) {
    const Historian hist = Historian::load(log_path);
    const auto trace = hist.trace_particle(id);
    std::cout << "time_s,event,asset,mass_kg,x_m,y_m\n";
    for (const auto* e : trace) {
        double mass = 0.0;
        for (const auto& [pid, state] : e->particles)
            if (pid == id) mass = state.mass;
        std::cout << format_double(e->time) << ',' << to_string(e->type) << ',' << e->asset
                  << ',' << format_double(mass) << ',' << format_double(e->location.x) << ','
                  << format_double(e->location.y) << "\n";
    }
    return kExitOk;
}

int cmd_query_origin(const std::string& log_path, double x0, double x1,
                     const std::string& asset, double t0, double t1) {
    const Historian hist = Historian::load(log_path);
    std::optional<AssetId> filter;
    if (!asset.empty()) filter = asset;
    const auto ids = hist.query_origin(x0, x1, filter, t0, t1);
    std::cout << "particle_id\n";
    for (const auto id : ids) std::cout << id << "\n";
    return kExitOk;
}

int cmd_query_audit(const std::string& log_path, double t) {
    const Historian hist = Historian::load(log_path);
    const auto mb = hist.mass_balance_audit(t);
    std::cout << "asset,mass_in_kg,mass_out_kg,flux_out_kg,held_kg,residual_kg\n";
    for (const auto& [asset, l] : mb.assets)
        std::cout << asset << ',' << format_double(l.mass_in) << ','
                  << format_double(l.mass_out) << ',' << format_double(l.flux_out) << ','
                  << format_double(l.held_reported) << ',' << format_double(l.residual)
                  << "\n";
    std::cout << "GLOBAL," << format_double(mb.total_in) << ','
              << format_double(mb.total_out) << ",,," << format_double(mb.global_residual)
              << "\n";
    return kExitOk;
}

// Runs the pile scenario on the DEM backend, recording the velocity field.
int cmd_rom_record(const std::string& path, const std::string& rom_out,
                   const std::string& variant, double cell) {
    Scenario sc = load_scenario(path);
    if (!sc.stockpile) {
        std::cerr << "invalid: rom record needs a stockpile scenario\n";
        return kExitValidation;
    }
    StockpileParams p = *sc.stockpile;
    const std::string vname =
        variant.empty() ? (sc.variants.empty() ? "" : sc.variants.begin()->first) : variant;
    if (!vname.empty()) p.discharge = sc.variants.at(vname).discharge;
    Dem2dPile pile(p.geometry, p.dem, derive_stream(sc.seed, p.id));
    // Run the scripted deposits and discharge on the bare backend; the
    // recorder starts (and fixes its fill reference) at first discharge.
    Rng feed = derive_stream(sc.seed, "feed");
    ParticleId next_id = 1;
    const PileScriptVariant script =
        vname.empty() ? PileScriptVariant{} : sc.variants.at(vname);
    std::unique_ptr<RomRecorder> recorder;
    std::size_t next_dep = 0;
    const auto steps = static_cast<std::size_t>(std::llround(sc.duration / sc.dt));
    double ref_mass = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) * sc.dt;
        while (next_dep < script.deposits.size() && script.deposits[next_dep].t <= t) {
            const auto& dep = script.deposits[next_dep++];
            std::vector<PseudoParticle> batch;
            double total = 0.0;
            while (total < dep.mass) {
                PseudoParticle q;
                q.id = next_id++;
                q.mass = feed.uniform(60.0, 140.0);
                q.spawn_mass = q.mass;
                q.diameter = std::cbrt(6.0 * q.mass / (2800.0 * 3.14159265358979323846));
                q.hardness = dep.hardness;
                q.concentration = dep.concentration;
                q.psd = rosin_rammler(sc.bins, sc.blast_d63, sc.blast_n);
                q.current_asset = p.id;
                total += q.mass;
                batch.push_back(std::move(q));
            }
            pile.deposit(std::move(batch),
                         p.geometry.inlets_x.at(std::min(dep.inlet,
                                                         p.geometry.inlets_x.size() - 1)));
        }
        const double q = p.discharge.at(t);
        if (q > 0.0 && !recorder) {
            ref_mass = pile.held_mass();
            recorder = std::make_unique<RomRecorder>(p.geometry, cell, ref_mass,
                                                     sc.name + "/" + vname);
        }
        pile.discharge_step(q, t, sc.dt);
        if (q > 0.0 && recorder) recorder->sample(pile, q);
    }
    if (!recorder) {
        std::cerr << "invalid: the discharge schedule never turns on\n";
        return kExitValidation;
    }
    VelocityFieldRom rom = recorder->finish();
    rom.save(rom_out);
    std::cout << "wrote " << rom_out << " (ref mass " << format_double(ref_mass) << " kg)\n";
    return kExitOk;
}

int cmd_rom_play(const std::string& path, const std::string& rom_file,
                 const std::string& out_dir, const std::string& variant) {
    Scenario sc = load_scenario(path);
    if (!sc.stockpile) {
        std::cerr << "invalid: rom play needs a stockpile scenario\n";
        return kExitValidation;
    }
    sc.stockpile->backend = PileBackendKind::rom;
    sc.stockpile->rom_file = rom_file;
    sc.raw["stockpile"]["backend"] = "rom";
    sc.raw["stockpile"]["rom_file"] = rom_file;
    fs::create_directories(out_dir);
    RunOptions opt;
    opt.log_path = (fs::path(out_dir) / "events.log").string();
    opt.variant = variant;
    const auto result = run_scenario(sc, opt);
    std::cout << result.summary.to_json().dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pseudo-particle material tracking simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", variant, log_path, spec_path;
    std::string rom_file = "rom.json";
    bool dump_pile = false;

    auto* run = app.add_subcommand("run", "run a scenario and write the event log");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--variant", variant, "pile scenario variant");
    run->add_flag("--dump-pile", dump_pile, "write pile_columns.csv at the end");

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

    auto* analyze = app.add_subcommand("analyze", "produce CSV reports from a log");
    analyze->add_option("log", log_path, "event log")->required();
    analyze->add_option("--spec", spec_path, "analysis spec JSON")->required();
    analyze->add_option("--out", out_dir, "output directory");

    auto* query = app.add_subcommand("query", "query an event log");
    query->require_subcommand(1);
    ParticleId pid = 0;
    double x0 = 0, x1 = 0, t0 = 0, t1 = std::numeric_limits<double>::max();
    double audit_t = std::numeric_limits<double>::max();
    std::string asset_filter;
    auto* trace = query->add_subcommand("trace", "events mentioning one particle");
    trace->add_option("log", log_path)->required();
    trace->add_option("--particle", pid, "particle id")->required();
    auto* origin = query->add_subcommand("origin", "particles by origin region");
    origin->add_option("log", log_path)->required();
    origin->add_option("--x0", x0, "region lower bound, m")->required();
    origin->add_option("--x1", x1, "region upper bound, m")->required();
    origin->add_option("--asset", asset_filter, "presence filter asset");
    origin->add_option("--t0", t0, "presence window start, s");
    origin->add_option("--t1", t1, "presence window end, s");
    auto* audit = query->add_subcommand("audit", "per-asset mass ledger");
    audit->add_option("log", log_path)->required();
    audit->add_option("--time", audit_t, "audit time, s");

    auto* rom = app.add_subcommand("rom", "record or play a velocity-field ROM");
    rom->require_subcommand(1);
    double rom_cell = 1.0;
    auto* record = rom->add_subcommand("record", "run DEM and record the field");
    record->add_option("scenario", scenario_path)->required();
    record->add_option("--out", rom_file, "ROM output file");
    record->add_option("--variant", variant, "pile scenario variant");
    record->add_option("--cell", rom_cell, "field cell size, m");
    auto* play = rom->add_subcommand("play", "run the scenario on the recorded field");
    play->add_option("scenario", scenario_path)->required();
    play->add_option("--rom", rom_file, "ROM file")->required();
    play->add_option("--out", out_dir, "output directory");
    play->add_option("--variant", variant, "pile scenario variant");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(scenario_path, out_dir, variant, dump_pile);
        if (*validate) return cmd_validate(scenario_path);
        if (*analyze) return cmd_analyze(log_path, spec_path, out_dir);
        if (*query) {
            if (*trace) return cmd_query_trace(log_path, pid);
            if (*origin) return cmd_query_origin(log_path, x0, x1, asset_filter, t0, t1);
            if (*audit) return cmd_query_audit(log_path, audit_t);
        }
        if (*rom) {
            if (*record) return cmd_rom_record(scenario_path, rom_file, variant, rom_cell);
            if (*play) return cmd_rom_play(scenario_path, rom_file, out_dir, variant);
        }
    } catch (const invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
