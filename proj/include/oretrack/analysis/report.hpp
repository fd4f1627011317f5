#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oretrack/analysis/backtrack.hpp"
#include "oretrack/analysis/bwi.hpp"
#include "oretrack/analysis/mwd.hpp"
#include "oretrack/analysis/timeseries.hpp"
#include "oretrack/io/csv.hpp"
#include "oretrack/sim/scenario.hpp"

namespace oretrack {

// Sensor payload values for one asset/key as a time series.
inline TimeSeries sensor_series(const Historian& hist, const AssetId& asset,
                                const std::string& key) {
    TimeSeries s;
    for (const auto& e : hist.events()) {
        if (e.asset != asset || e.type != EventType::sensor_sample) continue;
        const auto it = e.payload.find(key);
        if (it == e.payload.end()) continue;
        if (!s.empty() && e.time <= s.t.back()) continue;
        s.push(e.time, it->second);
    }
    return s;
}

// Mass-weighted attribute of the particles moved by events of one type (e.g.
// the hardness of material discharged from the pile over time).
inline TimeSeries event_batch_series(const Historian& hist, const AssetId& asset,
                                     EventType type,
                                     const std::function<double(const PseudoParticle&)>& attr) {
    TimeSeries s;
    for (const auto& e : hist.events()) {
        if (e.asset != asset || e.type != type || e.particles.empty()) continue;
        double num = 0.0, den = 0.0;
        for (const auto& [pid, state] : e.particles) {
            num += state.mass * attr(state);
            den += state.mass;
        }
        if (den <= 0.0) continue;
        if (!s.empty() && e.time <= s.t.back()) continue;
        s.push(e.time, num / den);
    }
    return s;
}

struct AnalysisOutput {
    std::vector<std::string> files;
    std::vector<std::string> warnings;
};

// Dispatches an analysis spec (JSON) against a loaded log and writes one CSV
// per requested output. The scenario snapshot embedded in the log header
// supplies asset parameters and the block model.
inline AnalysisOutput run_analysis(const Historian& hist, const nlohmann::json& spec,
                                   const std::string& outdir) {
    AnalysisOutput result;
    std::filesystem::create_directories(outdir);
    const BinningPtr bins = Historian::binning_from_meta(hist.meta());
    Scenario scenario;
    bool have_scenario = false;
    if (hist.meta().contains("scenario")) {
        try {
            scenario = scenario_from_json(hist.meta().at("scenario"));
            have_scenario = true;
        } catch (const std::exception& e) {
            result.warnings.push_back(std::string("scenario snapshot unusable: ") + e.what());
        }
    }
    auto out_path = [&](const nlohmann::json& o, const char* fallback) {
        return (std::filesystem::path(outdir) / o.value("file", std::string(fallback)))
            .string();
    };
    for (const auto& o : spec.value("outputs", nlohmann::json::array())) {
        const std::string type = o.at("type").get<std::string>();
        if (type == "series") {
            const AssetId asset = o.at("asset").get<std::string>();
            const std::string key = o.at("key").get<std::string>();
            TimeSeries s = sensor_series(hist, asset, key);
            if (s.empty()) {
                result.warnings.push_back("series " + asset + "/" + key + " is empty");
                continue;
            }
            const double w = o.value("window_s", 0.0);
            const std::string path = out_path(o, (asset + "_" + key + ".csv").c_str());
            if (w > 0.0) {
                const TimeSeries ma = moving_average(s, w);
                CsvWriter csv(path, {"time_s", key, key + "_ma"});
                for (std::size_t i = 0; i < s.size(); ++i)
                    csv.row({s.t[i], s.v[i], ma.v[i]});
            } else {
                CsvWriter csv(path, {"time_s", key});
                for (std::size_t i = 0; i < s.size(); ++i) csv.row({s.t[i], s.v[i]});
            }
            result.files.push_back(path);
        } else if (type == "step_response") {
            const AssetId asset = o.at("asset").get<std::string>();
            const std::string key = o.at("key").get<std::string>();
            const TimeSeries s = sensor_series(hist, asset, key);
            const auto r = step_response_metrics(s, o.at("step_time_s").get<double>(),
                                                 o.value("window_s", 30.0));
            const std::string path = out_path(o, (asset + "_step.csv").c_str());
            CsvWriter csv(path, {"pre_plateau", "post_plateau", "relative_increase",
                                 "delay_s", "oscillation_period_s", "conclusive"});
            csv.row({r.pre_plateau, r.post_plateau, r.relative_increase, r.delay,
                     r.oscillation_period.value_or(0.0), r.conclusive ? 1.0 : 0.0});
            result.files.push_back(path);
        } else if (type == "fit_mwd") {
            if (!have_scenario || !scenario.crusher) {
                result.warnings.push_back("fit_mwd: no crusher parameters in log header");
                continue;
            }
            const auto samples =
                build_zone_history(hist, scenario.crusher->id, *scenario.crusher, bins);
            const auto fit = fit_mwd_beta(samples);
            const std::string path = out_path(o, "mwd_fit.csv");
            CsvWriter csv(path, {"beta", "residual", "identifiable", "samples"});
            csv.row({fit.beta, fit.residual, fit.identifiable ? 1.0 : 0.0,
                     static_cast<double>(samples.size())});
            result.files.push_back(path);
        } else if (type == "mwd_prediction") {
            // Predicted vs true hardness of each dumped load, given a fit.
            MwdFit fit;
            fit.beta = o.at("beta").get<double>();
            const std::string path = out_path(o, "mwd_prediction.csv");
            CsvWriter csv(path, {"time_s", "hardness_true", "hardness_predicted"});
            for (const auto& e : hist.events()) {
                if (e.type != EventType::truck_dump || e.particles.empty()) continue;
                double num_t = 0.0, num_p = 0.0, den = 0.0;
                for (const auto& [pid, state] : e.particles) {
                    const auto mwd = state.extrinsic.find("mwd");
                    if (mwd == state.extrinsic.end()) continue;
                    num_t += state.mass * state.hardness;
                    num_p += state.mass * predict_hardness_from_mwd(fit, mwd->second);
                    den += state.mass;
                }
                if (den > 0.0) csv.row({e.time, num_t / den, num_p / den});
            }
            result.files.push_back(path);
        } else if (type == "bwi") {
            const AssetId mill =
                o.value("asset", have_scenario && scenario.mill ? scenario.mill->id
                                                                : std::string("mill"));
            const auto series = bwi_timeseries(hist, mill, bins, o.value("window_s", 60.0));
            const std::string path = out_path(o, "bwi.csv");
            CsvWriter csv(path, {"time_s", "work_w_per_kg", "d80_in_m", "d80_out_m", "bwi",
                                 "grindability"});
            for (const auto& p : series.points)
                csv.row({p.t, p.work_per_mass, p.d80_in, p.d80_out, p.bwi, p.grindability});
            result.files.push_back(path);
            if (series.skipped > 0)
                result.warnings.push_back("bwi: skipped " + std::to_string(series.skipped) +
                                          " windows without resolvable flow");
        } else if (type == "backtrack") {
            if (!have_scenario || !scenario.mill) {
                result.warnings.push_back("backtrack: no mill in log header");
                continue;
            }
            const AssetId source = o.value("source", scenario.blocks.empty()
                                                         ? std::string()
                                                         : scenario.blocks.begin()->first);
            if (!scenario.blocks.count(source)) {
                result.warnings.push_back("backtrack: no block spec for source " + source);
                continue;
            }
            const SourceParams* sp = nullptr;
            for (const auto& s : scenario.sources)
                if (s.id == source) sp = &s;
            if (!sp) continue;
            const BlockSpec& bs = scenario.blocks.at(source);
            const auto count = static_cast<std::size_t>(
                std::ceil((sp->x1 - sp->x0) / bs.size));
            BlockModel blocks(sp->x0, bs.size, count, bs.size * sp->mass_per_meter,
                              bs.prior_g, bs.prior_alpha);
            const double window = o.value("window_s", 60.0);
            const auto series = bwi_timeseries(hist, scenario.mill->id, bins, window);
            blocks = backtrack_grindability(std::move(blocks), hist, scenario.mill->id,
                                            series, window);
            const std::string path = out_path(o, "blocks.csv");
            CsvWriter csv(path, {"block", "centre_x_m", "prior_g", "reconciled_g",
                                 "weight_sum", "mean_hardness"});
            for (const auto& b : blocks.blocks()) {
                const double h0 = sp->hardness(b.centre_x - 0.5 * b.extent);
                const double h1 = sp->hardness(b.centre_x);
                const double h2 = sp->hardness(b.centre_x + 0.5 * b.extent);
                csv.row({static_cast<double>(b.index), b.centre_x, b.prior_grindability,
                         b.reconciled(), b.acc_den, (h0 + h1 + h2) / 3.0});
            }
            result.files.push_back(path);
        } else if (type == "audit") {
            const double t = o.value("time_s", std::numeric_limits<double>::max());
            const auto mb = hist.mass_balance_audit(t);
            const std::string path = out_path(o, "audit.csv");
            CsvWriter csv(path, {"asset", "mass_in_kg", "mass_out_kg", "flux_out_kg",
                                 "held_kg", "residual_kg"});
            for (const auto& [asset, l] : mb.assets)
                csv.row_strings({asset, format_double(l.mass_in), format_double(l.mass_out),
                                 format_double(l.flux_out), format_double(l.held_reported),
                                 format_double(l.residual)});
            csv.row_strings({"GLOBAL", format_double(mb.total_in),
                             format_double(mb.total_out), "", "",
                             format_double(mb.global_residual)});
            result.files.push_back(path);
        } else {
            result.warnings.push_back("unknown analysis output type: " + type);
        }
    }
    return result;
}

}  // namespace oretrack
