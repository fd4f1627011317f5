#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "oretrack/tracking/event.hpp"

namespace oretrack {

inline constexpr int kLogFormatVersion = 1;

// Payload keys with ledger semantics.
inline constexpr const char* kHeldMassKey = "held_mass_kg";
inline constexpr const char* kFineMassKey = "fine_mass_kg";

struct AssetLedger {
    double mass_in = 0.0;      // kg transferred into the asset
    double mass_out = 0.0;     // kg transferred out (particle transfers)
    double flux_out = 0.0;     // kg reported as fine-product mass flux
    double held_implied = 0.0;  // in - out - flux
    double held_reported = 0.0;  // last held-mass report at the cut, if any
    bool has_report = false;
    double residual = 0.0;  // in - out - flux - held
};

struct MassBalance {
    double cut_time = 0.0;  // consistent cut the ledger was evaluated at
    double total_in = 0.0;  // mass that entered the system (spawns)
    double total_out = 0.0;  // mass that left (retirements + fine flux)
    double global_residual = 0.0;
    std::map<AssetId, AssetLedger> assets;
};

// Append-only event log with synchronous in-process subscribers, derived
// indices, and JSON-lines persistence. Single writer; queries are read-only.
class Historian {
  public:
    using Subscriber = std::function<void(const TrackingEvent&)>;

    Historian() = default;
    explicit Historian(nlohmann::json meta) : meta_(std::move(meta)) {}

    // Streams every appended event to `path`. The header line is written
    // immediately; events follow one per line.
    void open_sink(const std::string& path) {
        sink_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
        if (!*sink_) throw invalid_argument("historian: cannot open log sink " + path);
        *sink_ << header_line() << '\n';
        for (const TrackingEvent& e : events_) *sink_ << to_json(e).dump() << '\n';
    }

    void close_sink() {
        if (sink_) {
            sink_->flush();
            sink_.reset();
        }
    }

    void subscribe(Subscriber fn) { subscribers_.push_back(std::move(fn)); }

    const nlohmann::json& meta() const { return meta_; }
    void set_meta(nlohmann::json meta) { meta_ = std::move(meta); }

    EventId emit(TrackingEvent event) {
        validate(event);
        event.event_id = next_id_++;
        const std::size_t idx = events_.size();
        // Index maintenance; replaying the log rebuilds these exactly.
        for (const auto& [pid, state] : event.particles) {
            if (event.type == EventType::source_spawn && !known_.count(pid)) {
                known_.insert(pid);
                origins_[pid] = state.origin;
            }
            by_particle_[pid].push_back(idx);
        }
        asset_clock_[event.asset] = event.time;
        by_asset_[event.asset].push_back(idx);
        events_.push_back(std::move(event));
        const TrackingEvent& stored = events_.back();
        if (sink_) *sink_ << to_json(stored).dump() << '\n';
        for (const auto& fn : subscribers_) fn(stored);
        return stored.event_id;
    }

    std::size_t size() const { return events_.size(); }
    const TrackingEvent& at(std::size_t i) const { return events_.at(i); }
    const std::vector<TrackingEvent>& events() const { return events_; }

    bool knows_particle(ParticleId id) const { return known_.count(id) != 0; }

    // All events mentioning the particle, in emission (= time) order.
    std::vector<const TrackingEvent*> trace_particle(ParticleId id) const {
        auto it = by_particle_.find(id);
        if (it == by_particle_.end()) throw not_found("trace_particle: unknown particle id");
        std::vector<const TrackingEvent*> out;
        out.reserve(it->second.size());
        for (std::size_t idx : it->second) out.push_back(&events_[idx]);
        return out;
    }

    std::vector<const TrackingEvent*> events_for_asset(const AssetId& asset, double t0,
                                                       double t1) const {
        std::vector<const TrackingEvent*> out;
        auto it = by_asset_.find(asset);
        if (it == by_asset_.end()) return out;
        for (std::size_t idx : it->second) {
            const double t = events_[idx].time;
            if (t >= t0 && t <= t1) out.push_back(&events_[idx]);
        }
        return out;
    }

    // Particle ids whose origin lies in [x0, x1). With an asset filter, only
    // ids that were present in that asset at some point of [t0, t1] survive.
    std::vector<ParticleId> query_origin(double x0, double x1,
                                         const std::optional<AssetId>& asset = std::nullopt,
                                         double t0 = 0.0,
                                         double t1 = std::numeric_limits<double>::max()) const {
        std::vector<ParticleId> ids;
        for (const auto& [pid, origin] : origins_)
            if (origin.x >= x0 && origin.x < x1) ids.push_back(pid);
        std::sort(ids.begin(), ids.end());
        if (!asset) return ids;
        std::vector<ParticleId> filtered;
        for (ParticleId pid : ids)
            if (present_in(pid, *asset, t0, t1)) filtered.push_back(pid);
        return filtered;
    }

    // Per-asset conservation ledger at the latest consistent cut <= t. Assets
    // report held mass in their periodic sensor samples; between reports the
    // implied holdings (in - out - flux) are used, which makes the residual
    // vacuously zero for assets that never report.
    MassBalance mass_balance_audit(double t) const {
        MassBalance mb;
        std::size_t cut = 0;  // one past the last event included
        double cut_time = 0.0;
        for (std::size_t i = 0; i < events_.size(); ++i) {
            if (events_[i].time > t) break;
            cut = i + 1;
            cut_time = events_[i].time;
        }
        mb.cut_time = cut_time;
        std::unordered_map<ParticleId, AssetId> where;
        std::map<AssetId, std::pair<double, bool>> reports;  // held, seen
        for (std::size_t i = 0; i < cut; ++i) {
            const TrackingEvent& e = events_[i];
            for (const auto& [pid, state] : e.particles) {
                auto it = where.find(pid);
                const AssetId prev = (it == where.end()) ? AssetId{} : it->second;
                const AssetId& cur = state.current_asset;
                if (prev == cur) continue;
                if (prev.empty()) {
                    mb.total_in += state.mass;
                } else {
                    mb.assets[prev].mass_out += state.mass;
                }
                if (cur.empty()) {
                    mb.total_out += state.mass;
                } else {
                    mb.assets[cur].mass_in += state.mass;
                }
                where[pid] = cur;
            }
            if (auto it = e.payload.find(kFineMassKey); it != e.payload.end()) {
                mb.assets[e.asset].flux_out += it->second;
                mb.total_out += it->second;
            }
            if (auto it = e.payload.find(kHeldMassKey); it != e.payload.end())
                reports[e.asset] = {it->second, true};
        }
        double held_sum = 0.0;
        double residual_sum = 0.0;
        for (auto& [asset, ledger] : mb.assets) {
            ledger.held_implied = ledger.mass_in - ledger.mass_out - ledger.flux_out;
            auto rep = reports.find(asset);
            ledger.has_report = rep != reports.end();
            ledger.held_reported = ledger.has_report ? rep->second.first : ledger.held_implied;
            ledger.residual = ledger.held_implied - ledger.held_reported;
            held_sum += ledger.held_reported;
            residual_sum += ledger.residual;
        }
        mb.global_residual = mb.total_in - mb.total_out - held_sum;
        (void)residual_sum;  // equals global_residual by double-entry cancellation
        return mb;
    }

    // --- persistence ---

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw invalid_argument("historian: cannot write " + path);
        out << header_line() << '\n';
        for (const TrackingEvent& e : events_) out << to_json(e).dump() << '\n';
    }

    static Historian load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw not_found("historian: cannot open " + path);
        std::string line;
        if (!std::getline(in, line)) throw invalid_state("historian: empty log file");
        const auto header = nlohmann::json::parse(line);
        if (header.at("format") != "oretrack-log" ||
            header.at("version").get<int>() != kLogFormatVersion)
            throw invalid_state("historian: unsupported log header");
        Historian h(header.value("meta", nlohmann::json::object()));
        const BinningPtr bins = binning_from_meta(h.meta_);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            TrackingEvent e = event_from_json(nlohmann::json::parse(line), bins);
            e.event_id = -1;  // reassigned sequentially; replay preserves order
            h.emit(std::move(e));
        }
        return h;
    }

    static BinningPtr binning_from_meta(const nlohmann::json& meta) {
        if (meta.contains("binning")) {
            const auto& b = meta.at("binning");
            return make_log_bins(b.at("d_min").get<double>(), b.at("d_max").get<double>(),
                                 b.at("classes").get<std::size_t>());
        }
        return make_log_bins(1e-5, 1.0, 16);
    }

  private:
    std::string header_line() const {
        nlohmann::json h;
        h["format"] = "oretrack-log";
        h["version"] = kLogFormatVersion;
        h["meta"] = meta_;
        return h.dump();
    }

    void validate(const TrackingEvent& e) const {
        if (e.asset.empty()) throw event_rejected("event without emitting asset");
        detail::require_finite(e.time, "event time");
        detail::require_finite(e.location.x, "event location");
        detail::require_finite(e.location.y, "event location");
        if (e.time < 0.0) throw event_rejected("negative event time");
        if (auto it = asset_clock_.find(e.asset); it != asset_clock_.end())
            if (e.time < it->second)
                throw event_rejected("per-asset time must be non-decreasing: " + e.asset);
        if (e.type == EventType::sensor_sample && !e.particles.empty())
            throw event_rejected("sensor_sample events carry no particle tuples");
        for (const auto& [k, v] : e.payload) detail::require_finite(v, k.c_str());
        std::unordered_set<ParticleId> seen;
        for (const auto& [pid, state] : e.particles) {
            if (!seen.insert(pid).second) throw event_rejected("duplicate particle in event");
            if (pid != state.id) throw event_rejected("tuple id mismatch");
            if (e.type == EventType::source_spawn) {
                if (known_.count(pid)) throw event_rejected("respawn of known particle id");
            } else if (!known_.count(pid)) {
                throw event_rejected("event references unknown particle id");
            }
            if (!(state.mass > 0.0)) throw event_rejected("non-positive particle mass");
            detail::require_finite(state.mass, "particle mass");
            detail::require_finite(state.position.x, "particle position");
            detail::require_finite(state.position.y, "particle position");
            if (state.psd.classes() > 0) state.psd.require_normalized("event snapshot");
        }
    }

    bool present_in(ParticleId pid, const AssetId& asset, double t0, double t1) const {
        auto it = by_particle_.find(pid);
        if (it == by_particle_.end()) return false;
        AssetId cur;
        double since = 0.0;
        for (std::size_t idx : it->second) {
            const TrackingEvent& e = events_[idx];
            const AssetId* next = nullptr;
            for (const auto& [id, state] : e.particles)
                if (id == pid) next = &state.current_asset;
            if (!next || *next == cur) continue;
            if (cur == asset && since <= t1 && e.time >= t0) return true;
            cur = *next;
            since = e.time;
        }
        return cur == asset && since <= t1;
    }

    nlohmann::json meta_ = nlohmann::json::object();
    std::vector<TrackingEvent> events_;
    EventId next_id_ = 0;
    std::unordered_set<ParticleId> known_;
    std::unordered_map<ParticleId, Vec2> origins_;
    std::unordered_map<ParticleId, std::vector<std::size_t>> by_particle_;
    std::map<AssetId, std::vector<std::size_t>> by_asset_;
    std::map<AssetId, double> asset_clock_;
    std::vector<Subscriber> subscribers_;
    std::unique_ptr<std::ofstream> sink_;
};

}  // namespace oretrack
