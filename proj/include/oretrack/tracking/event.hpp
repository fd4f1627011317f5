#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oretrack/core/errors.hpp"
#include "oretrack/core/particle.hpp"

namespace oretrack {

using EventId = std::int64_t;

enum class EventType {
    source_spawn,
    truck_dispatch,
    truck_dump,
    crusher_pass,
    conveyor_load,
    conveyor_discharge,
    storage_in,
    storage_out,
    mill_in,
    mill_out,
    sensor_sample,
};

inline const char* to_string(EventType t) {
    switch (t) {
        case EventType::source_spawn: return "source_spawn";
        case EventType::truck_dispatch: return "truck_dispatch";
        case EventType::truck_dump: return "truck_dump";
        case EventType::crusher_pass: return "crusher_pass";
        case EventType::conveyor_load: return "conveyor_load";
        case EventType::conveyor_discharge: return "conveyor_discharge";
        case EventType::storage_in: return "storage_in";
        case EventType::storage_out: return "storage_out";
        case EventType::mill_in: return "mill_in";
        case EventType::mill_out: return "mill_out";
        case EventType::sensor_sample: return "sensor_sample";
    }
    return "?";
}

inline EventType event_type_from(const std::string& s) {
    static const std::map<std::string, EventType> table = {
        {"source_spawn", EventType::source_spawn},
        {"truck_dispatch", EventType::truck_dispatch},
        {"truck_dump", EventType::truck_dump},
        {"crusher_pass", EventType::crusher_pass},
        {"conveyor_load", EventType::conveyor_load},
        {"conveyor_discharge", EventType::conveyor_discharge},
        {"storage_in", EventType::storage_in},
        {"storage_out", EventType::storage_out},
        {"mill_in", EventType::mill_in},
        {"mill_out", EventType::mill_out},
        {"sensor_sample", EventType::sensor_sample},
    };
    auto it = table.find(s);
    if (it == table.end()) throw invalid_argument("unknown event type: " + s);
    return it->second;
}

// Macro-tracking message. Particle snapshots carry the full state at event
// time so the log is self-contained for offline analysis.
struct TrackingEvent {
    EventId event_id = -1;  // assigned by the historian on emit
    EventType type = EventType::sensor_sample;
    AssetId asset;          // emitting asset
    Vec2 location;
    double time = 0.0;      // simulation time, s
    std::vector<std::pair<ParticleId, PseudoParticle>> particles;
    std::map<std::string, double> payload;
};

namespace detail {

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw event_rejected(std::string("non-finite value in ") + what);
}

}  // namespace detail

inline nlohmann::json to_json(const PseudoParticle& p) {
    nlohmann::json j;
    j["m"] = p.mass;
    j["m0"] = p.spawn_mass;
    j["d"] = p.diameter;
    j["x"] = {p.position.x, p.position.y};
    j["v"] = {p.velocity.x, p.velocity.y};
    j["o"] = {p.origin.x, p.origin.y};
    j["f"] = p.psd.fractions();
    j["c"] = p.concentration;
    j["h"] = p.hardness;
    j["asset"] = p.current_asset;
    if (!p.extrinsic.empty()) j["ext"] = p.extrinsic;
    return j;
}

inline PseudoParticle particle_from_json(ParticleId id, const nlohmann::json& j,
                                         const BinningPtr& bins) {
    PseudoParticle p;
    p.id = id;
    p.mass = j.at("m").get<double>();
    p.spawn_mass = j.at("m0").get<double>();
    p.diameter = j.at("d").get<double>();
    p.position = {j.at("x")[0].get<double>(), j.at("x")[1].get<double>()};
    p.velocity = {j.at("v")[0].get<double>(), j.at("v")[1].get<double>()};
    p.origin = {j.at("o")[0].get<double>(), j.at("o")[1].get<double>()};
    p.psd = SizeDistribution(bins, j.at("f").get<std::vector<double>>());
    p.concentration = j.at("c").get<double>();
    p.hardness = j.at("h").get<double>();
    p.current_asset = j.at("asset").get<std::string>();
    if (j.contains("ext")) p.extrinsic = j.at("ext").get<std::map<std::string, double>>();
    return p;
}

inline nlohmann::json to_json(const TrackingEvent& e) {
    nlohmann::json j;
    j["id"] = e.event_id;
    j["type"] = to_string(e.type);
    j["asset"] = e.asset;
    j["loc"] = {e.location.x, e.location.y};
    j["t"] = e.time;
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& [pid, state] : e.particles) parts.push_back({pid, to_json(state)});
    j["particles"] = std::move(parts);
    j["payload"] = e.payload;
    return j;
}

inline TrackingEvent event_from_json(const nlohmann::json& j, const BinningPtr& bins) {
    TrackingEvent e;
    e.event_id = j.at("id").get<EventId>();
    e.type = event_type_from(j.at("type").get<std::string>());
    e.asset = j.at("asset").get<std::string>();
    e.location = {j.at("loc")[0].get<double>(), j.at("loc")[1].get<double>()};
    e.time = j.at("t").get<double>();
    for (const auto& tup : j.at("particles")) {
        const auto pid = tup[0].get<ParticleId>();
        e.particles.emplace_back(pid, particle_from_json(pid, tup[1], bins));
    }
    e.payload = j.at("payload").get<std::map<std::string, double>>();
    return e;
}

}  // namespace oretrack
