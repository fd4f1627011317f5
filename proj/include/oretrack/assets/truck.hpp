#pragma once

#include <cmath>
#include <vector>

#include "oretrack/assets/common.hpp"
#include "oretrack/assets/source.hpp"

namespace oretrack {

struct TruckParams {
    AssetId id;
    AssetId source;
    double capacity = 15000.0;  // kg
    double load_s = 10.0;
    double haul_s = 40.0;
    double dump_s = 5.0;
    double return_s = 55.0;
    double phase_s = 0.0;  // offset into the cycle at t = 0
    Vec2 load_pos;
    Vec2 dump_pos;

    double period() const { return load_s + haul_s + dump_s + return_s; }
};

// Haul truck cycling load -> haul -> dump -> return. Held particles inherit
// the truck position. Loading pulls a fresh spawn from the source; the dump
// hands the whole load to a receiver (the crusher queue).
class TruckAsset {
  public:
    TruckAsset(TruckParams params, SourceAsset* source, MaterialSink* dump_target,
               Historian* hist)
        : params_(std::move(params)), source_(source), target_(dump_target), hist_(hist) {}

    const AssetId& id() const { return params_.id; }
    double held_mass() const { return held_mass_; }
    std::size_t held_count() const { return held_.size(); }
    Vec2 position() const { return position_; }

    void step(double now, double dt, ParticleId& next_id) {
        if (dt <= 0.0) throw invalid_argument("truck_step: dt must be > 0");
        const double before = cycle_pos(now - dt);
        const double after = cycle_pos(now);
        // Stage boundaries within (before, after] trigger transitions.
        const double t_dispatch = params_.load_s;
        const double t_dump_done = params_.load_s + params_.haul_s + params_.dump_s;
        if (crossed(before, after, t_dispatch)) do_load(now, next_id);
        if (crossed(before, after, t_dump_done)) do_dump(now);
        update_position(after);
        for (auto& p : held_) {
            p.velocity = {(position_.x - p.position.x) / dt, (position_.y - p.position.y) / dt};
            p.position = position_;
        }
    }

  private:
    double cycle_pos(double t) const {
        const double per = params_.period();
        double c = std::fmod(params_.phase_s + t, per);
        if (c < 0.0) c += per;
        return c;
    }

    static bool crossed(double before, double after, double boundary) {
        if (before <= after) return before < boundary && boundary <= after;
        return boundary > before || boundary <= after;  // wrapped around the period
    }

    void do_load(double now, ParticleId& next_id) {
        auto batch = source_->spawn(params_.capacity, now, next_id);
        if (batch.empty()) return;  // exhausted source: keep cycling empty
        for (auto& p : batch) {
            p.current_asset = params_.id;
            p.position = position_;
            held_mass_ += p.mass;
        }
        if (hist_) {
            TrackingEvent ev;
            ev.type = EventType::truck_dispatch;
            ev.asset = params_.id;
            ev.location = params_.load_pos;
            ev.time = now;
            ev.particles = snapshot_tuples(batch);
            hist_->emit(std::move(ev));
        }
        for (auto& p : batch) held_.push_back(std::move(p));
    }

    void do_dump(double now) {
        if (held_.empty()) return;
        std::vector<PseudoParticle> batch;
        batch.swap(held_);
        held_mass_ = 0.0;
        for (auto& p : batch) {
            p.position = params_.dump_pos;
            p.current_asset = target_->sink_id();
        }
        if (hist_) {
            TrackingEvent ev;
            ev.type = EventType::truck_dump;
            ev.asset = params_.id;
            ev.location = params_.dump_pos;
            ev.time = now;
            ev.particles = snapshot_tuples(batch);
            hist_->emit(std::move(ev));
        }
        target_->receive(std::move(batch), now);
    }

    void update_position(double c) {
        const double t1 = params_.load_s;
        const double t2 = t1 + params_.haul_s;
        const double t3 = t2 + params_.dump_s;
        const double per = params_.period();
        if (c < t1) {
            position_ = params_.load_pos;
        } else if (c < t2) {
            const double u = (c - t1) / params_.haul_s;
            position_ = params_.load_pos + (params_.dump_pos - params_.load_pos) * u;
        } else if (c < t3) {
            position_ = params_.dump_pos;
        } else {
            const double u = (c - t3) / (per - t3);
            position_ = params_.dump_pos + (params_.load_pos - params_.dump_pos) * u;
        }
    }

    TruckParams params_;
    SourceAsset* source_;
    MaterialSink* target_;
    Historian* hist_;
    Vec2 position_ = params_.load_pos;
    std::vector<PseudoParticle> held_;
    double held_mass_ = 0.0;
};

}  // namespace oretrack
