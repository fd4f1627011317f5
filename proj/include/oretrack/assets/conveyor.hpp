#pragma once

#include <cmath>
#include <deque>
#include <vector>

#include "oretrack/assets/common.hpp"

namespace oretrack {

struct ConveyorParams {
    AssetId id;
    double length = 30.0;      // m
    double bin_length = 1.0;   // m of belt per bin
    Schedule speed;            // m/s, control signal
    Vec2 tail_pos;
    Vec2 head_pos;
};

// Belt conveyor discretized longitudinally in bins. Bin contents move
// exactly with the belt displacement; a bin crossing the head pulley
// discharges atomically, so discharge order equals load order.
class ConveyorAsset : public MaterialSink {
  public:
    ConveyorAsset(ConveyorParams params, MaterialSink* target, Historian* hist)
        : params_(std::move(params)), target_(target), hist_(hist) {}

    const AssetId& sink_id() const override { return params_.id; }
    const ConveyorParams& params() const { return params_; }
    void set_target(MaterialSink* t) { target_ = t; }

    void receive(std::vector<PseudoParticle> batch, double t) override {
        if (batch.empty()) return;
        const double birth = std::floor(displacement_ / params_.bin_length) * params_.bin_length;
        if (bins_.empty() || bins_.back().birth_disp < birth) bins_.push_back({birth, {}});
        for (auto& p : batch) {
            p.position = params_.tail_pos;
            p.current_asset = params_.id;
            held_mass_ += p.mass;
        }
        if (hist_) {
            TrackingEvent ev;
            ev.type = EventType::conveyor_load;
            ev.asset = params_.id;
            ev.location = params_.tail_pos;
            ev.time = t;
            ev.particles = snapshot_tuples(batch);
            hist_->emit(std::move(ev));
        }
        auto& bin = bins_.back().particles;
        for (auto& p : batch) bin.push_back(std::move(p));
    }

    void step(double now, double dt) {
        if (dt <= 0.0) throw invalid_argument("conveyor_step: dt must be > 0");
        const double v = params_.speed.at(now);
        if (v < 0.0) throw invalid_control("conveyor: negative belt speed");
        displacement_ += v * dt;
        for (auto& bin : bins_) {
            const double progress =
                std::min((displacement_ - bin.birth_disp) / params_.length, 1.0);
            const Vec2 pos =
                params_.tail_pos + (params_.head_pos - params_.tail_pos) * progress;
            for (auto& p : bin.particles) {
                p.velocity = {(pos.x - p.position.x) / dt, (pos.y - p.position.y) / dt};
                p.position = pos;
            }
        }
        while (!bins_.empty() && displacement_ - bins_.front().birth_disp >= params_.length) {
            std::vector<PseudoParticle> batch = std::move(bins_.front().particles);
            bins_.pop_front();
            if (batch.empty()) continue;
            for (auto& p : batch) {
                held_mass_ -= p.mass;
                p.position = params_.head_pos;
                p.current_asset = target_ ? target_->sink_id() : AssetId{};
            }
            if (hist_) {
                TrackingEvent ev;
                ev.type = EventType::conveyor_discharge;
                ev.asset = params_.id;
                ev.location = params_.head_pos;
                ev.time = now;
                ev.particles = snapshot_tuples(batch);
                hist_->emit(std::move(ev));
            }
            if (target_) target_->receive(std::move(batch), now);
        }
    }

    double held_mass() const { return held_mass_; }
    double displacement() const { return displacement_; }

    std::map<std::string, double> sensor_payload() const {
        return {{"belt_mass_kg", held_mass_}, {kHeldMassKey, held_mass_}};
    }

  private:
    struct Bin {
        double birth_disp;
        std::vector<PseudoParticle> particles;
    };

    ConveyorParams params_;
    MaterialSink* target_;
    Historian* hist_;
    std::deque<Bin> bins_;
    double displacement_ = 0.0;
    double held_mass_ = 0.0;
};

}  // namespace oretrack
