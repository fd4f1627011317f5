#pragma once

#include <deque>
#include <vector>

#include "oretrack/assets/common.hpp"
#include "oretrack/core/virtual_sensor.hpp"

namespace oretrack {

// Per-class crushing coefficients: k for the classes at or above the gap
// width (by representative diameter), k_under below.
inline std::vector<double> crush_coefficients(const Binning& bins, double gap,
                                              double k_oversize, double k_undersize) {
    std::vector<double> k(bins.classes());
    for (std::size_t i = 0; i < k.size(); ++i)
        k[i] = bins.rep[i] >= gap ? k_oversize : k_undersize;
    return k;
}

// Jaw transform: every fraction at or above the gap breaks into a uniform
// distribution over the undersize classes. Conserves the fraction sum
// exactly and is idempotent (no oversize remains afterwards).
// Returns the crushed (oversize) share.
inline double apply_crush(SizeDistribution& psd, double gap) {
    const auto& bins = psd.bins();
    const std::size_t n = psd.classes();
    std::size_t n_under = 0;
    double crushed = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (bins.rep[k] >= gap)
            crushed += psd.fraction(k);
        else
            ++n_under;
    }
    if (n_under == 0 || crushed == 0.0) return crushed;
    const double gain = crushed / static_cast<double>(n_under);
    for (std::size_t k = 0; k < n; ++k) {
        if (bins.rep[k] >= gap)
            psd.fractions()[k] = 0.0;
        else
            psd.fractions()[k] += gain;
    }
    return crushed;
}

inline double crusher_torque_term(const PseudoParticle& p, const std::vector<double>& k) {
    double kf = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) kf += k[i] * p.psd.fraction(i);
    return p.mass * p.hardness * kf;
}

struct CrusherParams {
    AssetId id;
    Vec2 position;
    double gap = 0.25;          // m
    double omega = 10.0;        // rad/s jaw speed
    double k_oversize = 1.0;
    double k_undersize = 0.1;
    double throughput = 300.0;  // kg/s drawn from the dump queue
    double residence = 1.0;     // s a particle spends in the jaw zone
};

// Jaw crusher: dumped loads queue at the inlet, the jaw draws them at the
// throughput rate, holds them for the zone residence time and releases them
// transformed. Torque is evaluated over the zone with the pre-crush psd.
class CrusherAsset : public MaterialSink {
  public:
    CrusherAsset(CrusherParams params, const BinningPtr& bins, MaterialSink* target,
                 Historian* hist)
        : params_(std::move(params)),
          coeffs_(crush_coefficients(*bins, params_.gap, params_.k_oversize,
                                     params_.k_undersize)),
          target_(target),
          hist_(hist) {}

    const AssetId& sink_id() const override { return params_.id; }
    const CrusherParams& params() const { return params_; }
    void set_target(MaterialSink* t) { target_ = t; }

    // Truck dump into the inlet queue.
    void receive(std::vector<PseudoParticle> batch, double) override {
        for (auto& p : batch) {
            p.position = params_.position;
            queue_mass_ += p.mass;
            queue_.push_back(std::move(p));
        }
    }

    void step(double now, double dt) {
        if (dt <= 0.0) throw invalid_argument("crusher_step: dt must be > 0");
        // Token-bucket feed from queue to zone; unused budget does not pile
        // up beyond one second of throughput.
        budget_ = std::min(budget_ + params_.throughput * dt, params_.throughput);
        while (!queue_.empty() && budget_ >= queue_.front().mass) {
            budget_ -= queue_.front().mass;
            queue_mass_ -= queue_.front().mass;
            zone_mass_ += queue_.front().mass;
            zone_.push_back({std::move(queue_.front()), now});
            queue_.pop_front();
        }
        std::vector<PseudoParticle> released;
        while (!zone_.empty() && now - zone_.front().entered >= params_.residence) {
            PseudoParticle p = std::move(zone_.front().particle);
            const double entered = zone_.front().entered;
            zone_.pop_front();
            zone_mass_ -= p.mass;
            apply_crush(p.psd, params_.gap);
            p.current_asset = target_ ? target_->sink_id() : AssetId{};
            if (hist_) {
                TrackingEvent ev;
                ev.type = EventType::crusher_pass;
                ev.asset = params_.id;
                ev.location = params_.position;
                ev.time = now;
                ev.particles.emplace_back(p.id, p);
                ev.payload["zone_enter_time_s"] = entered;
                hist_->emit(std::move(ev));
            }
            released.push_back(std::move(p));
        }
        if (!released.empty() && target_) target_->receive(std::move(released), now);
    }

    double torque() const {
        double tau = 0.0;
        for (const auto& z : zone_) tau += crusher_torque_term(z.particle, coeffs_);
        return tau;
    }

    double power() const { return torque() * params_.omega; }
    double zone_mass() const { return zone_mass_; }
    double queue_mass() const { return queue_mass_; }
    double held_mass() const { return queue_mass_ + zone_mass_; }

    std::optional<double> zone_hardness() const {
        double num = 0.0, den = 0.0;
        for (const auto& z : zone_) {
            num += z.particle.mass * z.particle.hardness;
            den += z.particle.mass;
        }
        if (den <= 0.0) return std::nullopt;
        return num / den;
    }

    std::map<std::string, double> sensor_payload() const {
        std::map<std::string, double> payload;
        payload["torque_nm"] = torque();
        payload["power_w"] = power();
        payload["zone_mass_kg"] = zone_mass_;
        payload["queue_mass_kg"] = queue_mass_;
        payload[kHeldMassKey] = held_mass();
        if (auto h = zone_hardness()) payload["hardness"] = *h;
        return payload;
    }

  private:
    struct ZoneEntry {
        PseudoParticle particle;
        double entered;
    };

    CrusherParams params_;
    std::vector<double> coeffs_;
    MaterialSink* target_;
    Historian* hist_;
    std::deque<PseudoParticle> queue_;
    std::deque<ZoneEntry> zone_;
    double budget_ = 0.0;
    double queue_mass_ = 0.0;
    double zone_mass_ = 0.0;
};

}  // namespace oretrack
