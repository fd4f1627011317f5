#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <span>
#include <vector>

#include "oretrack/assets/common.hpp"
#include "oretrack/core/virtual_sensor.hpp"

namespace oretrack {

enum class MillRedistribution { conserving, paper_literal };

struct MillParams {
    AssetId id;
    Vec2 position;
    Schedule omega = Schedule(1.2);  // rad/s, control
    double omega_crit = 1.5;         // rad/s
    double m0 = 1000.0;              // kg, moving mass of the empty mill
    double mu_dr = 0.02;             // internal drive friction coefficient
    double gravity = 9.8;            // m/s2
    double r_mill = 5.0;             // m
    double d_cl = 2.5e-5;            // m, classifier cut size
    double k_cl = 10.0;
    double k_esc = 1.0e3;            // 1/s
    double d_gr = 1.0e-3;            // m, grinding length scale
    double k_gr = 1.0;
    double d_gr_active = 1.0e-3;     // m, active grinding size
    double k_gr_active = 1.0;
    double e_ratio = 5.0e-8;         // combined impact/breakage energy scale
    double rate_cap = 0.5;           // max (P+Q) dt removed from a class per step
    double retire_fraction = 0.01;   // of spawn mass
    MillRedistribution redistribution = MillRedistribution::conserving;
};

// Classifier escape rate; only fractions well below d_cl leave quickly.
inline double mill_exit_rate(double d_k, const MillParams& p) {
    const double a = std::min(p.k_cl * (d_k / p.d_cl - 1.0), 700.0);
    return p.k_esc / (1.0 + std::exp(a));
}

// Impact energy distribution (relative to its asymptotic scale). Clamped at
// zero where the exponential exceeds e, which only happens for degenerate
// d50 <= 0.
inline double mill_impact_energy(double d_k, double d50, const MillParams& p) {
    const double w = std::numbers::e - std::exp(1.0 - d50 / d_k);
    return w <= 0.0 ? 0.0 : w * d_k / p.d_gr;
}

// Specific breakage energy (relative scale); harder ore takes more energy,
// coarser fractions slightly less per unit size.
inline double mill_breakage_energy(double d_k, double hardness, const MillParams& p) {
    return hardness / (1.0 + std::pow(d_k / p.d_gr, 0.25));
}

// Active-charge attenuation: drops to zero at and above the critical speed.
inline double mill_theta(double x) {
    const double y = 1.0 - x * x * x * x;
    return y > 0.0 ? std::sqrt(y) : 0.0;
}

struct MillTorque {
    double drive = 0.0;
    double accel = 0.0;
    double active = 0.0;
    double total() const { return drive + accel + active; }
};

inline MillTorque mill_torque(double charge_mass, double active_mass, double omega,
                              double omega_dot, const MillParams& p) {
    MillTorque t;
    const double m_tot = p.m0 + charge_mass;
    t.drive = p.mu_dr * m_tot * p.gravity * p.r_mill;
    t.accel = m_tot * p.r_mill * p.r_mill * omega_dot;
    t.active = p.k_gr_active * mill_theta(omega / p.omega_crit) *
               (active_mass * omega / p.omega_crit) * p.gravity * p.r_mill;
    return t;
}

// Squared normalization ratio (tau_a omega / tau_dr^0 omega_crit)^2 entering
// the breakage rate; tau_dr^0 is the drive friction of the empty mill.
inline double mill_drive_ratio_sq(double tau_active, double omega, const MillParams& p) {
    const double tau0 = p.mu_dr * p.m0 * p.gravity * p.r_mill;
    const double r = tau_active * omega / (tau0 * p.omega_crit);
    return r * r;
}

// Per-class breakage rates for unit hardness; divide by a particle's
// hardness to get its rates. Class 0 never breaks further.
inline std::vector<double> mill_breakage_base(const Binning& bins, double d50,
                                              double drive_ratio_sq, const MillParams& p) {
    std::vector<double> base(bins.classes(), 0.0);
    for (std::size_t k = 1; k < bins.classes(); ++k) {
        const double d_k = bins.rep[k];
        const double e_imp = mill_impact_energy(d_k, d50, p);
        const double e_brk = mill_breakage_energy(d_k, 1.0, p);
        base[k] = std::max(p.k_gr * p.e_ratio * (e_imp / e_brk) * drive_ratio_sq, 0.0);
    }
    return base;
}

struct GrindOutcome {
    double exited_mass = 0.0;               // kg leaving as fine product
    std::vector<double> exited_by_class;    // kg per class
};

// One grinding step on a particle. Broken fractions are redistributed
// uniformly over all smaller classes, which conserves the fraction sum; the
// exited share leaves the particle's mass and the psd is renormalized.
inline GrindOutcome apply_grind_conserving(SizeDistribution& psd, double& mass,
                                           std::span<const double> P,
                                           std::span<const double> Q, double dt,
                                           double rate_cap) {
    const std::size_t n = psd.classes();
    GrindOutcome out;
    out.exited_by_class.assign(n, 0.0);
    auto& f = psd.fractions();
    std::vector<double> next(f);
    double exited_frac = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double pk = (k == 0) ? 0.0 : P[k];
        const double total_rate = pk + Q[k];
        if (total_rate <= 0.0 || f[k] <= 0.0) continue;
        const double removed = std::min(total_rate * dt, rate_cap) * f[k];
        const double broken = removed * (pk / total_rate);
        const double exited = removed - broken;
        next[k] -= removed;
        if (k > 0 && broken > 0.0) {
            const double share = broken / static_cast<double>(k);
            for (std::size_t j = 0; j < k; ++j) next[j] += share;
        }
        out.exited_by_class[k] = mass * exited;
        exited_frac += exited;
    }
    out.exited_mass = mass * exited_frac;
    mass -= out.exited_mass;
    double s = 0.0;
    for (double v : next) s += v;
    if (s > 0.0)
        for (double& v : next) v /= s;
    f = std::move(next);
    return out;
}

// The redistribution formula as printed in the source model, kept for
// comparison; it does not conserve the fraction sum and applies no
// renormalization.
inline void apply_grind_paper_literal(SizeDistribution& psd, std::span<const double> P,
                                      std::span<const double> Q, double dt,
                                      double rate_cap) {
    const std::size_t n = psd.classes();
    auto& f = psd.fractions();
    std::vector<double> minus(n, 0.0), plus(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        minus[k] = std::min((P[k] + Q[k]) * dt, rate_cap) * f[k];
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double sum_p = 0.0;
        for (std::size_t kp = k + 1; kp < n; ++kp) sum_p += P[kp];
        plus[k] = sum_p * f[k] * dt / static_cast<double>(n - 1 - k);
    }
    for (std::size_t k = 0; k < n; ++k) f[k] += plus[k] - minus[k];
}

// Single-grinder mill. Feed particles are ground class by class; liberated
// fines leave as a mass flux accumulated between flushes, and particles are
// retired once nearly fully ground.
class MillAsset : public MaterialSink {
  public:
    MillAsset(MillParams params, const BinningPtr& bins, Historian* hist)
        : params_(std::move(params)), bins_(bins), hist_(hist) {
        exit_rates_.resize(bins_->classes());
        for (std::size_t k = 0; k < bins_->classes(); ++k)
            exit_rates_[k] = mill_exit_rate(bins_->rep[k], params_);
        active_from_ = bins_->class_of(params_.d_gr_active);
        fines_by_class_.assign(bins_->classes(), 0.0);
        omega_prev_ = params_.omega.at(0.0);
    }

    const AssetId& sink_id() const override { return params_.id; }
    const MillParams& params() const { return params_; }

    void receive(std::vector<PseudoParticle> batch, double t) override {
        for (auto& p : batch) {
            p.position = params_.position;
            p.current_asset = params_.id;
            charge_mass_ += p.mass;
            fed_mass_ += p.mass;
        }
        if (hist_ && !batch.empty()) {
            TrackingEvent ev;
            ev.type = EventType::mill_in;
            ev.asset = params_.id;
            ev.location = params_.position;
            ev.time = t;
            ev.particles = snapshot_tuples(batch);
            hist_->emit(std::move(ev));
        }
        for (auto& p : batch) charge_.push_back(std::move(p));
    }

    void step(double now, double dt) {
        if (dt <= 0.0) throw invalid_argument("mill_step: dt must be > 0");
        omega_ = params_.omega.at(now);
        omega_dot_ = (omega_ - omega_prev_) / dt;
        omega_prev_ = omega_;
        refresh_charge_stats();
        torque_ = mill_torque(charge_mass_, active_mass_, omega_, omega_dot_, params_);
        if (charge_.empty()) return;
        const double ratio_sq = mill_drive_ratio_sq(torque_.active, omega_, params_);
        const auto base = mill_breakage_base(*bins_, d50_, ratio_sq, params_);
        std::vector<double> rates(base.size());
        std::vector<PseudoParticle> retired;
        for (auto& p : charge_) {
            for (std::size_t k = 0; k < base.size(); ++k) rates[k] = base[k] / p.hardness;
            const auto out = apply_grind_conserving(p.psd, p.mass, rates, exit_rates_, dt,
                                                    params_.rate_cap);
            charge_mass_ -= out.exited_mass;
            fines_mass_ += out.exited_mass;
            for (std::size_t k = 0; k < out.exited_by_class.size(); ++k)
                fines_by_class_[k] += out.exited_by_class[k];
        }
        for (auto it = charge_.begin(); it != charge_.end();) {
            if (it->mass < params_.retire_fraction * it->spawn_mass) {
                charge_mass_ -= it->mass;
                it->current_asset.clear();  // ground through; leaves the system
                retired.push_back(std::move(*it));
                it = charge_.erase(it);
            } else {
                ++it;
            }
        }
        if (!retired.empty() && hist_) {
            TrackingEvent ev;
            ev.type = EventType::mill_out;
            ev.asset = params_.id;
            ev.location = params_.position;
            ev.time = now;
            ev.particles = snapshot_tuples(retired);
            hist_->emit(std::move(ev));
        }
    }

    // Flushes the accumulated fine product as a mill_out mass-flux event.
    void flush_fines(double now) {
        if (!hist_) return;
        TrackingEvent ev;
        ev.type = EventType::mill_out;
        ev.asset = params_.id;
        ev.location = params_.position;
        ev.time = now;
        ev.payload[kFineMassKey] = fines_mass_;
        ev.payload["charge_mass_kg"] = charge_mass_;
        const double period = now - last_flush_;
        ev.payload["fine_rate_kgps"] = period > 0.0 ? fines_mass_ / period : 0.0;
        if (fines_mass_ > 0.0) {
            char key[16];
            for (std::size_t k = 0; k < fines_by_class_.size(); ++k) {
                std::snprintf(key, sizeof key, "fine_f_%02u", static_cast<unsigned>(k));
                ev.payload[key] = fines_by_class_[k] / fines_mass_;
            }
        }
        hist_->emit(std::move(ev));
        ground_total_ += fines_mass_;
        fines_mass_ = 0.0;
        std::fill(fines_by_class_.begin(), fines_by_class_.end(), 0.0);
        last_flush_ = now;
    }

    double charge_mass() const { return charge_mass_; }
    double active_mass() const { return active_mass_; }
    double d50() const { return d50_; }
    const MillTorque& torque() const { return torque_; }
    double power() const { return torque_.total() * omega_; }
    double ground_total() const { return ground_total_ + fines_mass_; }
    double fed_total() const { return fed_mass_; }
    std::size_t charge_count() const { return charge_.size(); }
    const std::vector<PseudoParticle>& charge() const { return charge_; }

    std::map<std::string, double> sensor_payload() const {
        std::map<std::string, double> payload;
        payload["power_w"] = power();
        payload["torque_nm"] = torque_.total();
        payload["torque_active_nm"] = torque_.active;
        payload["charge_mass_kg"] = charge_mass_;
        payload["active_mass_kg"] = active_mass_;
        payload["omega_radps"] = omega_;
        payload[kHeldMassKey] = charge_mass_ + fines_mass_;  // unflushed fines still inside
        if (d50_ > 0.0) payload["d50_m"] = d50_;
        double num = 0.0, den = 0.0;
        for (const auto& p : charge_) {
            num += p.mass * p.hardness;
            den += p.mass;
        }
        if (den > 0.0) payload["hardness"] = num / den;
        return payload;
    }

  private:
    void refresh_charge_stats() {
        charge_mass_ = 0.0;
        active_mass_ = 0.0;
        d50_ = 0.0;
        if (charge_.empty()) return;
        std::vector<double> avg(bins_->classes(), 0.0);
        for (const auto& p : charge_) {
            charge_mass_ += p.mass;
            double active_frac = 0.0;
            for (std::size_t k = active_from_; k < avg.size(); ++k)
                active_frac += p.psd.fraction(k);
            active_mass_ += p.mass * active_frac;
            for (std::size_t k = 0; k < avg.size(); ++k)
                avg[k] += p.mass * p.psd.fraction(k);
        }
        SizeDistribution mean(bins_, std::move(avg));
        mean.normalize();
        d50_ = d_value(mean, 0.5);
    }

    MillParams params_;
    BinningPtr bins_;
    Historian* hist_;
    std::vector<double> exit_rates_;
    std::size_t active_from_ = 0;
    std::vector<PseudoParticle> charge_;
    double charge_mass_ = 0.0;
    double active_mass_ = 0.0;
    double d50_ = 0.0;
    double omega_ = 0.0;
    double omega_prev_ = 0.0;
    double omega_dot_ = 0.0;
    MillTorque torque_;
    double fines_mass_ = 0.0;
    std::vector<double> fines_by_class_;
    double ground_total_ = 0.0;
    double fed_mass_ = 0.0;
    double last_flush_ = 0.0;
};

}  // namespace oretrack
