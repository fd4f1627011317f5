#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "oretrack/core/errors.hpp"
#include "oretrack/core/particle.hpp"

namespace oretrack {

enum class UnitOpKind { move, fragment };

// One state transition applied to a particle by an asset over [t_start,
// t_start + dt). A move op must not touch mass or psd; a fragment op must
// not move the particle beyond advection and must conserve total mass.
struct UnitOp {
    AssetId asset_id;
    UnitOpKind kind = UnitOpKind::move;
    double t_start = 0.0;  // s
    double dt = 0.0;       // s
    std::function<PseudoParticle(PseudoParticle)> effect;
};

// Sequential (left-to-right) application. The ops must tile a contiguous
// time span; a gap or overlap larger than a microsecond is rejected.
inline PseudoParticle compose_unit_ops(std::span<const UnitOp> ops, PseudoParticle x) {
    constexpr double tol = 1e-6;
    for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
        const double end = ops[i].t_start + ops[i].dt;
        if (std::abs(end - ops[i + 1].t_start) > tol)
            throw invalid_sequence("compose_unit_ops: gap or overlap in time coverage");
    }
    for (const UnitOp& op : ops) x = op.effect(std::move(x));
    return x;
}

inline UnitOp make_translation_op(AssetId asset, double t_start, double dt, Vec2 delta) {
    return UnitOp{std::move(asset), UnitOpKind::move, t_start, dt,
                  [delta](PseudoParticle p) {
                      p.position += delta;
                      return p;
                  }};
}

}  // namespace oretrack
