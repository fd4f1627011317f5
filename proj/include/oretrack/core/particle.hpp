#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "oretrack/core/size_distribution.hpp"

namespace oretrack {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

using ParticleId = std::int64_t;
using AssetId = std::string;

// A pseudo-particle stands for a large collection of real rock fragments.
// Its geometric diameter is a contact/visual property only and has no
// correspondence to the internal size distribution it carries.
struct PseudoParticle {
    ParticleId id = -1;
    Vec2 origin;            // position at spawn time, immutable afterwards
    Vec2 position;
    Vec2 velocity;
    double mass = 0.0;      // kg, current
    double spawn_mass = 0.0;  // kg, at spawn (retirement threshold reference)
    double diameter = 0.0;  // m, contact-dynamics diameter
    SizeDistribution psd;
    double concentration = 0.0;  // dimensionless mineral grade
    double hardness = 1.0;       // dimensionless, constant after spawn
    std::map<std::string, double> extrinsic;  // e.g. "mwd" -> s_n
    AssetId current_asset;       // empty once the particle left the system
};

}  // namespace oretrack
