#pragma once

#include <stdexcept>
#include <string>

namespace oretrack {

// Precondition violations on arguments keep std::invalid_argument so callers
// can catch the standard type.
using invalid_argument = std::invalid_argument;

// Object is in a state that does not admit the requested operation
// (e.g. an unnormalized size distribution).
struct invalid_state : std::runtime_error {
    explicit invalid_state(const std::string& what) : std::runtime_error(what) {}
};

// Unit-operation sequences with gaps or overlaps in time coverage.
struct invalid_sequence : std::runtime_error {
    explicit invalid_sequence(const std::string& what) : std::runtime_error(what) {}
};

// Lookup of an unknown id / block / record.
struct not_found : std::runtime_error {
    explicit not_found(const std::string& what) : std::runtime_error(what) {}
};

// Control signal outside its admissible range (negative belt speed, ...).
struct invalid_control : std::runtime_error {
    explicit invalid_control(const std::string& what) : std::runtime_error(what) {}
};

// Event rejected by the historian (schema, referential or ordering check).
struct event_rejected : std::runtime_error {
    explicit event_rejected(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace oretrack
