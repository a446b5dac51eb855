#pragma once

#include <stdexcept>
#include <string>

namespace hhcable {

// Base for every error thrown by the library.
struct error: std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Morphology validation failures carry the offending compartment id.
struct morphology_error: error {
    morphology_error(const std::string& what, int id): error(what), compartment_id(id) {}
    int compartment_id;
};

struct cycle_detected: morphology_error {
    explicit cycle_detected(int id);
};

struct multiple_roots: morphology_error {
    explicit multiple_roots(int id);
};

struct dangling_parent: morphology_error {
    explicit dangling_parent(int id);
};

struct invalid_compartment: morphology_error {
    invalid_compartment(int id, const std::string& why);
};

struct step_rejected: error {
    using error::error;
};

struct divergence_detected: error {
    divergence_detected(double t, int compartment);
    double time;
    int compartment;
};

struct singular_system: error {
    explicit singular_system(int row);
    int row;
};

struct insufficient_history: error {
    using error::error;
};

struct unsupported_scheme: error {
    using error::error;
};

struct insufficient_cycles: error {
    using error::error;
};

struct no_spikes: error {
    using error::error;
};

struct signal_too_short: error {
    using error::error;
};

struct nonpositive_error: error {
    using error::error;
};

// An experiment's precondition on the simulated regime does not hold.
struct regime_violation: error {
    using error::error;
};

// Config parse/validation failure. `line` is 0 when unknown.
struct config_error: error {
    config_error(const std::string& file, std::size_t line, const std::string& field, const std::string& msg);
    std::string file;
    std::size_t line;
    std::string field;
};

} // namespace hhcable
