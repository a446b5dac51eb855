#pragma once

#include <hhcable/integrators.hpp>

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hhcable {

struct SimTrace {
    double k = 0;                   // s
    double duration = 0;            // s
    std::string scheme;
    std::string model_hash;
    std::vector<int> record;        // compartment ids, one column each
    std::vector<double> times;      // s
    Eigen::MatrixXd samples;        // rows: sample times, columns: recorded compartments

    bool stable = true;
    std::optional<double> failure_time;
    std::string failure_message;

    std::size_t sample_count() const { return times.size(); }
    // Column of compartment `id`; throws when it was not recorded.
    Eigen::VectorXd voltage(int id) const;
};

// Number of samples for a run of `duration` at step k: floor(duration/k) + 1.
long sample_count(double k, double duration);

struct SimOptions {
    IntegratorOptions integrator;
    double v0 = -0.07;
    // Start from this state instead of the resting initial state.
    std::optional<SimState> initial;
    // Called with the state after every `observer_stride` steps, and at t = 0.
    std::function<void(const SimState&)> observer;
    long observer_stride = 1;
    // When set, receives the state reached at the end of the run.
    SimState* final_state = nullptr;
};

// Steps `scheme` from the initial state to `duration`, recording V of the
// compartments in `record` (all compartments when empty) after every step.
// Divergence or a rejected step truncates the trace and flags it unstable.
SimTrace run_simulation(const CellModel& model, SchemeKind scheme, double k, double duration,
                        std::vector<int> record = {}, const SimOptions& opts = {});

} // namespace hhcable
