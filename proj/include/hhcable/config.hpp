#pragma once

#include <hhcable/integrators.hpp>
#include <hhcable/model.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hhcable {

// Model and experiment configuration files are YAML (JSON is accepted too).
// Errors are reported as config_error with file, line and field.

MorphologyTree load_morphology(const std::string& path);
MorphologyTree parse_morphology(const std::string& text, const std::string& source = "<string>");

struct ChannelConfig {
    std::vector<ChannelSpec> channels;
    std::map<std::string, std::map<int, double>> gbar_overrides;
    std::optional<CalciumParams> calcium;
};

ChannelConfig load_channels(const std::string& path);
ChannelConfig parse_channels(const std::string& text, const std::string& source = "<string>");

struct AnalysisOptions {
    bool mean_removal = true;           // before the spatial DFT
    std::vector<int> theta_path;        // empty: longest tip-to-tip path
    int skip_cycles = 19;
    double reference_step = 1e-6;       // s
    long coefficient_stride = 1;        // steps between coefficient samples
};

struct OrderOptions {
    double k0 = 8e-6;                   // largest ladder step, s
    int levels = 4;                     // k0, k0/2, ...
    int reference_divisor = 16;         // reference step = smallest k / divisor
    double duration = 0.02;             // s
};

struct ExperimentConfig {
    std::string source;
    std::string morphology_path;
    std::string channels_path;
    std::vector<SchemeKind> schemes;
    std::vector<double> step_sizes;     // s, sorted ascending
    double duration = 3.0;              // s
    std::vector<int> record;            // default: root
    std::string output_dir = "out";
    IntegratorOptions integrator;
    AnalysisOptions analysis;
    OrderOptions order;
    std::optional<std::string> initial_state_path;
    std::optional<std::string> final_state_path;

    CellModel model() const;
};

ExperimentConfig load_experiment(const std::string& path);
ExperimentConfig parse_experiment(const std::string& text, const std::string& source = "<string>",
                                  const std::string& base_dir = ".");

// Saved simulation state, for warm starts.
void save_state(const std::string& path, const SimState& s);
SimState load_state(const std::string& path, const CellModel& model);

} // namespace hhcable
