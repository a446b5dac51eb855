#pragma once

#include <hhcable/channels.hpp>
#include <hhcable/morphology.hpp>

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hhcable {

struct CalciumParams {
    double influx_scale = 0;    // pool units per (A s)
    double decay_time = 0.1;    // s
};

// Immutable compartmental cell: morphology, couplings and channel densities,
// plus the per-compartment constants the steppers use every step.
struct CellModel {
    MorphologyTree tree;
    std::vector<AxialCoupling> couplings;
    std::vector<ChannelSpec> channels;
    Eigen::MatrixXd gbar;               // channels x compartments, S/m^2
    std::optional<CalciumParams> calcium;

    Eigen::VectorXd alpha;              // 1/(rm cm), 1/s
    Eigen::VectorXd e_leak;             // V
    Eigen::VectorXd cm;                 // F/m^2
    Eigen::VectorXd area;               // m^2
    Eigen::VectorXd coupling_diag;      // c1 + sum c2, 1/s
    Eigen::VectorXd to_parent;          // c1 of compartment j
    Eigen::VectorXd from_parent;        // c2 of parent(j) towards j
    Eigen::VectorXi parent;             // -1 at the root

    // `gbar_overrides[name][compartment]` replaces the channel's default gbar.
    static CellModel make(MorphologyTree tree,
                          std::vector<ChannelSpec> channels,
                          const std::map<std::string, std::map<int, double>>& gbar_overrides = {},
                          std::optional<CalciumParams> calcium = std::nullopt);

    std::size_t size() const { return tree.size(); }
    std::size_t channel_count() const { return channels.size(); }

    // 64-bit FNV-1a digest of every numeric parameter, as 16 hex digits.
    std::string fingerprint() const;
};

} // namespace hhcable
