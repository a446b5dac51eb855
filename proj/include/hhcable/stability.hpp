#pragma once

#include <hhcable/integrators.hpp>
#include <hhcable/simulation.hpp>

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <optional>
#include <vector>

namespace hhcable {

// Von Neumann coefficients of one compartment at one instant, all in 1/s.
//   L = (c1 + c2) sin^2(theta/2),  M = (c1 - c2) sin(theta),  B = K + c1 + c2
struct SchemeCoefficients {
    double K = 0;
    double L = 0;
    double M = 0;
    double B = 0;
    double theta = 0;
    double c1 = 0;
    double c2 = 0;

    static SchemeCoefficients from_couplings(double K, double c1, double c2, double theta);
};

struct GrowthFactor {
    std::complex<double> value;
    double cosine_basis_value = 0;      // the real formula with the sine term dropped

    double magnitude() const { return std::abs(value); }
};

// Amplification of the mode exp(i j theta) per step. Taylor2 returns the
// largest-magnitude root of its cubic.
GrowthFactor growth_factor(SchemeKind scheme, const SchemeCoefficients& c, double k);

// The three roots of g^3 + (5P - 1) g^2 - P = 0.
std::array<std::complex<double>, 3> taylor2_roots(double P);

struct StepLimit {
    std::optional<double> limit;                // s; empty when unbounded
    std::optional<double> oscillation_onset;    // s; HCN only

    bool bounded() const { return limit.has_value(); }
};

// FTCS and Taylor2: 2/(K+2L). RK21: 2/B. RK41: 2.7853/B. BTCS, exponential
// Euler and HCN are unbounded; HCN reports 2/(K+2L) as oscillation onset.
StepLimit step_limit(SchemeKind scheme, const SchemeCoefficients& c);

// Real-axis stability bound of the RK stability polynomial for lambda = -B.
// Empty when B <= 0. Throws unsupported_scheme for non-RK schemes.
std::optional<double> butcher_limit(SchemeKind scheme, double B);

inline constexpr double rk41_real_axis_bound = 2.7853;

struct PlaneWaveSpectrum {
    Eigen::VectorXd omega;          // i pi/(N/2), i = 0..N/2
    Eigen::VectorXd magnitude;      // |H(omega_i)|
    double centroid = 0;            // rad
    bool all_zero = false;          // sum |H| vanished; centroid reported as 0
};

// Zero-pads to 32 samples (or the next power of two for longer paths),
// takes the DFT and returns the magnitude-weighted mean frequency.
PlaneWaveSpectrum spectral_centroid(const Eigen::Ref<const Eigen::VectorXd>& path_voltage, bool mean_removal = true);

// Instantaneous coefficients captured during a reference run.
struct CoefficientSample {
    double t = 0;
    Eigen::VectorXd K;              // per compartment
    Eigen::VectorXd path_voltage;   // V along the theta path
};

// Observer for run_simulation that appends a CoefficientSample per call.
std::function<void(const SimState&)> coefficient_recorder(const CellModel& model, std::vector<int> path,
                                                          std::vector<CoefficientSample>& out);

struct CycleLimit {
    std::optional<double> limit;    // s
    std::optional<double> oscillation_onset;
    double t = 0;                   // instant of the minimum
    int compartment = -1;
    double theta = 0;
    double K = 0;
    double L = 0;
    double B = 0;
};

// Minimum of step_limit over the samples with t in [t0, t1] and over all
// compartments; theta comes from the spectral centroid of each sample.
CycleLimit min_over_cycle_limit(const CellModel& model, const std::vector<CoefficientSample>& samples,
                                SchemeKind scheme, double t0, double t1, bool mean_removal = true);

// As above, restricted to the complete AP cycles of `reference` (segmented on
// `reference_compartment`); a trace without spikes is treated as one window.
// Throws insufficient_cycles when spikes occur but no cycle completes.
CycleLimit min_over_cycle_limit(const CellModel& model, const std::vector<CoefficientSample>& samples,
                                SchemeKind scheme, const SimTrace& reference, int reference_compartment,
                                bool mean_removal = true);

} // namespace hhcable
