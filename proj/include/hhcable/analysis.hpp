#pragma once

#include <hhcable/simulation.hpp>

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace hhcable {

using voltage_view = Eigen::Ref<const Eigen::VectorXd>;

struct Peak {
    std::size_t index = 0;
    double t = 0;       // s
    double v = 0;       // V
};

inline constexpr double spike_peak_threshold = -0.01;   // V
inline constexpr double spike_base_threshold = -0.04;   // V
inline constexpr double adp_ceiling = -0.04;            // V
inline constexpr double monotone_tolerance = 1e-12;     // V
inline constexpr double concavity_tolerance = 1e-12;    // V

// Local maxima above -0.01 V reached by a nondecreasing climb from below
// -0.04 V. Sample i is at time t0 + i*dt.
std::vector<Peak> detect_spikes(voltage_view v, double dt, double t0 = 0);

// Maximal run of alternating-sign second undivided differences.
struct OscillationEvent {
    std::size_t start = 0;              // sample index of the first difference's centre
    std::size_t length = 0;             // number of differences in the run (>= 3)
    std::vector<double> amplitudes;     // |d|/4 per difference, V
    double rms = 0;                     // V

    std::size_t end() const { return start + length; }     // one past the last centre
    bool covers(std::size_t i) const { return i>=start && i<end(); }
};

// d_n = v_{n+1} - 2 v_n + v_{n-1} for n = 1..N-2 (returned 0-based, entry n-1).
Eigen::VectorXd second_undivided_differences(voltage_view v);

// Runs of >= 3 consecutive nonzero (|d| > 1e-12 V) differences of strictly
// alternating sign.
std::vector<OscillationEvent> detect_oscillations(voltage_view v);

struct Adp {
    Peak peak;
    bool oscillation_suspect = false;
};

// After-depolarizations in a segment that starts after the last spike: local
// maxima below -0.04 V that follow the first local minimum. Samples inside an
// oscillation event are replaced by their three-point average (v - d/4) before
// the search and maxima found there are flagged suspect. Event indices refer
// to `v`.
std::vector<Adp> detect_adp(voltage_view v, double dt, double t0 = 0,
                            const std::vector<OscillationEvent>& oscillations = {});

struct ApCycle {
    std::size_t start = 0, end = 0;     // sample indices, inclusive
    std::vector<Peak> spikes;
    std::vector<Adp> adps;
    double period = 0;                  // s
    double v_min = 0, v_max = 0;        // V
};

struct SegmentOptions {
    // Troughs between spikes within this distance of the deepest trough close a cycle.
    double trough_tolerance = 0.005;    // V
};

// Cycles run from one inter-group absolute minimum to the next. Throws
// insufficient_cycles when fewer than `min_cycles` complete cycles exist.
std::vector<ApCycle> segment_cycles(voltage_view v, double dt, double t0 = 0,
                                    const std::vector<OscillationEvent>& oscillations = {},
                                    std::size_t min_cycles = 1, SegmentOptions opts = {});
std::vector<ApCycle> segment_cycles(const SimTrace& tr, int compartment, std::size_t min_cycles = 1,
                                    SegmentOptions opts = {});

struct CycleStats {
    std::size_t count = 0;
    double min_mean = 0, min_std = 0;
    double max_mean = 0, max_std = 0;
    double period_mean = 0, period_std = 0;
};

// Population mean and standard deviation over cycles with index >= skip.
CycleStats cycle_stats(const std::vector<ApCycle>& cycles, std::size_t skip = 19);

struct AccuracyReport {
    std::string scheme;
    double k = 0;
    double rms = 0;     // V
    double shift = 0;   // s, added to the test trace's times
};

// RMS difference between cycle `cycle_index` (0-based) of `test` and of
// `reference`, after aligning their first spike peaks and interpolating the
// test cycle linearly onto the reference samples.
AccuracyReport accuracy_rms(const SimTrace& test, const SimTrace& reference, int compartment,
                            std::size_t cycle_index = 19);

// Per cycle: rms of the oscillation amplitudes whose samples fall inside it; 0 without events.
std::vector<double> oscillation_rms_per_cycle(const std::vector<OscillationEvent>& events,
                                              const std::vector<ApCycle>& cycles);

struct SpectralDensity {
    Eigen::VectorXd frequency;      // Hz, 0..125 in 1 Hz steps
    Eigen::VectorXd power;          // V^2/Hz
    double sample_rate = 250;       // Hz

    double band_power() const { return power.sum()*(frequency.size()>1? frequency[1] - frequency[0]: 1.0); }
};

// Resamples to 250 Hz (block means when native_rate/250 is an integer, linear
// interpolation otherwise), removes the mean and averages Hamming-windowed
// 250-sample periodograms with hop 100. One-sided, normalized so that
// band_power() equals the signal variance.
SpectralDensity welch_psd(voltage_view v, double native_rate);

// Least-squares slope of log(rms) against log(k).
double empirical_order(const std::vector<std::pair<double, double>>& errors);

struct WaveformClass {
    int n_spikes = 0;
    int n_adp = 0;
    bool suspect = false;
    std::string label;      // "<spikes>-<adp>", with " (suspect)" appended when flagged
};

// ADPs already flagged, or lying inside one of `oscillations`, mark the class suspect.
WaveformClass classify_cycle(const ApCycle& cycle, const std::vector<OscillationEvent>& oscillations = {});

} // namespace hhcable
