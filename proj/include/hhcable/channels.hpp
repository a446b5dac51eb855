#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hhcable {

// Parametric opening/closing rate, in 1/s, of the membrane voltage x (V):
//   exponential: rate * exp((x - midpoint)/scale)
//   sigmoid:     rate / (1 + exp((x - midpoint)/scale))
//   linoid:      rate * (x - midpoint) / (1 - exp(-(x - midpoint)/scale))
// The linoid's removable singularity at x == midpoint evaluates to rate*scale
// (series limit) within 1e-9 V.
struct RateFunction {
    enum class form { exponential, sigmoid, linoid };
    form shape = form::exponential;
    double rate = 0;
    double midpoint = 0;
    double scale = 1;

    double operator()(double x) const;
};

// y_inf = alpha/(alpha+beta), tau = 1/(alpha+beta).
struct RateKinetics {
    RateFunction alpha, beta;
};

// Sampled (x, y_inf, tau) curve, linearly interpolated and clamped at the ends.
struct TableKinetics {
    std::vector<double> x, steady_state, time_constant;
};

struct ConstantKinetics {
    double steady_state = 0.5;
    double time_constant = 1e-3;
};

// Which quantity the gate kinetics depend on.
enum class gate_input { voltage, calcium };

class GateKinetics {
public:
    using representation = std::variant<RateKinetics, TableKinetics, ConstantKinetics>;

    GateKinetics() = default;
    GateKinetics(representation r, gate_input in = gate_input::voltage);

    double steady_state(double x) const;
    double time_constant(double x) const;
    gate_input input() const { return input_; }
    const representation& kinetics() const { return rep_; }

private:
    representation rep_ = ConstantKinetics{};
    gate_input input_ = gate_input::voltage;
};

enum class gate_rule { forward_euler, backward_euler, trapezoidal, exact_exponential };

// Initial gate value: the steady state at x.
double gate_steady_init(const GateKinetics& kin, double x);

// One step of dy/dt = (y_inf(x) - y)/tau(x) with x frozen over the step.
// forward_euler throws step_rejected when k > 2 tau. The closed forms are
// clamped to [0,1].
double gate_step(const GateKinetics& kin, double y, double x_eval, double k, gate_rule rule);

// Same, for already-evaluated steady state and time constant.
double gate_step(double y, double y_inf, double tau, double k, gate_rule rule);

struct ChannelSpec {
    std::string name;
    double gbar = 0;            // S/m^2
    double reversal = 0;        // V
    int exponent = 1;           // p in m^p
    GateKinetics activation;
    std::optional<GateKinetics> inactivation;
    bool carries_calcium = false;

    bool has_inactivation() const { return inactivation.has_value(); }
    bool calcium_dependent() const;
};

struct GateValues {
    double m = 0;
    double h = 1;
};

// f(m,h) = m^p * (h if inactivating).
double gate_function(const ChannelSpec& spec, GateValues g);

// g = gbar * f(m,h), S/m^2.
double channel_conductance(const ChannelSpec& spec, GateValues g);
double channel_conductance(const ChannelSpec& spec, double gbar, GateValues g);

struct CalciumPool {
    double concentration = 0;   // pool units
    double influx_scale = 0;    // pool units per (A s)
    double decay_time = 0.1;    // s
};

// Exact update of d[Ca]/dt = -B_Ca I_Ca - [Ca]/tau_Ca with I_Ca (A, inward
// negative) frozen over the step; clamped at 0.
CalciumPool calcium_step(CalciumPool pool, double i_ca, double k);

} // namespace hhcable
