#include <hhcable/channels.hpp>
#include <hhcable/errors.hpp>

#include <algorithm>
#include <cmath>

namespace hhcable {

double RateFunction::operator()(double x) const {
    const double u = x - midpoint;
    switch (shape) {
    case form::exponential:
        return rate*std::exp(u/scale);
    case form::sigmoid:
        return rate/(1 + std::exp(u/scale));
    case form::linoid:
        if (std::abs(u)<1e-9) {
            // x/(1-exp(-x/s)) = s + x/2 + O(x^2)
            return rate*(scale + 0.5*u);
        }
        return rate*u/(1 - std::exp(-u/scale));
    }
    return 0;
}

GateKinetics::GateKinetics(representation r, gate_input in): rep_(std::move(r)), input_(in) {
    if (auto* t = std::get_if<TableKinetics>(&rep_)) {
        if (t->x.empty() || t->x.size()!=t->steady_state.size() || t->x.size()!=t->time_constant.size()) {
            throw error("gate table columns must be non-empty and of equal length");
        }
        if (!std::is_sorted(t->x.begin(), t->x.end())) {
            throw error("gate table abscissae must be increasing");
        }
    }
}

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x<=xs.front()) return ys.front();
    if (x>=xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    auto i = static_cast<std::size_t>(it - xs.begin());
    double w = (x - xs[i-1])/(xs[i] - xs[i-1]);
    return ys[i-1] + w*(ys[i] - ys[i-1]);
}

struct steady_state_visitor {
    double x;
    double operator()(const RateKinetics& r) const {
        double a = r.alpha(x), b = r.beta(x);
        return a/(a + b);
    }
    double operator()(const TableKinetics& t) const { return interpolate(t.x, t.steady_state, x); }
    double operator()(const ConstantKinetics& c) const { return c.steady_state; }
};

struct time_constant_visitor {
    double x;
    double operator()(const RateKinetics& r) const { return 1/(r.alpha(x) + r.beta(x)); }
    double operator()(const TableKinetics& t) const { return interpolate(t.x, t.time_constant, x); }
    double operator()(const ConstantKinetics& c) const { return c.time_constant; }
};

} // namespace

double GateKinetics::steady_state(double x) const {
    return std::visit(steady_state_visitor{x}, rep_);
}

double GateKinetics::time_constant(double x) const {
    return std::visit(time_constant_visitor{x}, rep_);
}

double gate_steady_init(const GateKinetics& kin, double x) {
    return kin.steady_state(x);
}

double gate_step(double y, double y_inf, double tau, double k, gate_rule rule) {
    double r = k/tau;
    double out = y;
    switch (rule) {
    case gate_rule::forward_euler:
        if (k>2*tau) {
            throw step_rejected("forward Euler gate step k=" + std::to_string(k) +
                                " exceeds 2*tau=" + std::to_string(2*tau));
        }
        return y + r*(y_inf - y);
    case gate_rule::backward_euler:
        out = (y + r*y_inf)/(1 + r);
        break;
    case gate_rule::trapezoidal:
        out = (y*(1 - 0.5*r) + r*y_inf)/(1 + 0.5*r);
        break;
    case gate_rule::exact_exponential:
        out = y_inf + (y - y_inf)*std::exp(-r);
        break;
    }
    return std::clamp(out, 0.0, 1.0);
}

double gate_step(const GateKinetics& kin, double y, double x_eval, double k, gate_rule rule) {
    return gate_step(y, kin.steady_state(x_eval), kin.time_constant(x_eval), k, rule);
}

bool ChannelSpec::calcium_dependent() const {
    return activation.input()==gate_input::calcium
        || (inactivation && inactivation->input()==gate_input::calcium);
}

double gate_function(const ChannelSpec& spec, GateValues g) {
    double f = 1;
    for (int i=0; i<spec.exponent; ++i) f *= g.m;
    if (spec.has_inactivation()) f *= g.h;
    return f;
}

double channel_conductance(const ChannelSpec& spec, double gbar, GateValues g) {
    return gbar*gate_function(spec, g);
}

double channel_conductance(const ChannelSpec& spec, GateValues g) {
    return channel_conductance(spec, spec.gbar, g);
}

CalciumPool calcium_step(CalciumPool pool, double i_ca, double k) {
    const double steady = -pool.influx_scale*i_ca*pool.decay_time;
    pool.concentration = steady + (pool.concentration - steady)*std::exp(-k/pool.decay_time);
    pool.concentration = std::max(pool.concentration, 0.0);
    return pool;
}

} // namespace hhcable
