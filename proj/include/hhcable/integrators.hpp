#pragma once

#include <hhcable/hines.hpp>
#include <hhcable/model.hpp>

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>
#include <utility>

namespace hhcable {

enum class SchemeKind { FTCS, BTCS, ExponentialEuler, HCN, RK21, RK41, Taylor2 };

inline constexpr std::array<SchemeKind, 7> all_schemes = {
    SchemeKind::FTCS, SchemeKind::BTCS, SchemeKind::ExponentialEuler, SchemeKind::HCN,
    SchemeKind::RK21, SchemeKind::RK41, SchemeKind::Taylor2,
};

std::string_view scheme_name(SchemeKind s);
// Accepts the canonical names case-insensitively plus a few aliases
// ("expeuler", "ee", "2ot", "cn"); throws unsupported_scheme otherwise.
SchemeKind parse_scheme(std::string_view name);
// Taylor2 is only analyzed in the appendix of the method comparison.
bool appendix_only(SchemeKind s);

// How RK schemes advance the gates.
enum class rk_gate_mode {
    multistage,     // same tableau as the voltage, stages at the voltage stage values
    single_stage,   // one forward Euler step at V^n
};

struct SimState {
    double t = 0;
    long step = 0;
    Eigen::VectorXd v;          // V per compartment
    Eigen::ArrayXXd m, h;       // channels x compartments
    Eigen::VectorXd calcium;    // pool concentration per compartment

    // Taylor2 lagging stencil: V^{n-1}, V^{n-2} and the matching right-hand
    // sides A - B V. `history_depth` counts how many are valid.
    std::array<Eigen::VectorXd, 2> v_history;
    std::array<Eigen::VectorXd, 2> rhs_history;
    int history_depth = 0;
};

// V = v0 everywhere, [Ca] = 0, gates at their steady state.
SimState initial_state(const CellModel& model, double v0 = -0.07);

// Frozen-neighbour linear ODE coefficients of compartment j: dV_j/dt = A - B V_j.
std::pair<double, double> coefficients_AB(const CellModel& model, const SimState& state, int j);

// alpha + sum beta_i per compartment (K) and alpha E_L + sum beta_i E_i (the
// constant part of A).
void membrane_terms(const CellModel& model, const SimState& state, Eigen::VectorXd& K, Eigen::VectorXd& J);

// Full right-hand side A - B V for every compartment.
Eigen::VectorXd rhs(const CellModel& model, const SimState& state);

struct IntegratorOptions {
    rk_gate_mode rk_gates = rk_gate_mode::multistage;
    double divergence_threshold = 10.0;     // V
};

// Owns the scratch space for one scheme; not re-entrant.
class Integrator {
public:
    Integrator(const CellModel& model, SchemeKind scheme, IntegratorOptions opts = {});

    // Advance by k. Throws divergence_detected when any |V| exceeds the
    // threshold or is not finite, insufficient_history for a Taylor2 step
    // without two prior steps (use `step` for the RK21 bootstrap).
    void advance(SimState& s, double k);

    // Like advance, but Taylor2 bootstraps its first two steps with RK21.
    void step(SimState& s, double k);

    SchemeKind scheme() const { return scheme_; }

private:
    void calcium_update(SimState& s, double k);
    void gates_update(SimState& s, double k, gate_rule rule, const Eigen::VectorXd& v_eval);
    void gates_rk(SimState& s, double k, std::initializer_list<const Eigen::VectorXd*> stage_v);
    void compute_terms(const SimState& s);
    void neighbour_sum(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
    void implicit_solve(const SimState& s, double dt, Eigen::VectorXd& out);
    void push_history(SimState& s, const Eigen::VectorXd& rhs_now);

    void step_ftcs(SimState& s, double k);
    void step_btcs(SimState& s, double k);
    void step_exp_euler(SimState& s, double k);
    void step_hcn(SimState& s, double k);
    void step_rk21(SimState& s, double k);
    void step_rk41(SimState& s, double k);
    void step_taylor2(SimState& s, double k);

    void check(const SimState& s) const;

    const CellModel* model_;
    SchemeKind scheme_;
    IntegratorOptions opts_;

    Eigen::VectorXd K_, J_, nb_, a_, b_, vnew_;
    std::array<Eigen::VectorXd, 4> stage_;
    HinesSystem<double> sys_;
};

// Single-step conveniences.
SimState step_ftcs(const CellModel& m, SimState s, double k);
SimState step_btcs(const CellModel& m, SimState s, double k);
SimState step_exp_euler(const CellModel& m, SimState s, double k);
SimState step_hcn(const CellModel& m, SimState s, double k);
SimState step_rk21(const CellModel& m, SimState s, double k, IntegratorOptions opts = {});
SimState step_rk41(const CellModel& m, SimState s, double k, IntegratorOptions opts = {});
SimState step_taylor2(const CellModel& m, SimState s, double k);

} // namespace hhcable
