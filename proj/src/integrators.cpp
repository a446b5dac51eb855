#include <hhcable/errors.hpp>
#include <hhcable/integrators.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace hhcable {

std::string_view scheme_name(SchemeKind s) {
    switch (s) {
    case SchemeKind::FTCS: return "FTCS";
    case SchemeKind::BTCS: return "BTCS";
    case SchemeKind::ExponentialEuler: return "ExponentialEuler";
    case SchemeKind::HCN: return "HCN";
    case SchemeKind::RK21: return "RK21";
    case SchemeKind::RK41: return "RK41";
    case SchemeKind::Taylor2: return "Taylor2";
    }
    throw unsupported_scheme("unknown scheme");
}

SchemeKind parse_scheme(std::string_view name) {
    std::string n;
    for (char c: name) {
        if (c!='_' && c!='-' && c!=' ') n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (n=="ftcs" || n=="forwardeuler") return SchemeKind::FTCS;
    if (n=="btcs" || n=="backwardeuler") return SchemeKind::BTCS;
    if (n=="exponentialeuler" || n=="expeuler" || n=="ee") return SchemeKind::ExponentialEuler;
    if (n=="hcn" || n=="cn" || n=="hinescranknicolson") return SchemeKind::HCN;
    if (n=="rk21" || n=="rk2") return SchemeKind::RK21;
    if (n=="rk41" || n=="rk4") return SchemeKind::RK41;
    if (n=="taylor2" || n=="2ot") return SchemeKind::Taylor2;
    throw unsupported_scheme("unknown scheme '" + std::string(name) + "'");
}

bool appendix_only(SchemeKind s) {
    return s==SchemeKind::Taylor2;
}

namespace {

double gate_input_value(const GateKinetics& kin, const SimState& s, Eigen::Index j, double v) {
    return kin.input()==gate_input::calcium? s.calcium[j]: v;
}

} // namespace

SimState initial_state(const CellModel& model, double v0) {
    const auto n = static_cast<Eigen::Index>(model.size());
    const auto nc = static_cast<Eigen::Index>(model.channel_count());
    SimState s;
    s.v = Eigen::VectorXd::Constant(n, v0);
    s.calcium = Eigen::VectorXd::Zero(n);
    s.m = Eigen::ArrayXXd::Zero(nc, n);
    s.h = Eigen::ArrayXXd::Ones(nc, n);
    for (Eigen::Index i=0; i<nc; ++i) {
        const auto& ch = model.channels[i];
        for (Eigen::Index j=0; j<n; ++j) {
            s.m(i, j) = gate_steady_init(ch.activation, gate_input_value(ch.activation, s, j, v0));
            if (ch.inactivation) {
                s.h(i, j) = gate_steady_init(*ch.inactivation, gate_input_value(*ch.inactivation, s, j, v0));
            }
        }
    }
    return s;
}

void membrane_terms(const CellModel& model, const SimState& s, Eigen::VectorXd& K, Eigen::VectorXd& J) {
    const auto n = static_cast<Eigen::Index>(model.size());
    K = model.alpha;
    J = model.alpha.cwiseProduct(model.e_leak);
    for (Eigen::Index i=0; i<static_cast<Eigen::Index>(model.channel_count()); ++i) {
        const auto& ch = model.channels[i];
        for (Eigen::Index j=0; j<n; ++j) {
            double g = channel_conductance(ch, model.gbar(i, j), {s.m(i, j), s.h(i, j)});
            double beta = g/model.cm[j];
            K[j] += beta;
            J[j] += beta*ch.reversal;
        }
    }
}

namespace {

void neighbour_sum(const CellModel& model, const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    const auto n = v.size();
    out.setZero(n);
    for (Eigen::Index j=1; j<n; ++j) {
        const int p = model.parent[j];
        out[j] += model.to_parent[j]*v[p];
        out[p] += model.from_parent[j]*v[j];
    }
}

} // namespace

std::pair<double, double> coefficients_AB(const CellModel& model, const SimState& s, int j) {
    Eigen::VectorXd K, J;
    membrane_terms(model, s, K, J);
    double a = J[j];
    if (int p = model.parent[j]; p>=0) a += model.to_parent[j]*s.v[p];
    for (int q: model.tree.children(j)) a += model.from_parent[q]*s.v[q];
    return {a, K[j] + model.coupling_diag[j]};
}

Eigen::VectorXd rhs(const CellModel& model, const SimState& s) {
    Eigen::VectorXd K, J, nb;
    membrane_terms(model, s, K, J);
    neighbour_sum(model, s.v, nb);
    return J + nb - (K + model.coupling_diag).cwiseProduct(s.v);
}

Integrator::Integrator(const CellModel& model, SchemeKind scheme, IntegratorOptions opts):
    model_(&model), scheme_(scheme), opts_(opts), sys_(static_cast<Eigen::Index>(model.size()))
{}

void Integrator::compute_terms(const SimState& s) {
    membrane_terms(*model_, s, K_, J_);
}

void Integrator::neighbour_sum(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    hhcable::neighbour_sum(*model_, v, out);
}

void Integrator::calcium_update(SimState& s, double k) {
    if (!model_->calcium) return;
    const auto& m = *model_;
    const auto n = static_cast<Eigen::Index>(m.size());
    for (Eigen::Index j=0; j<n; ++j) {
        double i_ca = 0;
        for (Eigen::Index i=0; i<static_cast<Eigen::Index>(m.channel_count()); ++i) {
            const auto& ch = m.channels[i];
            if (!ch.carries_calcium) continue;
            double g = channel_conductance(ch, m.gbar(i, j), {s.m(i, j), s.h(i, j)});
            i_ca += g*(s.v[j] - ch.reversal)*m.area[j];
        }
        CalciumPool pool{s.calcium[j], m.calcium->influx_scale, m.calcium->decay_time};
        s.calcium[j] = calcium_step(pool, i_ca, k).concentration;
    }
}

void Integrator::gates_update(SimState& s, double k, gate_rule rule, const Eigen::VectorXd& v_eval) {
    const auto& m = *model_;
    const auto n = static_cast<Eigen::Index>(m.size());
    for (Eigen::Index i=0; i<static_cast<Eigen::Index>(m.channel_count()); ++i) {
        const auto& ch = m.channels[i];
        for (Eigen::Index j=0; j<n; ++j) {
            s.m(i, j) = gate_step(ch.activation, s.m(i, j), gate_input_value(ch.activation, s, j, v_eval[j]), k, rule);
            if (ch.inactivation) {
                s.h(i, j) = gate_step(*ch.inactivation, s.h(i, j), gate_input_value(*ch.inactivation, s, j, v_eval[j]), k, rule);
            }
        }
    }
}

namespace {

// Explicit RK on dy/dt = (y_inf(x) - y)/tau(x) with x given per stage.
double rk_gate(const GateKinetics& kin, double y0, const double* x, int stages, double k) {
    auto f = [&](double y, double xs) {
        return (kin.steady_state(xs) - y)/kin.time_constant(xs);
    };
    if (stages==2) {
        double s1 = f(y0, x[0]);
        double s2 = f(y0 + k*s1, x[1]);
        return y0 + 0.5*k*(s1 + s2);
    }
    double s1 = f(y0, x[0]);
    double s2 = f(y0 + 0.5*k*s1, x[1]);
    double s3 = f(y0 + 0.5*k*s2, x[2]);
    double s4 = f(y0 + k*s3, x[3]);
    return y0 + k/6*(s1 + 2*s2 + 2*s3 + s4);
}

} // namespace

void Integrator::gates_rk(SimState& s, double k, std::initializer_list<const Eigen::VectorXd*> stage_v) {
    const auto& m = *model_;
    const auto n = static_cast<Eigen::Index>(m.size());
    const int stages = static_cast<int>(stage_v.size());
    if (opts_.rk_gates==rk_gate_mode::single_stage) {
        gates_update(s, k, gate_rule::forward_euler, **stage_v.begin());
        return;
    }
    double x[4];
    for (Eigen::Index i=0; i<static_cast<Eigen::Index>(m.channel_count()); ++i) {
        const auto& ch = m.channels[i];
        for (Eigen::Index j=0; j<n; ++j) {
            int q = 0;
            for (auto* v: stage_v) x[q++] = gate_input_value(ch.activation, s, j, (*v)[j]);
            s.m(i, j) = rk_gate(ch.activation, s.m(i, j), x, stages, k);
            if (ch.inactivation) {
                q = 0;
                for (auto* v: stage_v) x[q++] = gate_input_value(*ch.inactivation, s, j, (*v)[j]);
                s.h(i, j) = rk_gate(*ch.inactivation, s.h(i, j), x, stages, k);
            }
        }
    }
}

void Integrator::implicit_solve(const SimState& s, double dt, Eigen::VectorXd& out) {
    const auto& m = *model_;
    const auto n = static_cast<Eigen::Index>(m.size());
    sys_.diagonal = Eigen::VectorXd::Ones(n) + dt*(K_ + m.coupling_diag);
    sys_.upper = -dt*m.to_parent;
    sys_.lower = -dt*m.from_parent;
    sys_.rhs = s.v + dt*J_;
    hines_solve_in_place(sys_, m.tree, out);
}

void Integrator::push_history(SimState& s, const Eigen::VectorXd& rhs_now) {
    s.rhs_history[1].swap(s.rhs_history[0]);
    s.rhs_history[0] = rhs_now;
}

void Integrator::check(const SimState& s) const {
    for (Eigen::Index j=0; j<s.v.size(); ++j) {
        if (!std::isfinite(s.v[j]) || std::abs(s.v[j])>opts_.divergence_threshold) {
            throw divergence_detected(s.t, static_cast<int>(j));
        }
    }
}

void Integrator::step_ftcs(SimState& s, double k) {
    gates_update(s, k, gate_rule::forward_euler, s.v);
    compute_terms(s);
    neighbour_sum(s.v, nb_);
    vnew_ = s.v + k*(J_ + nb_ - (K_ + model_->coupling_diag).cwiseProduct(s.v));
}

void Integrator::step_btcs(SimState& s, double k) {
    gates_update(s, k, gate_rule::backward_euler, s.v);
    compute_terms(s);
    implicit_solve(s, k, vnew_);
}

void Integrator::step_exp_euler(SimState& s, double k) {
    gates_update(s, k, gate_rule::exact_exponential, s.v);
    compute_terms(s);
    neighbour_sum(s.v, nb_);
    a_ = J_ + nb_;
    b_ = K_ + model_->coupling_diag;
    vnew_.resize(s.v.size());
    for (Eigen::Index j=0; j<s.v.size(); ++j) {
        double ss = a_[j]/b_[j];
        vnew_[j] = ss + (s.v[j] - ss)*std::exp(-b_[j]*k);
    }
}

void Integrator::step_hcn(SimState& s, double k) {
    // Gates live at half-integer times: advance them a full step centred on V^n.
    gates_update(s, k, gate_rule::trapezoidal, s.v);
    compute_terms(s);
    implicit_solve(s, 0.5*k, stage_[0]);
    vnew_ = 2*stage_[0] - s.v;
}

void Integrator::step_rk21(SimState& s, double k) {
    compute_terms(s);
    neighbour_sum(s.v, nb_);
    a_ = J_ + nb_;
    b_ = K_ + model_->coupling_diag;
    auto& k1 = stage_[0];
    auto& k2 = stage_[1];
    auto& v1 = stage_[2];
    k1 = a_ - b_.cwiseProduct(s.v);
    v1 = s.v + k*k1;
    k2 = a_ - b_.cwiseProduct(v1);
    vnew_ = s.v + 0.5*k*(k1 + k2);
    if (scheme_==SchemeKind::Taylor2) push_history(s, k1);
    gates_rk(s, k, {&s.v, &v1});
}

void Integrator::step_rk41(SimState& s, double k) {
    compute_terms(s);
    neighbour_sum(s.v, nb_);
    a_ = J_ + nb_;
    b_ = K_ + model_->coupling_diag;
    Eigen::VectorXd k1 = a_ - b_.cwiseProduct(s.v);
    Eigen::VectorXd v1 = s.v + 0.5*k*k1;
    Eigen::VectorXd k2 = a_ - b_.cwiseProduct(v1);
    Eigen::VectorXd v2 = s.v + 0.5*k*k2;
    Eigen::VectorXd k3 = a_ - b_.cwiseProduct(v2);
    Eigen::VectorXd v3 = s.v + k*k3;
    Eigen::VectorXd k4 = a_ - b_.cwiseProduct(v3);
    vnew_ = s.v + k/6*(k1 + 2*k2 + 2*k3 + k4);
    gates_rk(s, k, {&s.v, &v1, &v2, &v3});
}

void Integrator::step_taylor2(SimState& s, double k) {
    const auto n = s.v.size();
    if (s.history_depth<2 || s.rhs_history[0].size()!=n || s.rhs_history[1].size()!=n) {
        throw insufficient_history("Taylor2 needs two prior steps of history");
    }
    compute_terms(s);
    neighbour_sum(s.v, nb_);
    Eigen::VectorXd f = J_ + nb_ - (K_ + model_->coupling_diag).cwiseProduct(s.v);
    vnew_ = s.v + k*f + 0.25*k*(f - s.rhs_history[1]);
    push_history(s, f);
    gates_update(s, k, gate_rule::forward_euler, s.v);
}

void Integrator::advance(SimState& s, double k) {
    switch (scheme_) {
    case SchemeKind::FTCS: step_ftcs(s, k); break;
    case SchemeKind::BTCS: step_btcs(s, k); break;
    case SchemeKind::ExponentialEuler: step_exp_euler(s, k); break;
    case SchemeKind::HCN: step_hcn(s, k); break;
    case SchemeKind::RK21: step_rk21(s, k); break;
    case SchemeKind::RK41: step_rk41(s, k); break;
    case SchemeKind::Taylor2: step_taylor2(s, k); break;
    }
    // Calcium follows the step, driven by V^n and the freshly advanced gates.
    calcium_update(s, k);

    s.v_history[1].swap(s.v_history[0]);
    s.v_history[0].swap(s.v);
    s.v = vnew_;
    s.history_depth = std::min(s.history_depth + 1, 2);
    s.t += k;
    ++s.step;
    check(s);
}

void Integrator::step(SimState& s, double k) {
    if (scheme_==SchemeKind::Taylor2 && s.history_depth<2) {
        step_rk21(s, k);
        calcium_update(s, k);
        s.v_history[1].swap(s.v_history[0]);
        s.v_history[0].swap(s.v);
        s.v = vnew_;
        s.history_depth = std::min(s.history_depth + 1, 2);
        s.t += k;
        ++s.step;
        check(s);
        return;
    }
    advance(s, k);
}

namespace {

SimState one_step(const CellModel& m, SimState s, double k, SchemeKind scheme, IntegratorOptions opts = {}) {
    Integrator(m, scheme, opts).advance(s, k);
    return s;
}

} // namespace

SimState step_ftcs(const CellModel& m, SimState s, double k) { return one_step(m, std::move(s), k, SchemeKind::FTCS); }
SimState step_btcs(const CellModel& m, SimState s, double k) { return one_step(m, std::move(s), k, SchemeKind::BTCS); }
SimState step_exp_euler(const CellModel& m, SimState s, double k) { return one_step(m, std::move(s), k, SchemeKind::ExponentialEuler); }
SimState step_hcn(const CellModel& m, SimState s, double k) { return one_step(m, std::move(s), k, SchemeKind::HCN); }
SimState step_rk21(const CellModel& m, SimState s, double k, IntegratorOptions o) { return one_step(m, std::move(s), k, SchemeKind::RK21, o); }
SimState step_rk41(const CellModel& m, SimState s, double k, IntegratorOptions o) { return one_step(m, std::move(s), k, SchemeKind::RK41, o); }
SimState step_taylor2(const CellModel& m, SimState s, double k) { return one_step(m, std::move(s), k, SchemeKind::Taylor2); }

} // namespace hhcable
