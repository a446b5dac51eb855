// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include "eigenmode.hpp"
#include "support.hpp"
#include "synthetic.hpp"

#include <hhcable/analysis.hpp>
#include <hhcable/config.hpp>
#include <hhcable/experiments.hpp>
#include <hhcable/hines.hpp>
#include <hhcable/stability.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace hhcable;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

const std::string models = HHCABLE_MODELS_DIR;
const std::string cli = HHCABLE_CLI;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty()? "": "; ") + what;
        }
    }
};

std::string fmt(const char* f, auto... xs) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. One-step amplification on a frozen cosine eigenmode against the closed forms.
Outcome growth_factor_oracle() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto mc = mode_chain();
    double worst = 0;
    int checks = 0;
    for (double theta: {0.35, std::numbers::pi/2, 2.8}) {
        auto co = SchemeCoefficients::from_couplings(mc.K, mc.c, mc.c, theta);
        for (double f: {0.1, 0.5, 1.0, 1.5, 2.5}) {
            const double k = f/(co.K + 2*co.L);
            for (auto s: all_schemes) {
                auto g = growth_factor(s, co, k);
                double err = std::abs(measured_growth(mc, s, theta, k, g.value) - g.value);
                err = std::max(err, std::abs(g.cosine_basis_value - g.value.real()));
                if (err>1e-10) o.require(false, fmt("%s theta=%.3g k=%.3g(K+2L)^-1 err=%.3g", std::string(scheme_name(s)).c_str(), theta, f, err));
                worst = std::max(worst, err);
                ++checks;
            }
        }
    }
    const double dt = seconds_since(t0);
    o.require(dt<1.0, fmt("runtime %.2f s", dt));
    o.detail = fmt("%d checks, max |g_measured - g| = %.2e, %.2f s", checks, worst, dt) + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

// 2. Predicted stability limits against the first unstable step of a 1 us sweep.
Outcome stability_limits() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_experiment(models + "/spiking.yaml");
    auto model = cfg.model();
    const double duration = std::max(cfg.duration, 0.5);
    o.require(model.size()<=20, "model too large");

    std::vector<CoefficientSample> samples;
    auto path = model.tree.longest_tip_to_tip_path();
    SimOptions ref_opts;
    ref_opts.observer = coefficient_recorder(model, path, samples);
    auto ref = run_simulation(model, SchemeKind::HCN, 1e-6, duration, {0}, ref_opts);
    o.require(ref.stable, "HCN reference unstable");

    std::vector<double> grid;
    for (int i=1; i<=99; ++i) grid.push_back(i*1e-6);
    const unsigned jobs = default_jobs();

    std::string summary;
    for (auto s: {SchemeKind::FTCS, SchemeKind::RK21, SchemeKind::RK41}) {
        auto pred = min_over_cycle_limit(model, samples, s, ref, 0);
        // Only the grid up to the first failure matters; stop scanning there.
        std::vector<double> head(grid.begin(), grid.begin() + 30);
        auto emp = first_unstable_step(model, s, head, duration, cfg.integrator, jobs);
        const std::string name(scheme_name(s));
        if (!pred.limit || !emp) {
            o.require(false, name + ": no predicted or empirical limit");
            continue;
        }
        const double diff = std::abs(*emp - *pred.limit);
        summary += fmt("%s predicted %.3f us, blow-up %.0f us; ", name.c_str(), *pred.limit*1e6, *emp*1e6);
        o.require(diff<=1e-6 + 1e-12, fmt("%s off by %.3f us", name.c_str(), diff*1e6));
    }
    for (auto s: {SchemeKind::BTCS, SchemeKind::ExponentialEuler, SchemeKind::HCN}) {
        auto emp = first_unstable_step(model, s, grid, duration, cfg.integrator, jobs);
        o.require(!emp, fmt("%s diverged at %.0f us", std::string(scheme_name(s)).c_str(), emp? *emp*1e6: 0.0));
    }
    summary += fmt("BTCS/ExpEuler/HCN: %zu cells each; %.0f s", grid.size(), seconds_since(t0));
    o.detail = summary + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

// 3. Richardson ladder slopes in the subthreshold regime.
Outcome convergence_orders() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_experiment(models + "/subthreshold.yaml");
    auto model = cfg.model();
    const std::vector<SchemeKind> schemes = {SchemeKind::HCN, SchemeKind::FTCS, SchemeKind::BTCS,
                                             SchemeKind::ExponentialEuler, SchemeKind::RK21, SchemeKind::RK41};
    std::vector<OrderResult> results(schemes.size());
    parallel_for(schemes.size(), default_jobs(), [&](std::size_t i) {
        results[i] = convergence_order(model, schemes[i], cfg.order, cfg.integrator);
    });
    std::string summary;
    for (auto& r: results) {
        const bool second = r.scheme==SchemeKind::HCN;
        const double lo = second? 1.7: 0.6, hi = second? 2.3: 1.4;
        summary += fmt("%s %.3f; ", std::string(scheme_name(r.scheme)).c_str(), r.slope);
        o.require(r.slope>=lo && r.slope<=hi, fmt("%s slope %.3f outside [%.1f, %.1f]", std::string(scheme_name(r.scheme)).c_str(), r.slope, lo, hi));
    }
    const double dt = seconds_since(t0);
    o.require(dt<300, fmt("runtime %.0f s", dt));
    o.detail = summary + fmt("%.1f s", dt) + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

// 4. Exponential Euler reproduces the constant-coefficient solution.
Outcome exp_euler_exactness() {
    Outcome o;
    double worst = 0;
    for (double alpha: {10.0, 100.0, 1000.0}) {
        Compartment c;
        c.radius = 1e-6;
        c.length = 20e-6;
        c.rm = 1/(alpha*c.cm);
        c.e_leak = -0.065;
        auto m = CellModel::make(MorphologyTree::build({c}), {});
        for (double k: {1e-6, 1e-5, 1e-4, 1e-3, 5e-3, 1e-2}) {
            auto s = step_exp_euler(m, initial_state(m, 0.02), k);
            const double exact = -0.065 + (0.02 + 0.065)*std::exp(-alpha*k);
            worst = std::max(worst, std::abs(s.v[0] - exact));
        }
    }
    o.require(worst<1e-14, fmt("max error %.3g", worst));
    o.detail = fmt("max step error %.2e V for k up to 10 ms", worst) + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

// 5. HCN beyond 2/(K+2L): decaying alternation, detected and measured.
Outcome hcn_oscillation_onset() {
    Outcome o;
    auto mc = mode_chain();
    const double theta = std::numbers::pi/2;
    auto co = SchemeCoefficients::from_couplings(mc.K, mc.c, mc.c, theta);
    const double k = 3/(co.K + 2*co.L);
    const double g = growth_factor(SchemeKind::HCN, co, k).value.real();
    o.require(g<0 && std::abs(g)<1, fmt("g = %.4f", g));

    SimState s = initial_state(mc.model, 0);
    for (int j=0; j<mc.n; ++j) s.v[j] = 0.01*std::cos(j*theta);
    const int probe = mc.n/2 + 1 - (mc.n/2 + 1)%4;     // cos(j pi/2) = 1
    Integrator in(mc.model, SchemeKind::HCN);
    std::vector<double> traj{s.v[probe]};
    for (int n=0; n<12; ++n) {
        in.advance(s, k);
        traj.push_back(s.v[probe]);
    }
    double worst_ratio = 0;
    for (std::size_t n=1; n<8; ++n) {
        o.require(traj[n]*traj[n-1]<0, fmt("no sign change at step %zu", n));
        const double ratio = std::abs(traj[n]/traj[n-1]);
        worst_ratio = std::max(worst_ratio, std::abs(ratio - std::abs(g)));
    }
    o.require(worst_ratio<1e-9, fmt("decay ratio off |g| by %.2e", worst_ratio));

    Eigen::Map<Eigen::VectorXd> v(traj.data(), static_cast<Eigen::Index>(traj.size()));
    auto events = detect_oscillations(v);
    o.require(!events.empty(), "detect_oscillations did not fire");
    double worst_amp = 0;
    if (!events.empty()) {
        auto& a = events.front().amplitudes;
        for (std::size_t i=1; i<std::min<std::size_t>(a.size(), 8); ++i) {
            worst_amp = std::max(worst_amp, std::abs(a[i]/a[i-1] - std::abs(g))/std::abs(g));
        }
        o.require(worst_amp<0.05, fmt("quarter-rule decay off by %.2f%%", 100*worst_amp));
    }
    o.detail = fmt("g = %.4f, step ratio error %.1e, event length %zu, quarter-rule decay error %.2e",
                   g, worst_ratio, events.empty()? 0: events.front().length, worst_amp)
             + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

// 6. Taylor2 cubic frontier.
Outcome taylor2_frontier() {
    Outcome o;
    auto largest = [](double P) {
        double m = 0;
        for (auto r: taylor2_roots(P)) m = std::max(m, std::abs(r));
        return m;
    };
    const double at = largest(0.5), below = largest(0.49), above = largest(0.51);
    o.require(std::abs(at - 1)<1e-6, fmt("|g|(0.5) = %.9f", at));
    o.require(below<1, fmt("|g|(0.49) = %.6f", below));
    o.require(above>1, fmt("|g|(0.51) = %.6f", above));
    o.detail = fmt("|g|max: P=0.49 -> %.6f, P=0.5 -> %.9f, P=0.51 -> %.6f", below, at, above)
             + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

// 7. Hines elimination against dense LU.
Outcome hines_vs_dense() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> off(-1, -0.05), val(-1, 1), extra(0.01, 2);
    double worst = 0;
    for (int trial=0; trial<200; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 50)(rng);
        auto t = random_tree(n, rng);
        HinesSystem<double> s(n);
        for (int j=1; j<n; ++j) {
            s.upper[j] = off(rng);
            s.lower[j] = off(rng);
        }
        for (int j=0; j<n; ++j) {
            double d = extra(rng);
            if (t.parent(j)>=0) d += std::abs(s.upper[j]);
            for (int c: t.children(j)) d += std::abs(s.lower[c]);
            s.diagonal[j] = d;
            s.rhs[j] = val(rng);
        }
        Eigen::VectorXd dense = s.dense(t).partialPivLu().solve(s.rhs);
        worst = std::max(worst, (hines_solve(s, t) - dense).cwiseAbs().maxCoeff());
    }
    const double dt = seconds_since(t0);
    o.require(worst<=1e-12, fmt("max abs diff %.3g", worst));
    o.require(dt<10, fmt("runtime %.1f s", dt));
    o.detail = fmt("200 trees, max |x_hines - x_dense| = %.2e, %.3f s", worst, dt) + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

// 8. Analysis building blocks on constructed signals.
Outcome analysis_suite() {
    Outcome o;
    const double A = 0.0025;
    Eigen::VectorXd alt(10);
    for (int i=0; i<10; ++i) alt[i] = (i%2)? -A: A;
    auto ev = detect_oscillations(alt);
    bool exact = ev.size()==1 && ev[0].length==8;
    if (exact) for (double a: ev[0].amplitudes) exact = exact && a==A;
    o.require(exact, "quarter rule did not return A exactly");

    const double dt = 1e-5;
    CycleShape shape;
    auto v = synth_cycles(shape, dt, static_cast<long>(2.5*shape.period/dt) + 1);
    std::string label = "?";
    try {
        label = classify_cycle(segment_cycles(v, dt).at(0)).label;
    }
    catch (const std::exception& e) {
        label = e.what();
    }
    o.require(label=="3-1", "classifier label " + label);

    Eigen::VectorXd tone(100000);
    for (int i=0; i<tone.size(); ++i) tone[i] = std::sin(2*std::numbers::pi*15*i/1e4);
    auto p = welch_psd(tone, 1e4);
    Eigen::Index peak;
    p.power.maxCoeff(&peak);
    o.require(p.frequency[peak]==15.0, fmt("PSD peak at %.1f Hz", p.frequency[peak]));

    double worst = 0;
    for (double e: {0.5, 1.0, 2.0}) {
        std::vector<std::pair<double, double>> pts;
        for (double k: {8e-6, 4e-6, 2e-6, 1e-6}) pts.push_back({k, 0.37*std::pow(k, e)});
        worst = std::max(worst, std::abs(empirical_order(pts) - e));
    }
    o.require(worst<1e-6, fmt("order error %.3g", worst));
    o.detail = fmt("quarter rule exact, label %s, PSD peak %.0f Hz, order error %.1e", label.c_str(), p.frequency[peak], worst)
             + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

int run_cli(const std::string& args) {
    int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc)? WEXITSTATUS(rc): -1;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    if (!fs::exists(root)) return out;
    for (auto& e: fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        out[fs::relative(e.path(), root).string()] = s.str();
    }
    return out;
}

// 9. Byte-identical reruns, including sweeps at different worker counts.
Outcome determinism() {
    Outcome o;
    auto base = fs::temp_directory_path()/"hhcable_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);
    auto cfg = base/"exp.yaml";
    std::ofstream(cfg) << "morphology: " << models << "/spiking_morphology.yaml\n"
                       << "channels: " << models << "/hh_channels.yaml\n"
                       << "schemes: [FTCS, BTCS, ExponentialEuler, HCN, RK21, RK41, Taylor2]\n"
                       << "step_sizes: [1.0e-6, 3.0e-6, 10.0e-6]\n"
                       << "duration: 0.08\nrecord: [0, 6]\n";
    for (auto s: all_schemes) {
        const std::string name(scheme_name(s));
        auto a = base/("run_a_" + name), b = base/("run_b_" + name);
        int ra = run_cli("run --config " + cfg.string() + " --scheme " + name + " --dt 2e-6 --out " + a.string());
        int rb = run_cli("run --config " + cfg.string() + " --scheme " + name + " --dt 2e-6 --out " + b.string());
        o.require(ra==rb, name + " exit codes differ");
        auto ta = tree_contents(a);
        o.require(!ta.empty() && ta==tree_contents(b), name + " run outputs differ");
    }
    std::vector<std::map<std::string, std::string>> sweeps;
    for (unsigned jobs: {1u, 2u, 5u}) {
        auto out = base/("sweep_" + std::to_string(jobs));
        int rc = run_cli("sweep --config " + cfg.string() + " --jobs " + std::to_string(jobs) + " --out " + out.string());
        o.require(rc==0, fmt("sweep with %u jobs exited %d", jobs, rc));
        sweeps.push_back(tree_contents(out));
    }
    o.require(!sweeps[0].empty(), "sweep wrote nothing");
    o.require(sweeps[0]==sweeps[1] && sweeps[0]==sweeps[2], "sweep outputs depend on worker count");
    int seedless = run_cli("sweep --config " + cfg.string() + " --jobs 3 --seedless --out " + (base/"seedless").string());
    o.require(seedless==0, fmt("--seedless exited %d", seedless));
    o.detail = fmt("7 schemes x 2 runs identical; sweep (%zu files) identical at 1, 2, 5 workers", sweeps[0].size())
             + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

// 10. Clamped passive chain against the analytic sealed-end profile.
Outcome passive_cable() {
    Outcome o;
    const double a = 1e-6, rm = 1.0, rl = 1.0;
    const double lambda = std::sqrt(rm*a/(2*rl));
    const double h = lambda/10;
    const int n = 51;
    std::vector<Compartment> cs;
    for (int i=0; i<n; ++i) {
        Compartment c;
        c.id = i;
        if (i>0) c.parent = i - 1;
        c.radius = a;
        c.length = h;
        c.rm = rm;
        c.rl = rl;
        c.e_leak = 0;
        cs.push_back(c);
    }
    // Clamp the root with a large always-open conductance reversing at v0.
    const double v0 = 0.01;
    ChannelSpec clamp;
    clamp.name = "clamp";
    clamp.reversal = v0;
    clamp.activation = GateKinetics(ConstantKinetics{1.0, 1e-3});
    auto m = CellModel::make(MorphologyTree::build(cs), {clamp}, {{"clamp", {{0, 1e9}}}});
    SimState s = initial_state(m, 0);
    Integrator in(m, SchemeKind::BTCS);
    for (int step=0; step<3000; ++step) in.advance(s, 1e-3);
    o.require(std::abs(s.v[0] - v0)<1e-6*v0, fmt("clamp leaks: V0 = %.9g", s.v[0]));
    const double len = (n - 0.5)*h;
    double worst = 0;
    for (int j=0; j<n; ++j) {
        const double x = j*h;
        const double exact = v0*std::cosh((len - x)/lambda)/std::cosh(len/lambda);
        worst = std::max(worst, std::abs(s.v[j] - exact)/exact);
    }
    o.require(worst<0.01, fmt("max relative error %.3f%%", 100*worst));
    o.detail = fmt("lambda = %.3g m, %d compartments, max relative deviation %.3f%%", lambda, n, 100*worst)
             + (o.detail.empty()? "": " | " + o.detail);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "growth-factor oracle equivalence", growth_factor_oracle},
        {2, "stability-limit prediction", stability_limits},
        {3, "convergence orders", convergence_orders},
        {4, "exponential Euler exactness", exp_euler_exactness},
        {5, "HCN oscillation onset", hcn_oscillation_onset},
        {6, "Taylor2 cubic stability frontier", taylor2_frontier},
        {7, "Hines solver vs dense", hines_vs_dense},
        {8, "analysis suite", analysis_suite},
        {9, "determinism", determinism},
        {10, "passive-cable sanity", passive_cable},
    };
    std::set<int> only;
    for (int i=1; i<argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (auto& c: all) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        try {
            o = c.run();
        }
        catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.pass;
        std::printf("%s [%d] %s: %s\n", o.pass? "PASS": "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures? 1: 0;
}
