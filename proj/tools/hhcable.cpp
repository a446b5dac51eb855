// Command-line driver: run, sweep, stability, order, analyze.

#include <hhcable/analysis.hpp>
#include <hhcable/config.hpp>
#include <hhcable/errors.hpp>
#include <hhcable/experiments.hpp>
#include <hhcable/stability.hpp>
#include <hhcable/trace_io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

using namespace hhcable;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

enum exit_code { ok = 0, failure = 1, config_failure = 2, unstable = 3, precondition = 4 };

// Collects output files; writes them under `dir` unless dry, and keeps a
// digest of each for determinism checks.
class sink {
public:
    sink(std::string dir, bool dry): dir_(std::move(dir)), dry_(dry) {}

    void put(const std::string& name, const std::string& content) {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c: content) {
            h ^= c;
            h *= 1099511628211ull;
        }
        {
            std::lock_guard lock(mutex_);
            digests_[name] = h;
        }
        if (dry_) return;
        fs::path p = fs::path(dir_)/name;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw error("cannot write " + p.string());
        out << content;
    }

    const std::map<std::string, std::uint64_t>& digests() const { return digests_; }

private:
    std::string dir_;
    bool dry_;
    std::mutex mutex_;
    std::map<std::string, std::uint64_t> digests_;
};

struct options {
    std::string config;
    std::string scheme;
    double dt = 0;
    double duration = 0;
    std::string out;
    unsigned jobs = 0;
    bool seedless = false;
    std::vector<std::string> traces;
};

std::string fmt(double x) { return format_double(x); }

std::string step_tag(double k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", k);
    return buf;
}

json opt_num(const std::optional<double>& x) { return x? json(*x): json(); }

ExperimentConfig load(const options& o) {
    if (o.config.empty()) throw config_error("<command line>", 0, "--config", "a config file is required");
    auto e = load_experiment(o.config);
    if (!o.scheme.empty()) {
        try {
            e.schemes = {parse_scheme(o.scheme)};
        }
        catch (const unsupported_scheme& ex) {
            throw config_error("<command line>", 0, "--scheme", ex.what());
        }
    }
    if (o.dt>0) e.step_sizes = {o.dt};
    if (o.duration>0) e.duration = o.duration;
    if (!o.out.empty()) e.output_dir = o.out;
    if (!e.step_sizes.empty() && !(e.duration>e.step_sizes.back())) {
        throw config_error("<command line>", 0, "--duration", "duration must exceed the largest step size");
    }
    if (e.schemes.empty()) throw config_error(o.config, 0, "schemes", "no scheme selected");
    if (e.step_sizes.empty()) throw config_error(o.config, 0, "step_sizes", "no step size selected");
    return e;
}

json trace_metadata(const SimTrace& tr, const std::string& file) {
    json j;
    j["scheme"] = tr.scheme;
    j["appendix_only"] = appendix_only(parse_scheme(tr.scheme));
    j["k_s"] = tr.k;
    j["duration_s"] = tr.duration;
    j["model_hash"] = tr.model_hash;
    j["samples"] = tr.sample_count();
    j["record"] = tr.record;
    j["stable"] = tr.stable;
    j["failure_time_s"] = opt_num(tr.failure_time);
    j["failure_message"] = tr.failure_message;
    j["trace_file"] = file;
    return j;
}

std::string csv_of(const SimTrace& tr) {
    std::ostringstream s;
    write_trace_csv(s, tr);
    return s.str();
}

// ---- run ----------------------------------------------------------------

int cmd_run(const options& o, sink& out, unsigned) {
    auto e = load(o);
    auto model = e.model();
    const auto scheme = e.schemes.front();
    const double k = e.step_sizes.front();
    SimOptions so;
    so.integrator = e.integrator;
    if (e.initial_state_path) so.initial = load_state(*e.initial_state_path, model);
    SimState final_state;
    so.final_state = &final_state;
    auto tr = run_simulation(model, scheme, k, e.duration, e.record, so);

    std::string base = "trace_" + std::string(scheme_name(scheme)) + "_k" + step_tag(k);
    out.put(base + ".csv", csv_of(tr));
    out.put(base + ".json", trace_metadata(tr, base + ".csv").dump(2) + "\n");
    if (e.final_state_path && tr.stable) save_state(*e.final_state_path, final_state);
    std::fprintf(stderr, "%s k=%s: %zu samples, %s\n", tr.scheme.c_str(), step_tag(k).c_str(), tr.sample_count(),
                 tr.stable? "stable": ("unstable at t=" + fmt(*tr.failure_time) + " s").c_str());
    return tr.stable? ok: unstable;
}

// ---- sweep --------------------------------------------------------------

struct cell_result {
    SchemeKind scheme;
    double k = 0;
    bool stable = true;
    std::optional<double> failure_time;
    std::string failure_message;
    std::size_t cycles = 0;
    std::vector<std::string> classes;
    std::vector<double> oscillation_rms;
    std::optional<CycleStats> stats;
    std::optional<AccuracyReport> accuracy;
    std::optional<SpectralDensity> psd;
    std::vector<std::string> notes;     // analysis preconditions that did not hold
};

void analyze_cell(cell_result& r, const SimTrace& tr, const SimTrace* reference, const ExperimentConfig& e) {
    const int c = e.record.front();
    Eigen::VectorXd v = tr.voltage(c);
    auto osc = detect_oscillations(v);
    std::vector<ApCycle> cycles;
    try {
        cycles = segment_cycles(v, tr.k, 0, osc, 0);
    }
    catch (const error& ex) {
        r.notes.push_back(ex.what());
    }
    r.cycles = cycles.size();
    for (auto& cy: cycles) r.classes.push_back(classify_cycle(cy, osc).label);
    r.oscillation_rms = oscillation_rms_per_cycle(osc, cycles);
    try {
        r.stats = cycle_stats(cycles, static_cast<std::size_t>(e.analysis.skip_cycles));
    }
    catch (const insufficient_cycles& ex) {
        r.notes.push_back(std::string("stats: ") + ex.what());
    }
    if (reference) {
        try {
            r.accuracy = accuracy_rms(tr, *reference, c, static_cast<std::size_t>(e.analysis.skip_cycles));
        }
        catch (const error& ex) {
            r.notes.push_back(std::string("accuracy: ") + ex.what());
        }
    }
    else {
        r.notes.push_back("accuracy: no stable reference run");
    }
    try {
        r.psd = welch_psd(v, 1/tr.k);
    }
    catch (const error& ex) {
        r.notes.push_back(std::string("psd: ") + ex.what());
    }
}

int cmd_sweep(const options& o, sink& out, unsigned jobs) {
    auto e = load(o);
    auto model = e.model();
    SimOptions so;
    so.integrator = e.integrator;
    if (e.initial_state_path) so.initial = load_state(*e.initial_state_path, model);

    // Same-scheme references at the reference step; the HCN one also records
    // coefficients for the growth-factor span.
    const auto path = e.analysis.theta_path.empty()? model.tree.longest_tip_to_tip_path(): e.analysis.theta_path;
    std::vector<SimTrace> refs(e.schemes.size());
    std::vector<CoefficientSample> coeffs;
    parallel_for(e.schemes.size(), jobs, [&](std::size_t i) {
        SimOptions ro = so;
        if (e.schemes[i]==SchemeKind::HCN) {
            ro.observer = coefficient_recorder(model, path, coeffs);
            ro.observer_stride = e.analysis.coefficient_stride;
        }
        refs[i] = run_simulation(model, e.schemes[i], e.analysis.reference_step, e.duration, e.record, ro);
    });

    const auto ns = e.step_sizes.size();
    std::vector<cell_result> cells(e.schemes.size()*ns);
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        auto& r = cells[i];
        r.scheme = e.schemes[i/ns];
        r.k = e.step_sizes[i%ns];
        auto tr = run_simulation(model, r.scheme, r.k, e.duration, e.record, so);
        r.stable = tr.stable;
        r.failure_time = tr.failure_time;
        r.failure_message = tr.failure_message;
        std::string base = "traces/trace_" + std::string(scheme_name(r.scheme)) + "_k" + step_tag(r.k);
        out.put(base + ".csv", csv_of(tr));
        out.put(base + ".json", trace_metadata(tr, fs::path(base).filename().string() + ".csv").dump(2) + "\n");
        const auto& ref = refs[i/ns];
        analyze_cell(r, tr, ref.stable? &ref: nullptr, e);
    });

    std::ostringstream stab, acc, stats, classes, osc, span;
    stab << "scheme,k_s,stable,failure_time_s\n";
    acc << "scheme,k_s,rms_v,shift_s\n";
    stats << "scheme,k_s,cycles,min_mean_v,min_std_v,max_mean_v,max_std_v,period_mean_s,period_std_s\n";
    classes << "scheme,k_s,cycle,label\n";
    osc << "scheme,k_s,cycle,rms_v\n";
    std::map<SchemeKind, std::ostringstream> psd;
    json report;
    report["model_hash"] = model.fingerprint();
    report["duration_s"] = e.duration;
    report["reference_step_s"] = e.analysis.reference_step;
    report["cells"] = json::array();
    for (auto& r: cells) {
        const std::string name(scheme_name(r.scheme));
        stab << name << ',' << fmt(r.k) << ',' << (r.stable? "true": "false") << ',' << (r.failure_time? fmt(*r.failure_time): "") << '\n';
        if (r.accuracy) acc << name << ',' << fmt(r.k) << ',' << fmt(r.accuracy->rms) << ',' << fmt(r.accuracy->shift) << '\n';
        if (r.stats) {
            auto& s = *r.stats;
            stats << name << ',' << fmt(r.k) << ',' << s.count << ',' << fmt(s.min_mean) << ',' << fmt(s.min_std) << ','
                  << fmt(s.max_mean) << ',' << fmt(s.max_std) << ',' << fmt(s.period_mean) << ',' << fmt(s.period_std) << '\n';
        }
        for (std::size_t c=0; c<r.classes.size(); ++c) {
            classes << name << ',' << fmt(r.k) << ',' << c + 1 << ',' << r.classes[c] << '\n';
            osc << name << ',' << fmt(r.k) << ',' << c + 1 << ',' << fmt(r.oscillation_rms[c]) << '\n';
        }
        if (r.psd) {
            auto& p = psd[r.scheme];
            if (p.tellp()==0) {
                p << "k_s";
                for (Eigen::Index f=0; f<r.psd->frequency.size(); ++f) p << ",f" << fmt(r.psd->frequency[f]);
                p << '\n';
            }
            p << fmt(r.k);
            for (Eigen::Index f=0; f<r.psd->power.size(); ++f) p << ',' << fmt(r.psd->power[f]);
            p << '\n';
        }
        json j;
        j["scheme"] = name;
        j["appendix_only"] = appendix_only(r.scheme);
        j["k_s"] = r.k;
        j["stable"] = r.stable;
        j["failure_time_s"] = opt_num(r.failure_time);
        j["failure_message"] = r.failure_message;
        j["cycles"] = r.cycles;
        std::map<std::string, int> hist;
        for (auto& c: r.classes) ++hist[c];
        j["class_histogram"] = hist;
        j["accuracy_rms_v"] = r.accuracy? json(r.accuracy->rms): json();
        if (r.stats) {
            j["stats"] = {{"cycles", r.stats->count}, {"min_mean_v", r.stats->min_mean}, {"min_std_v", r.stats->min_std},
                          {"max_mean_v", r.stats->max_mean}, {"max_std_v", r.stats->max_std},
                          {"period_mean_s", r.stats->period_mean}, {"period_std_s", r.stats->period_std}};
        }
        else {
            j["stats"] = nullptr;
        }
        j["oscillation_rms_v"] = r.oscillation_rms;
        j["notes"] = r.notes;
        report["cells"].push_back(std::move(j));
    }

    span << "k_s,g_min,g_max\n";
    for (double k: e.step_sizes) {
        double lo = 1, hi = -1;
        for (auto& smp: coeffs) {
            const double theta = spectral_centroid(smp.path_voltage, e.analysis.mean_removal).centroid;
            for (Eigen::Index j=0; j<smp.K.size(); ++j) {
                const double c1 = model.to_parent[j];
                auto sc = SchemeCoefficients::from_couplings(smp.K[j], c1, model.coupling_diag[j] - c1, theta);
                double g = growth_factor(SchemeKind::HCN, sc, k).cosine_basis_value;
                lo = std::min(lo, g);
                hi = std::max(hi, g);
            }
        }
        if (!coeffs.empty()) span << fmt(k) << ',' << fmt(lo) << ',' << fmt(hi) << '\n';
    }

    out.put("stable_intervals.csv", stab.str());
    out.put("accuracy.csv", acc.str());
    out.put("cycle_stats.csv", stats.str());
    out.put("class_map.csv", classes.str());
    out.put("oscillation_rms.csv", osc.str());
    for (auto& [s, p]: psd) out.put("psd_" + std::string(scheme_name(s)) + ".csv", p.str());
    if (!coeffs.empty()) out.put("hcn_growth_span.csv", span.str());
    out.put("report.json", report.dump(2) + "\n");
    std::size_t bad = 0;
    for (auto& r: cells) bad += !r.stable;
    std::fprintf(stderr, "sweep: %zu cells, %zu unstable\n", cells.size(), bad);
    return ok;
}

// ---- stability ----------------------------------------------------------

int cmd_stability(const options& o, sink& out, unsigned) {
    auto e = load(o);
    auto model = e.model();
    const auto path = e.analysis.theta_path.empty()? model.tree.longest_tip_to_tip_path(): e.analysis.theta_path;
    for (int id: path) {
        if (id<0 || static_cast<std::size_t>(id)>=model.size()) throw config_error(e.source, 0, "analysis.theta_path", "no compartment " + std::to_string(id));
    }
    std::vector<CoefficientSample> coeffs;
    SimOptions so;
    so.integrator = e.integrator;
    so.observer = coefficient_recorder(model, path, coeffs);
    so.observer_stride = e.analysis.coefficient_stride;
    if (e.initial_state_path) so.initial = load_state(*e.initial_state_path, model);
    const int soma = model.tree.root();
    auto ref = run_simulation(model, SchemeKind::HCN, e.analysis.reference_step, e.duration, {soma}, so);
    if (!ref.stable) throw regime_violation("HCN reference run diverged: " + ref.failure_message);

    json report;
    report["model_hash"] = model.fingerprint();
    report["reference"] = {{"scheme", "HCN"}, {"k_s", ref.k}, {"duration_s", ref.duration}};
    report["theta_path"] = path;
    json schemes = json::object();
    std::ostringstream curves;
    curves << "scheme,k_s,g_cosine,g_abs\n";
    for (auto s: all_schemes) {
        auto lim = min_over_cycle_limit(model, coeffs, s, ref, soma, e.analysis.mean_removal);
        json j;
        j["limit_seconds"] = opt_num(lim.limit);
        std::optional<double> butcher;
        if (s==SchemeKind::RK21 || s==SchemeKind::RK41) butcher = butcher_limit(s, lim.B);
        j["butcher_limit_seconds"] = opt_num(butcher);
        j["oscillation_onset_seconds"] = opt_num(lim.oscillation_onset);
        j["theta_used"] = lim.theta;
        j["K_min"] = lim.K;
        j["L_at_theta"] = lim.L;
        j["B"] = lim.B;
        j["t_s"] = lim.t;
        j["compartment"] = lim.compartment;
        j["appendix_only"] = appendix_only(s);
        schemes[std::string(scheme_name(s))] = j;

        const double c1 = model.to_parent[lim.compartment];
        auto sc = SchemeCoefficients::from_couplings(lim.K, c1, model.coupling_diag[lim.compartment] - c1, lim.theta);
        for (double k: e.step_sizes) {
            auto g = growth_factor(s, sc, k);
            curves << scheme_name(s) << ',' << fmt(k) << ',' << fmt(g.cosine_basis_value) << ',' << fmt(g.magnitude()) << '\n';
        }
    }
    report["schemes"] = schemes;

    std::ostringstream centroid;
    centroid << "t_s,theta_rad,all_zero\n";
    for (auto& smp: coeffs) {
        auto sp = spectral_centroid(smp.path_voltage, e.analysis.mean_removal);
        centroid << fmt(smp.t) << ',' << fmt(sp.centroid) << ',' << (sp.all_zero? "true": "false") << '\n';
    }
    out.put("stability.json", report.dump(2) + "\n");
    out.put("growth_curves.csv", curves.str());
    out.put("centroid.csv", centroid.str());
    return ok;
}

// ---- order --------------------------------------------------------------

int cmd_order(const options& o, sink& out, unsigned jobs) {
    auto e = load(o);
    auto model = e.model();
    std::vector<OrderResult> results(e.schemes.size());
    parallel_for(e.schemes.size(), jobs, [&](std::size_t i) {
        results[i] = convergence_order(model, e.schemes[i], e.order, e.integrator);
    });
    std::ostringstream csv;
    csv << "scheme,k_s,rms_v\n";
    json report;
    report["model_hash"] = model.fingerprint();
    report["k0_s"] = e.order.k0;
    report["levels"] = e.order.levels;
    report["reference_divisor"] = e.order.reference_divisor;
    report["duration_s"] = e.order.duration;
    json slopes = json::object();
    for (auto& r: results) {
        const std::string name(scheme_name(r.scheme));
        for (auto [k, rms]: r.errors) csv << name << ',' << fmt(k) << ',' << fmt(rms) << '\n';
        slopes[name] = {{"slope", r.slope}, {"reference_step_s", r.reference_step}, {"appendix_only", appendix_only(r.scheme)}};
        std::fprintf(stderr, "%-17s slope %.3f\n", name.c_str(), r.slope);
    }
    report["schemes"] = slopes;
    out.put("order.csv", csv.str());
    out.put("order.json", report.dump(2) + "\n");
    return ok;
}

// ---- analyze ------------------------------------------------------------

int cmd_analyze(const options& o, sink& out, unsigned) {
    if (o.traces.empty()) throw config_error("<command line>", 0, "traces", "no trace files given");
    int status = ok;
    for (auto& file: o.traces) {
        auto tr = load_trace(file);
        if (tr.record.empty() || tr.times.size()<3) throw signal_too_short(file + ": trace has no usable samples");
        json j;
        j["trace"] = fs::path(file).filename().string();
        j["scheme"] = tr.scheme;
        j["k_s"] = tr.k;
        j["stable"] = tr.stable;
        json per = json::object();
        for (int c: tr.record) {
            Eigen::VectorXd v = tr.voltage(c);
            auto osc = detect_oscillations(v);
            auto spikes = detect_spikes(v, tr.k);
            json x;
            x["spikes"] = spikes.size();
            x["oscillation_events"] = osc.size();
            std::vector<ApCycle> cycles = segment_cycles(v, tr.k, 0, osc, 0);
            x["cycles"] = cycles.size();
            json cl = json::array();
            for (auto& cy: cycles) cl.push_back(classify_cycle(cy, osc).label);
            x["classes"] = cl;
            x["oscillation_rms_v"] = oscillation_rms_per_cycle(osc, cycles);
            try {
                auto s = cycle_stats(cycles, 19);
                x["stats"] = {{"cycles", s.count}, {"min_mean_v", s.min_mean}, {"min_std_v", s.min_std},
                              {"max_mean_v", s.max_mean}, {"max_std_v", s.max_std},
                              {"period_mean_s", s.period_mean}, {"period_std_s", s.period_std}};
            }
            catch (const insufficient_cycles&) {
                x["stats"] = nullptr;
                status = precondition;
            }
            try {
                auto p = welch_psd(v, 1/tr.k);
                x["psd_power"] = std::vector<double>(p.power.data(), p.power.data() + p.power.size());
            }
            catch (const signal_too_short&) {
                x["psd_power"] = nullptr;
                status = precondition;
            }
            per["V_" + std::to_string(c)] = x;
        }
        j["compartments"] = per;
        out.put("analysis_" + fs::path(file).stem().string() + ".json", j.dump(2) + "\n");
    }
    return status;
}

using verb = int (*)(const options&, sink&, unsigned);

int dispatch(verb fn, const options& o) {
    try {
        unsigned jobs = o.jobs? o.jobs: default_jobs();
        std::string dir = o.out;
        if (dir.empty() && !o.config.empty()) dir = load(o).output_dir;
        if (dir.empty()) dir = ".";
        sink out(dir, false);
        int rc = fn(o, out, jobs);
        if (o.seedless) {
            sink again(dir, true);
            fn(o, again, 1);
            if (again.digests()!=out.digests()) {
                std::fprintf(stderr, "determinism check failed: rerun produced different output\n");
                return failure;
            }
            std::fprintf(stderr, "determinism check passed: %zu files identical\n", out.digests().size());
        }
        return rc;
    }
    catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return config_failure;
    }
    catch (const morphology_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return config_failure;
    }
    catch (const insufficient_cycles& e) {
        std::fprintf(stderr, "analysis precondition unmet: %s\n", e.what());
        return precondition;
    }
    catch (const no_spikes& e) {
        std::fprintf(stderr, "analysis precondition unmet: %s\n", e.what());
        return precondition;
    }
    catch (const signal_too_short& e) {
        std::fprintf(stderr, "analysis precondition unmet: %s\n", e.what());
        return precondition;
    }
    catch (const regime_violation& e) {
        std::fprintf(stderr, "analysis precondition unmet: %s\n", e.what());
        return precondition;
    }
    catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return failure;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compartmental Hodgkin-Huxley cable simulator"};
    app.require_subcommand(1);
    options o;

    auto common = [&](CLI::App* c, bool with_config = true) {
        if (with_config) c->add_option("--config", o.config, "Experiment config file")->required();
        c->add_option("--out", o.out, "Output directory (overrides the config)");
        c->add_option("--jobs", o.jobs, "Worker threads (default: hardware concurrency)");
        c->add_flag("--seedless", o.seedless, "Rerun with one worker and assert byte-identical output");
    };
    auto sim = [&](CLI::App* c) {
        c->add_option("--scheme", o.scheme, "Integration scheme (overrides the config list)");
        c->add_option("--dt", o.dt, "Step size in seconds (overrides the config list)");
        c->add_option("--duration", o.duration, "Simulated time in seconds");
    };

    auto run = app.add_subcommand("run", "Simulate one scheme at one step size");
    common(run);
    sim(run);
    auto sweep = app.add_subcommand("sweep", "Run every (scheme, step size) cell and emit the reports");
    common(sweep);
    sim(sweep);
    auto stab = app.add_subcommand("stability", "Von Neumann and Butcher step-size limits");
    common(stab);
    stab->add_option("--duration", o.duration, "Reference run length in seconds");
    auto order = app.add_subcommand("order", "Empirical convergence order by step halving");
    common(order);
    order->add_option("--scheme", o.scheme, "Integration scheme (overrides the config list)");
    auto analyze = app.add_subcommand("analyze", "Re-analyze saved traces");
    common(analyze, false);
    analyze->add_option("traces", o.traces, "Trace files (.csv or .json)")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_failure;
    }

    if (*run) return dispatch(cmd_run, o);
    if (*sweep) return dispatch(cmd_sweep, o);
    if (*stab) return dispatch(cmd_stability, o);
    if (*order) return dispatch(cmd_order, o);
    return dispatch(cmd_analyze, o);
}
