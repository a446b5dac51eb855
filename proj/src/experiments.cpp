#include <hhcable/analysis.hpp>
#include <hhcable/errors.hpp>
#include <hhcable/experiments.hpp>

#include <cmath>

namespace hhcable {

unsigned default_jobs() {
    return std::max(1u, std::thread::hardware_concurrency());
}

OrderResult convergence_order(const CellModel& model, SchemeKind scheme, const OrderOptions& opts,
                              const IntegratorOptions& integrator)
{
    if (opts.levels<3) throw error("the order ladder needs at least 3 levels");
    if (opts.reference_divisor<1) throw error("reference divisor must be >= 1");
    SimOptions so;
    so.integrator = integrator;

    OrderResult out;
    out.scheme = scheme;
    const long finest = 1l << (opts.levels - 1);
    out.reference_step = opts.k0/finest/opts.reference_divisor;
    const long ref_per_k0 = finest*opts.reference_divisor;

    auto check_regime = [&](const SimTrace& tr) {
        if (!tr.stable) throw regime_violation(std::string(scheme_name(scheme)) + " diverged at k=" + std::to_string(tr.k) + " s");
        for (Eigen::Index c=0; c<tr.samples.cols(); ++c) {
            if (!detect_spikes(tr.samples.col(c), tr.k).empty()) {
                throw regime_violation("spike detected in compartment " + std::to_string(tr.record[c]) + " at k=" + std::to_string(tr.k) + " s; the order ladder needs a subthreshold regime");
            }
        }
    };

    auto ref = run_simulation(model, scheme, out.reference_step, opts.duration, {}, so);
    check_regime(ref);
    for (int level=0; level<opts.levels; ++level) {
        const long div = 1l << level;
        const double k = opts.k0/div;
        auto tr = run_simulation(model, scheme, k, opts.duration, {}, so);
        check_regime(tr);
        double sum = 0;
        long count = 0;
        for (long i=0; i*div<static_cast<long>(tr.times.size()) && i*ref_per_k0<static_cast<long>(ref.times.size()); ++i) {
            sum += (tr.samples.row(i*div) - ref.samples.row(i*ref_per_k0)).squaredNorm();
            count += tr.samples.cols();
        }
        out.errors.emplace_back(k, std::sqrt(sum/count));
    }
    out.slope = empirical_order(out.errors);
    return out;
}

std::optional<double> first_unstable_step(const CellModel& model, SchemeKind scheme,
                                          const std::vector<double>& steps, double duration,
                                          const IntegratorOptions& integrator, unsigned jobs)
{
    std::vector<char> unstable(steps.size(), 0);
    SimOptions so;
    so.integrator = integrator;
    parallel_for(steps.size(), jobs, [&](std::size_t i) {
        unstable[i] = !run_simulation(model, scheme, steps[i], duration, {model.tree.root()}, so).stable;
    });
    for (std::size_t i=0; i<steps.size(); ++i) {
        if (unstable[i]) return steps[i];
    }
    return std::nullopt;
}

} // namespace hhcable
