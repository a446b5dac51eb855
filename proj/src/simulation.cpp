#include <hhcable/errors.hpp>
#include <hhcable/simulation.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hhcable {

Eigen::VectorXd SimTrace::voltage(int id) const {
    auto it = std::find(record.begin(), record.end(), id);
    if (it==record.end()) throw error("compartment " + std::to_string(id) + " was not recorded");
    return samples.col(it - record.begin());
}

long sample_count(double k, double duration) {
    return static_cast<long>(std::floor(duration/k + 1e-9)) + 1;
}

SimTrace run_simulation(const CellModel& model, SchemeKind scheme, double k, double duration,
                        std::vector<int> record, const SimOptions& opts)
{
    if (!(k>0)) throw error("step size must be positive");
    if (!(duration>=k)) throw error("duration must be at least one step");
    if (record.empty()) {
        record.resize(model.size());
        std::iota(record.begin(), record.end(), 0);
    }
    for (int id: record) {
        if (id<0 || static_cast<std::size_t>(id)>=model.size()) {
            throw error("cannot record missing compartment " + std::to_string(id));
        }
    }

    SimTrace tr;
    tr.k = k;
    tr.duration = duration;
    tr.scheme = std::string(scheme_name(scheme));
    tr.model_hash = model.fingerprint();
    tr.record = record;

    const long n = sample_count(k, duration);
    tr.times.reserve(n);
    tr.samples.resize(n, static_cast<Eigen::Index>(record.size()));

    SimState s = opts.initial? *opts.initial: initial_state(model, opts.v0);
    Integrator integ(model, scheme, opts.integrator);

    auto store = [&](long row) {
        tr.times.push_back(row*k);
        for (std::size_t c=0; c<record.size(); ++c) tr.samples(row, c) = s.v[record[c]];
    };
    store(0);
    if (opts.observer) opts.observer(s);

    long row = 1;
    try {
        for (; row<n; ++row) {
            integ.step(s, k);
            s.t = row*k;
            store(row);
            if (opts.observer && row%opts.observer_stride==0) opts.observer(s);
        }
    }
    catch (const divergence_detected& e) {
        tr.stable = false;
        tr.failure_time = row*k;
        tr.failure_message = e.what();
    }
    catch (const step_rejected& e) {
        tr.stable = false;
        tr.failure_time = row*k;
        tr.failure_message = e.what();
    }
    if (!tr.stable) tr.samples.conservativeResize(row, Eigen::NoChange);
    if (opts.final_state) *opts.final_state = s;
    return tr;
}

} // namespace hhcable
