#pragma once

#include <hhcable/config.hpp>
#include <hhcable/simulation.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace hhcable {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is handed out in
// index order; results must be written to per-index slots. The first
// exception thrown by any task is rethrown after all threads join.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs==1) {
        for (std::size_t i=0; i<n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t=0; t<jobs; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1))<n;) {
                try {
                    fn(i);
                }
                catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th: pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

unsigned default_jobs();

struct OrderResult {
    SchemeKind scheme = SchemeKind::HCN;
    double reference_step = 0;
    std::vector<std::pair<double, double>> errors;  // (k, rms over all compartments)
    double slope = 0;
};

// k-halving ladder k0, k0/2, ... against a same-scheme run at the smallest
// step divided by `reference_divisor`. Errors are compared at multiples of
// k0. Throws regime_violation when any ladder trace contains a spike.
OrderResult convergence_order(const CellModel& model, SchemeKind scheme, const OrderOptions& opts,
                              const IntegratorOptions& integrator = {});

// Smallest step in `steps` whose run is flagged unstable; empty when every run completes.
std::optional<double> first_unstable_step(const CellModel& model, SchemeKind scheme,
                                          const std::vector<double>& steps, double duration,
                                          const IntegratorOptions& integrator = {}, unsigned jobs = 1);

} // namespace hhcable
