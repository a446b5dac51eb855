#include <hhcable/analysis.hpp>
#include <hhcable/errors.hpp>
#include <hhcable/stability.hpp>

#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/Polynomials>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hhcable {

SchemeCoefficients SchemeCoefficients::from_couplings(double K, double c1, double c2, double theta) {
    SchemeCoefficients c;
    c.K = K;
    c.c1 = c1;
    c.c2 = c2;
    c.theta = theta;
    const double s = std::sin(theta/2);
    c.L = (c1 + c2)*s*s;
    c.M = (c1 - c2)*std::sin(theta);
    c.B = K + c1 + c2;
    return c;
}

std::array<std::complex<double>, 3> taylor2_roots(double P) {
    Eigen::Vector4d coeffs(-P, 0, 5*P - 1, 1);     // increasing degree
    Eigen::PolynomialSolver<double, 3> solver(coeffs);
    auto r = solver.roots();
    return {r[0], r[1], r[2]};
}

namespace {

using cplx = std::complex<double>;

cplx scheme_value(SchemeKind scheme, const SchemeCoefficients& c, double k, cplx mu, cplx neighbour) {
    const cplx km = k*mu;
    const double s = c.B*k;
    switch (scheme) {
    case SchemeKind::FTCS:
        return 1.0 + km;
    case SchemeKind::BTCS:
        return 1.0/(1.0 - km);
    case SchemeKind::HCN:
        return (1.0 + 0.5*km)/(1.0 - 0.5*km);
    case SchemeKind::RK21:
        return 1.0 + km*(1 - s/2);
    case SchemeKind::RK41:
        return 1.0 + km*(1 - s/2 + s*s/6 - s*s*s/24);
    case SchemeKind::ExponentialEuler: {
        const double e = std::exp(-s);
        return e + neighbour/c.B*(1 - e);
    }
    case SchemeKind::Taylor2: {
        // g^3 - (1 + 5 k mu/4) g^2 + k mu/4 = 0
        Eigen::Matrix<cplx, 4, 1> coeffs(0.25*km, 0, -(1.0 + 1.25*km), 1);
        Eigen::Matrix<cplx, 3, 3> companion = Eigen::Matrix<cplx, 3, 3>::Zero();
        companion(1, 0) = 1;
        companion(2, 1) = 1;
        for (int i=0; i<3; ++i) companion(i, 2) = -coeffs[i];
        Eigen::ComplexEigenSolver<Eigen::Matrix<cplx, 3, 3>> es(companion, false);
        cplx best = 0;
        for (int i=0; i<3; ++i) {
            if (std::abs(es.eigenvalues()[i])>std::abs(best)) best = es.eigenvalues()[i];
        }
        return best;
    }
    }
    throw unsupported_scheme("no growth factor for this scheme");
}

} // namespace

GrowthFactor growth_factor(SchemeKind scheme, const SchemeCoefficients& c, double k) {
    const cplx mu(-(c.K + 2*c.L), -c.M);
    const cplx neighbour = c.c1*std::polar(1.0, -c.theta) + c.c2*std::polar(1.0, c.theta);
    GrowthFactor g;
    g.value = scheme_value(scheme, c, k, mu, neighbour);
    const cplx v = scheme_value(scheme, c, k, cplx(mu.real(), 0), cplx(neighbour.real(), 0));
    g.cosine_basis_value = v.real();
    return g;
}

StepLimit step_limit(SchemeKind scheme, const SchemeCoefficients& c) {
    StepLimit out;
    const double kl = c.K + 2*c.L;
    switch (scheme) {
    case SchemeKind::FTCS:
    case SchemeKind::Taylor2:
        if (kl>0) out.limit = 2/kl;
        break;
    case SchemeKind::RK21:
    case SchemeKind::RK41:
        out.limit = butcher_limit(scheme, c.B);
        break;
    case SchemeKind::HCN:
        if (kl>0) out.oscillation_onset = 2/kl;
        break;
    case SchemeKind::BTCS:
    case SchemeKind::ExponentialEuler:
        break;
    }
    return out;
}

std::optional<double> butcher_limit(SchemeKind scheme, double B) {
    double bound;
    if (scheme==SchemeKind::RK21) bound = 2;
    else if (scheme==SchemeKind::RK41) bound = rk41_real_axis_bound;
    else throw unsupported_scheme("Butcher limit defined for RK21 and RK41 only");
    if (!(B>0)) return std::nullopt;
    return bound/B;
}

PlaneWaveSpectrum spectral_centroid(const Eigen::Ref<const Eigen::VectorXd>& path_voltage, bool mean_removal) {
    const auto n = path_voltage.size();
    if (n==0) throw error("spectral centroid needs a non-empty path");
    Eigen::Index width = 32;
    while (width<n) width *= 2;

    std::vector<double> x(width, 0.0);
    const double mean = mean_removal? path_voltage.mean(): 0;
    for (Eigen::Index i=0; i<n; ++i) x[i] = path_voltage[i] - mean;

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, x);

    const auto bins = width/2 + 1;
    PlaneWaveSpectrum out;
    out.omega.resize(bins);
    out.magnitude.resize(bins);
    for (Eigen::Index i=0; i<bins; ++i) {
        out.omega[i] = i*std::numbers::pi/(width/2);
        out.magnitude[i] = std::abs(spec[i]);
    }
    const double total = out.magnitude.sum();
    if (!(total>0)) {
        out.all_zero = true;
        out.centroid = 0;
        return out;
    }
    out.centroid = out.omega.dot(out.magnitude)/total;
    return out;
}

std::function<void(const SimState&)> coefficient_recorder(const CellModel& model, std::vector<int> path,
                                                          std::vector<CoefficientSample>& out)
{
    return [&model, path = std::move(path), &out](const SimState& s) {
        CoefficientSample c;
        c.t = s.t;
        Eigen::VectorXd J;
        membrane_terms(model, s, c.K, J);
        c.path_voltage.resize(static_cast<Eigen::Index>(path.size()));
        for (std::size_t i=0; i<path.size(); ++i) c.path_voltage[i] = s.v[path[i]];
        out.push_back(std::move(c));
    };
}

CycleLimit min_over_cycle_limit(const CellModel& model, const std::vector<CoefficientSample>& samples,
                                SchemeKind scheme, double t0, double t1, bool mean_removal)
{
    CycleLimit best;
    bool any = false;
    for (auto& smp: samples) {
        if (smp.t<t0 || smp.t>t1) continue;
        const double theta = spectral_centroid(smp.path_voltage, mean_removal).centroid;
        for (Eigen::Index j=0; j<smp.K.size(); ++j) {
            const double c1 = model.to_parent[j];
            const double c2 = model.coupling_diag[j] - c1;
            auto c = SchemeCoefficients::from_couplings(smp.K[j], c1, c2, theta);
            auto lim = step_limit(scheme, c);
            // Unbounded schemes still report the oscillation onset minimum.
            auto key = lim.limit? lim.limit: lim.oscillation_onset;
            auto cur = best.limit? best.limit: best.oscillation_onset;
            if (!any || (key && (!cur || *key<*cur))) {
                best.limit = lim.limit;
                best.oscillation_onset = lim.oscillation_onset;
                best.t = smp.t;
                best.compartment = static_cast<int>(j);
                best.theta = theta;
                best.K = c.K;
                best.L = c.L;
                best.B = c.B;
                any = true;
            }
        }
    }
    if (!any) throw insufficient_cycles("no coefficient samples inside the cycle window");
    return best;
}

CycleLimit min_over_cycle_limit(const CellModel& model, const std::vector<CoefficientSample>& samples,
                                SchemeKind scheme, const SimTrace& reference, int reference_compartment,
                                bool mean_removal)
{
    Eigen::VectorXd v = reference.voltage(reference_compartment);
    double t0 = reference.times.empty()? 0: reference.times.front();
    double t1 = reference.times.empty()? 0: reference.times.back();
    if (!detect_spikes(v, reference.k, t0).empty()) {
        auto cycles = segment_cycles(reference, reference_compartment, 1);
        t1 = reference.times[cycles.back().end];
        t0 = reference.times[cycles.front().start];
    }
    return min_over_cycle_limit(model, samples, scheme, t0, t1, mean_removal);
}

} // namespace hhcable
