#include <hhcable/analysis.hpp>
#include <hhcable/errors.hpp>

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hhcable {

namespace {

// Index of a local maximum ending a plateau-free rise: v[i] > v[i-1] and the
// next differing sample is lower. Returns the index following the plateau.
bool is_local_max(voltage_view v, std::size_t i) {
    const auto n = static_cast<std::size_t>(v.size());
    if (i==0 || i + 1>=n || !(v[i]>v[i-1])) return false;
    std::size_t j = i + 1;
    while (j<n && v[j]==v[i]) ++j;
    return j<n && v[j]<v[i];
}

bool is_local_min(voltage_view v, std::size_t i) {
    const auto n = static_cast<std::size_t>(v.size());
    if (i==0 || i + 1>=n || !(v[i]<v[i-1])) return false;
    std::size_t j = i + 1;
    while (j<n && v[j]==v[i]) ++j;
    return j<n && v[j]>v[i];
}

double rms_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0;
    double s = 0;
    for (double x: xs) s += x*x;
    return std::sqrt(s/xs.size());
}

} // namespace

std::vector<Peak> detect_spikes(voltage_view v, double dt, double t0) {
    std::vector<Peak> out;
    const auto n = static_cast<std::size_t>(v.size());
    for (std::size_t i=1; i + 1<n; ++i) {
        if (!(v[i]>spike_peak_threshold) || !is_local_max(v, i)) continue;
        std::size_t j = i;
        while (j>0 && v[j]>=spike_base_threshold) {
            if (v[j-1]>v[j] + monotone_tolerance) break;
            --j;
        }
        if (v[j]<spike_base_threshold) out.push_back({i, t0 + i*dt, v[i]});
    }
    return out;
}

Eigen::VectorXd second_undivided_differences(voltage_view v) {
    const auto n = v.size();
    if (n<3) return {};
    return v.segment(2, n - 2) - 2*v.segment(1, n - 2) + v.segment(0, n - 2);
}

std::vector<OscillationEvent> detect_oscillations(voltage_view v) {
    std::vector<OscillationEvent> out;
    Eigen::VectorXd d = second_undivided_differences(v);
    const auto m = static_cast<std::size_t>(d.size());
    auto sign = [&](std::size_t i) { return std::abs(d[i])<=concavity_tolerance? 0: (d[i]>0? 1: -1); };
    std::size_t i = 0;
    while (i<m) {
        if (sign(i)==0) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j<m && sign(j)!=0 && sign(j)==-sign(j-1)) ++j;
        if (j - i>=3) {
            OscillationEvent e;
            e.start = i + 1;
            e.length = j - i;
            for (std::size_t q=i; q<j; ++q) e.amplitudes.push_back(std::abs(d[q])/4);
            e.rms = rms_of(e.amplitudes);
            out.push_back(std::move(e));
        }
        i = j;
    }
    return out;
}

std::vector<Adp> detect_adp(voltage_view v, double dt, double t0, const std::vector<OscillationEvent>& oscillations) {
    std::vector<Adp> out;
    const auto n = static_cast<std::size_t>(v.size());
    Eigen::VectorXd w = v;
    std::vector<char> suspect(n, 0);
    for (auto& e: oscillations) {
        for (std::size_t i=e.start; i<e.end() && i + 1<n; ++i) {
            if (i==0) continue;
            w[i] = 0.25*(v[i-1] + 2*v[i] + v[i+1]);
            suspect[i] = 1;
        }
    }
    std::size_t i = 1;
    while (i + 1<n && !is_local_min(w, i)) ++i;
    for (++i; i + 1<n; ++i) {
        if (w[i]<adp_ceiling && is_local_max(w, i)) out.push_back({{i, t0 + i*dt, w[i]}, suspect[i]!=0});
    }
    return out;
}

std::vector<ApCycle> segment_cycles(voltage_view v, double dt, double t0, const std::vector<OscillationEvent>& oscillations,
                                    std::size_t min_cycles, SegmentOptions opts)
{
    auto spikes = detect_spikes(v, dt, t0);
    const auto n = static_cast<std::size_t>(v.size());
    auto argmin = [&](std::size_t a, std::size_t b) {
        std::size_t best = a;
        for (std::size_t i=a; i<=b; ++i) if (v[i]<v[best]) best = i;
        return best;
    };

    // Candidate troughs: before the first spike, between spikes, after the last.
    struct trough { std::size_t index; bool interior; };
    std::vector<trough> troughs;
    if (!spikes.empty()) {
        std::size_t a = argmin(0, spikes.front().index);
        troughs.push_back({a, a>0});
        for (std::size_t s=0; s + 1<spikes.size(); ++s) troughs.push_back({argmin(spikes[s].index, spikes[s+1].index), true});
        std::size_t z = argmin(spikes.back().index, n - 1);
        troughs.push_back({z, z + 1<n});
    }
    double deepest = 0;
    bool any = false;
    for (std::size_t q=1; q + 1<troughs.size(); ++q) {
        if (!any || v[troughs[q].index]<deepest) deepest = v[troughs[q].index];
        any = true;
    }
    if (!any && troughs.size()==2) {
        deepest = std::min(v[troughs[0].index], v[troughs[1].index]);
        any = true;
    }
    std::vector<std::size_t> bounds;
    for (auto& t: troughs) {
        if (t.interior && any && v[t.index]<=deepest + opts.trough_tolerance) bounds.push_back(t.index);
    }

    std::vector<ApCycle> cycles;
    for (std::size_t b=0; b + 1<bounds.size(); ++b) {
        ApCycle c;
        c.start = bounds[b];
        c.end = bounds[b+1];
        c.period = (c.end - c.start)*dt;
        c.v_min = v.segment(c.start, c.end - c.start + 1).minCoeff();
        c.v_max = v.segment(c.start, c.end - c.start + 1).maxCoeff();
        for (auto& s: spikes) {
            if (s.index>c.start && s.index<c.end) c.spikes.push_back(s);
        }
        if (!c.spikes.empty()) {
            std::size_t a = c.spikes.back().index;
            std::vector<OscillationEvent> local;
            for (auto e: oscillations) {
                if (e.end()<=a || e.start>c.end) continue;
                // Re-base onto the segment [a, c.end].
                std::size_t s0 = std::max(e.start, a);
                std::size_t s1 = std::min(e.end(), c.end + 1);
                OscillationEvent r;
                r.start = s0 - a;
                r.length = s1 - s0;
                local.push_back(r);
            }
            auto adps = detect_adp(v.segment(a, c.end - a + 1), dt, t0 + a*dt, local);
            for (auto& p: adps) {
                p.peak.index += a;
                c.adps.push_back(p);
            }
        }
        cycles.push_back(std::move(c));
    }
    if (cycles.size()<min_cycles) {
        throw insufficient_cycles("found " + std::to_string(cycles.size()) + " complete AP cycles, need " + std::to_string(min_cycles));
    }
    return cycles;
}

std::vector<ApCycle> segment_cycles(const SimTrace& tr, int compartment, std::size_t min_cycles, SegmentOptions opts) {
    Eigen::VectorXd v = tr.voltage(compartment);
    auto osc = detect_oscillations(v);
    return segment_cycles(v, tr.k, tr.times.empty()? 0: tr.times.front(), osc, min_cycles, opts);
}

CycleStats cycle_stats(const std::vector<ApCycle>& cycles, std::size_t skip) {
    if (cycles.size()<=skip) {
        throw insufficient_cycles("cycle statistics need more than " + std::to_string(skip) + " cycles, have " + std::to_string(cycles.size()));
    }
    const auto n = cycles.size() - skip;
    Eigen::ArrayXd mins(n), maxs(n), periods(n);
    for (std::size_t i=0; i<n; ++i) {
        mins[i] = cycles[skip + i].v_min;
        maxs[i] = cycles[skip + i].v_max;
        periods[i] = cycles[skip + i].period;
    }
    auto stddev = [](const Eigen::ArrayXd& a) { return std::sqrt((a - a.mean()).square().mean()); };
    CycleStats s;
    s.count = n;
    s.min_mean = mins.mean();
    s.min_std = stddev(mins);
    s.max_mean = maxs.mean();
    s.max_std = stddev(maxs);
    s.period_mean = periods.mean();
    s.period_std = stddev(periods);
    return s;
}

namespace {

// Peak time refined by the parabola through the peak sample and its neighbours.
double refined_peak_time(voltage_view v, std::size_t i, double dt, double t0) {
    double t = t0 + i*dt;
    if (i==0 || i + 1>=static_cast<std::size_t>(v.size())) return t;
    double a = v[i-1], b = v[i], c = v[i+1];
    double den = a - 2*b + c;
    if (den>=0) return t;
    return t + 0.5*(a - c)/den*dt;
}

} // namespace

AccuracyReport accuracy_rms(const SimTrace& test, const SimTrace& reference, int compartment, std::size_t cycle_index) {
    Eigen::VectorXd vt = test.voltage(compartment), vr = reference.voltage(compartment);
    auto ct = segment_cycles(test, compartment, cycle_index + 1);
    auto cr = segment_cycles(reference, compartment, cycle_index + 1);
    const auto& a = ct[cycle_index];
    const auto& b = cr[cycle_index];
    if (a.spikes.empty() || b.spikes.empty()) throw no_spikes("cycle " + std::to_string(cycle_index + 1) + " has no alignable spike");

    const double tt0 = test.times.empty()? 0: test.times.front();
    const double tr0 = reference.times.empty()? 0: reference.times.front();
    double pa = refined_peak_time(vt, a.spikes.front().index, test.k, tt0);
    double pb = refined_peak_time(vr, b.spikes.front().index, reference.k, tr0);

    AccuracyReport rep;
    rep.scheme = test.scheme;
    rep.k = test.k;
    rep.shift = pb - pa;

    // Test cycle on shifted times: t = tt0 + i*k + shift.
    const double ts = tt0 + a.start*test.k + rep.shift;
    const double te = tt0 + a.end*test.k + rep.shift;
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t i=b.start; i<=b.end; ++i) {
        double t = tr0 + i*reference.k;
        if (t<ts - 1e-15 || t>te + 1e-15) continue;
        double x = (t - rep.shift - tt0)/test.k;
        auto lo = static_cast<long>(std::floor(x));
        lo = std::clamp<long>(lo, static_cast<long>(a.start), static_cast<long>(a.end));
        long hi = std::min<long>(lo + 1, static_cast<long>(a.end));
        double w = std::clamp(x - lo, 0.0, 1.0);
        double val = hi==lo? vt[lo]: vt[lo] + w*(vt[hi] - vt[lo]);
        double diff = val - vr[i];
        sum += diff*diff;
        ++count;
    }
    rep.rms = count? std::sqrt(sum/count): 0;
    return rep;
}

std::vector<double> oscillation_rms_per_cycle(const std::vector<OscillationEvent>& events, const std::vector<ApCycle>& cycles) {
    std::vector<double> out;
    for (auto& c: cycles) {
        std::vector<double> amps;
        for (auto& e: events) {
            for (std::size_t q=0; q<e.length; ++q) {
                std::size_t i = e.start + q;
                if (i>=c.start && i<=c.end) amps.push_back(e.amplitudes[q]);
            }
        }
        out.push_back(rms_of(amps));
    }
    return out;
}

SpectralDensity welch_psd(voltage_view v, double native_rate) {
    constexpr double fs = 250;
    constexpr int width = 250, hop = 100;
    if (!(native_rate>=fs)) throw signal_too_short("native rate must be at least 250 Hz");

    std::vector<double> x;
    double ratio = native_rate/fs;
    auto block = static_cast<long>(std::llround(ratio));
    if (std::abs(ratio - block)<1e-9*ratio) {
        for (long i=0; (i + 1)*block<=v.size(); ++i) x.push_back(v.segment(i*block, block).mean());
    }
    else {
        const double duration = (v.size() - 1)/native_rate;
        for (long i=0; i/fs<=duration + 1e-12; ++i) {
            double pos = i/fs*native_rate;
            auto lo = std::min<long>(static_cast<long>(std::floor(pos)), v.size() - 1);
            long hi = std::min<long>(lo + 1, v.size() - 1);
            double w = pos - lo;
            x.push_back(v[lo] + w*(v[hi] - v[lo]));
        }
    }
    if (x.size()<static_cast<std::size_t>(width)) {
        throw signal_too_short("need at least 250 samples at 250 Hz, have " + std::to_string(x.size()));
    }
    Eigen::Map<Eigen::VectorXd> xs(x.data(), static_cast<Eigen::Index>(x.size()));
    xs.array() -= xs.mean();

    Eigen::VectorXd window(width);
    for (int i=0; i<width; ++i) window[i] = 0.54 - 0.46*std::cos(2*std::numbers::pi*i/(width - 1));
    const double wss = window.squaredNorm();

    Eigen::FFT<double> fft;
    const int bins = width/2 + 1;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(bins);
    int segments = 0;
    std::vector<double> seg(width);
    std::vector<std::complex<double>> spec;
    for (std::size_t s=0; s + width<=x.size(); s += hop) {
        for (int i=0; i<width; ++i) seg[i] = x[s + i]*window[i];
        fft.fwd(spec, seg);
        for (int b=0; b<bins; ++b) acc[b] += std::norm(spec[b]);
        ++segments;
    }
    SpectralDensity out;
    out.sample_rate = fs;
    out.frequency = Eigen::VectorXd::LinSpaced(bins, 0, fs/2);
    out.power = acc/(segments*fs*wss);
    out.power.segment(1, bins - 2) *= 2;    // bin 125 is Nyquist for an even width
    return out;
}

double empirical_order(const std::vector<std::pair<double, double>>& errors) {
    if (errors.size()<3) throw error("empirical order needs at least 3 points");
    const auto n = static_cast<Eigen::Index>(errors.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i=0; i<n; ++i) {
        auto [k, e] = errors[i];
        if (!(e>0) || !(k>0)) throw nonpositive_error("step sizes and errors must be positive");
        a(i, 0) = std::log(k);
        a(i, 1) = 1;
        b[i] = std::log(e);
    }
    Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
    return coef[0];
}

WaveformClass classify_cycle(const ApCycle& cycle, const std::vector<OscillationEvent>& oscillations) {
    WaveformClass w;
    w.n_spikes = static_cast<int>(cycle.spikes.size());
    w.n_adp = static_cast<int>(cycle.adps.size());
    for (auto& a: cycle.adps) {
        w.suspect = w.suspect || a.oscillation_suspect;
        for (auto& e: oscillations) w.suspect = w.suspect || e.covers(a.peak.index);
    }
    w.label = std::to_string(w.n_spikes) + "-" + std::to_string(w.n_adp);
    if (w.suspect) w.label += " (suspect)";
    return w;
}

} // namespace hhcable
