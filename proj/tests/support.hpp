#pragma once

#include <hhcable/channels.hpp>
#include <hhcable/model.hpp>
#include <hhcable/morphology.hpp>

#include <random>
#include <vector>

namespace testing_support {

using namespace hhcable;

// Unbranched chain of n equal compartments.
inline MorphologyTree chain(int n, double radius = 1e-6, double length = 50e-6, double e_leak = -0.07) {
    std::vector<Compartment> cs;
    for (int i=0; i<n; ++i) {
        Compartment c;
        c.id = i;
        if (i>0) c.parent = i - 1;
        c.radius = radius;
        c.length = length;
        c.e_leak = e_leak;
        cs.push_back(c);
    }
    return MorphologyTree::build(cs);
}

// Random tree with parents drawn below each id and randomized geometry.
inline MorphologyTree random_tree(int n, std::mt19937& rng, bool vary_membrane = true) {
    std::uniform_real_distribution<double> radius(0.5e-6, 4e-6), length(10e-6, 80e-6);
    std::uniform_real_distribution<double> cm(0.008, 0.012), rm(0.2, 2.0), rl(0.5, 2.0), el(-0.08, -0.05);
    std::vector<Compartment> cs;
    for (int i=0; i<n; ++i) {
        Compartment c;
        c.id = i;
        if (i>0) c.parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
        c.radius = radius(rng);
        c.length = length(rng);
        if (vary_membrane) {
            c.cm = cm(rng);
            c.rm = rm(rng);
            c.rl = rl(rng);
            c.e_leak = el(rng);
        }
        cs.push_back(c);
    }
    return MorphologyTree::build(cs);
}

inline RateFunction rate(RateFunction::form f, double r, double mid, double scale) {
    RateFunction x;
    x.shape = f;
    x.rate = r;
    x.midpoint = mid;
    x.scale = scale;
    return x;
}

// Squid-axon Na and K channels in SI units.
inline std::vector<ChannelSpec> squid_channels() {
    using F = RateFunction::form;
    ChannelSpec na;
    na.name = "na";
    na.gbar = 1200;
    na.reversal = 0.05;
    na.exponent = 3;
    na.activation = GateKinetics(RateKinetics{rate(F::linoid, 1e5, -0.04, 0.01), rate(F::exponential, 4000, -0.065, -0.018)});
    na.inactivation = GateKinetics(RateKinetics{rate(F::exponential, 70, -0.065, -0.02), rate(F::sigmoid, 1000, -0.035, -0.01)});
    ChannelSpec k;
    k.name = "k";
    k.gbar = 360;
    k.reversal = -0.077;
    k.exponent = 4;
    k.activation = GateKinetics(RateKinetics{rate(F::linoid, 1e4, -0.055, 0.01), rate(F::exponential, 125, -0.065, -0.08)});
    return {na, k};
}

} // namespace testing_support
