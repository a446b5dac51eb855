#include "support.hpp"

#include <hhcable/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hhcable;
using namespace testing_support;

namespace {

GateKinetics squid_n() { return squid_channels()[1].activation; }

} // namespace

TEST(Gates, SquidNGateAtRestMatchesHandEvaluation) {
    // Classic values at -65 mV: alpha_n = 0.1/(e - 1) per ms, beta_n = 0.125 per ms.
    const double a = 100/(std::exp(1.0) - 1), b = 125;
    auto n = squid_n();
    EXPECT_NEAR(gate_steady_init(n, -0.065), a/(a + b), 1e-12);
    EXPECT_NEAR(gate_steady_init(n, -0.065), 0.3177, 5e-5);
    EXPECT_NEAR(n.time_constant(-0.065), 1/(a + b), 1e-15);
}

TEST(Gates, ConstantKinetics) {
    GateKinetics c(ConstantKinetics{0.5, 2e-3});
    EXPECT_EQ(gate_steady_init(c, -0.07), 0.5);
    EXPECT_EQ(c.time_constant(0.3), 2e-3);
}

TEST(Gates, LinoidSingularityUsesSeriesLimit) {
    RateFunction f = rate(RateFunction::form::linoid, 1e4, -0.055, 0.01);
    EXPECT_NEAR(f(-0.055), 1e4*0.01, 1e-9);
    // Continuous across the guard band.
    EXPECT_NEAR(f(-0.055 + 2e-9), f(-0.055), 1e-3);
    EXPECT_NEAR(f(-0.055 - 2e-9), f(-0.055), 1e-3);
}

TEST(Gates, TableInterpolation) {
    GateKinetics t(TableKinetics{{-0.1, 0.0}, {0.0, 1.0}, {1e-3, 3e-3}});
    EXPECT_NEAR(t.steady_state(-0.05), 0.5, 1e-15);
    EXPECT_NEAR(t.time_constant(-0.025), 2.5e-3, 1e-15);
    EXPECT_EQ(t.steady_state(-1.0), 0.0);
    EXPECT_EQ(t.steady_state(1.0), 1.0);
    EXPECT_THROW(GateKinetics(TableKinetics{{0.0, -1.0}, {0, 1}, {1, 1}}), error);
    EXPECT_THROW(GateKinetics(TableKinetics{{0.0}, {0, 1}, {1}}), error);
}

TEST(Conductance, Examples) {
    ChannelSpec na = squid_channels()[0];
    na.gbar = 120;
    EXPECT_DOUBLE_EQ(channel_conductance(na, {1, 1}), 120.0);
    EXPECT_NEAR(channel_conductance(na, {0.5, 0.2}), 3.0, 1e-14);
    na.gbar = 0;
    EXPECT_EQ(channel_conductance(na, {0.7, 0.3}), 0.0);
}

TEST(Conductance, MonotoneInGates) {
    auto chans = squid_channels();
    for (auto& c: chans) {
        for (double m=0; m<1; m+=0.05) {
            for (double h=0; h<1; h+=0.05) {
                EXPECT_LE(channel_conductance(c, {m, h}), channel_conductance(c, {m + 0.05, h}));
                EXPECT_LE(channel_conductance(c, {m, h}), channel_conductance(c, {m, h + 0.05}));
            }
        }
    }
}

TEST(GateStep, FixedPoint) {
    auto n = squid_n();
    const double v = -0.03, y = n.steady_state(v);
    for (auto rule: {gate_rule::backward_euler, gate_rule::trapezoidal, gate_rule::exact_exponential}) {
        for (double k: {1e-6, 1e-4, 1e-1}) EXPECT_NEAR(gate_step(n, y, v, k, rule), y, 1e-15);
    }
    EXPECT_NEAR(gate_step(n, y, v, 1e-6, gate_rule::forward_euler), y, 1e-15);
}

TEST(GateStep, ExactExponentialClosedForm) {
    const double yinf = 0.8, tau = 3e-3, y0 = 0.1;
    for (double k: {1e-6, 1e-3, 1e-1}) {
        EXPECT_NEAR(gate_step(y0, yinf, tau, k, gate_rule::exact_exponential),
                    yinf + (y0 - yinf)*std::exp(-k/tau), 1e-15);
    }
}

TEST(GateStep, TrapezoidLocalErrorIsThirdOrder) {
    const double yinf = 0.8, tau = 1e-3, y0 = 0.1;
    auto err = [&](double k) {
        return std::abs(gate_step(y0, yinf, tau, k, gate_rule::trapezoidal) -
                        (yinf + (y0 - yinf)*std::exp(-k/tau)));
    };
    for (double k: {2e-5, 1e-5, 5e-6}) {
        EXPECT_NEAR(err(k)/err(k/2), 8.0, 0.25) << "k=" << k;
    }
    // Two half steps against one full step differ at third order as well.
    auto two_half = [&](double k) {
        double y = gate_step(y0, yinf, tau, k/2, gate_rule::trapezoidal);
        return gate_step(y, yinf, tau, k/2, gate_rule::trapezoidal);
    };
    double d1 = std::abs(two_half(1e-4) - gate_step(y0, yinf, tau, 1e-4, gate_rule::trapezoidal));
    double d2 = std::abs(two_half(5e-5) - gate_step(y0, yinf, tau, 5e-5, gate_rule::trapezoidal));
    EXPECT_NEAR(d1/d2, 8.0, 0.5);
}

TEST(GateStep, ClosedFormsStayInUnitInterval) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0, 1), lk(-8, 1);
    for (int i=0; i<20000; ++i) {
        double y = u(rng), yinf = u(rng), tau = std::pow(10.0, lk(rng) - 2), k = std::pow(10.0, lk(rng));
        for (auto rule: {gate_rule::backward_euler, gate_rule::trapezoidal, gate_rule::exact_exponential}) {
            double out = gate_step(y, yinf, tau, k, rule);
            ASSERT_GE(out, 0.0);
            ASSERT_LE(out, 1.0);
        }
    }
}

TEST(GateStep, ForwardEulerRejectsLargeSteps) {
    EXPECT_THROW(gate_step(0.2, 0.9, 1e-3, 2.1e-3, gate_rule::forward_euler), step_rejected);
    EXPECT_NO_THROW(gate_step(0.2, 0.9, 1e-3, 2.0e-3, gate_rule::forward_euler));
    EXPECT_NO_THROW(gate_step(0.2, 0.9, 1e-3, 2.1e-3, gate_rule::backward_euler));
}

TEST(Calcium, EmptyPoolStaysEmpty) {
    CalciumPool p{0, 5, 0.1};
    EXPECT_EQ(calcium_step(p, 0, 1e-3).concentration, 0.0);
}

TEST(Calcium, PureDecay) {
    CalciumPool p{2.0, 5, 0.1};
    EXPECT_NEAR(calcium_step(p, 0, 0.03).concentration, 2.0*std::exp(-0.3), 1e-15);
}

TEST(Calcium, SteadyStateUnderInwardCurrent) {
    CalciumPool p{0, 3e9, 0.05};
    const double i = -2e-12;
    for (int n=0; n<2000; ++n) p = calcium_step(p, i, 1e-3);
    EXPECT_NEAR(p.concentration, 3e9*2e-12*0.05, 1e-12);
    // An outward current cannot drive the pool negative.
    EXPECT_GE(calcium_step(CalciumPool{1e-6, 3e9, 0.05}, 1.0, 1.0).concentration, 0.0);
}
