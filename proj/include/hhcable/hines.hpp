#pragma once

#include <hhcable/errors.hpp>
#include <hhcable/morphology.hpp>

#include <Eigen/Dense>

#include <cmath>

namespace hhcable {

// Tree-sparse linear system. Row j couples to its parent p through
// `upper[j]` (entry (j, p)) and the parent row couples back to j through
// `lower[j]` (entry (p, j)). Entries at the root index are unused.
template <typename Scalar>
struct HinesSystem {
    using vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    vector diagonal;
    vector upper;
    vector lower;
    vector rhs;

    HinesSystem() = default;
    explicit HinesSystem(Eigen::Index n):
        diagonal(vector::Zero(n)), upper(vector::Zero(n)), lower(vector::Zero(n)), rhs(vector::Zero(n))
    {}

    Eigen::Index size() const { return diagonal.size(); }

    // Dense equivalent; for oracles and diagnostics.
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense(const MorphologyTree& tree) const {
        const auto n = size();
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
        for (Eigen::Index j=0; j<n; ++j) {
            a(j, j) = diagonal[j];
            if (int p = tree.parent(static_cast<int>(j)); p>=0) {
                a(j, p) = upper[j];
                a(p, j) = lower[j];
            }
        }
        return a;
    }
};

// Two-pass O(n) elimination: leaves to root in decreasing id order, then
// back substitution from the root. Consumes `sys` as scratch space.
// Throws singular_system when a pivot magnitude falls below 1e-300.
template <typename Scalar>
void hines_solve_in_place(HinesSystem<Scalar>& sys, const MorphologyTree& tree,
                          Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x)
{
    const auto n = sys.size();
    auto& d = sys.diagonal;
    auto& b = sys.rhs;
    for (Eigen::Index j=n-1; j>0; --j) {
        if (std::abs(d[j])<Scalar(1e-300)) throw singular_system(static_cast<int>(j));
        const int p = tree.parent(static_cast<int>(j));
        const Scalar f = sys.lower[j]/d[j];
        d[p] -= f*sys.upper[j];
        b[p] -= f*b[j];
    }
    if (std::abs(d[0])<Scalar(1e-300)) throw singular_system(0);
    x.resize(n);
    x[0] = b[0]/d[0];
    for (Eigen::Index j=1; j<n; ++j) {
        x[j] = (b[j] - sys.upper[j]*x[tree.parent(static_cast<int>(j))])/d[j];
    }
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> hines_solve(HinesSystem<Scalar> sys, const MorphologyTree& tree) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
    hines_solve_in_place(sys, tree, x);
    return x;
}

} // namespace hhcable
