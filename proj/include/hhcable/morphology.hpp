#pragma once

#include <optional>
#include <vector>

namespace hhcable {

// One cylindrical compartment. All quantities SI.
struct Compartment {
    int id = 0;
    std::optional<int> parent;
    double radius = 0;          // m
    double length = 0;          // m
    double cm = 0.01;           // F/m^2
    double rm = 1.0;            // Ohm m^2
    double rl = 1.0;            // Ohm m
    double e_leak = -0.07;      // V

    // Lateral membrane area 2*pi*a*h.
    double area() const;
    // Absolute capacitance C_m = cm * area.
    double capacitance() const;
};

// Validated compartment tree. Compartments are stored by id, ids are 0..n-1
// and every parent id is smaller than its child's id.
class MorphologyTree {
public:
    // Throws cycle_detected, multiple_roots, dangling_parent or invalid_compartment.
    static MorphologyTree build(std::vector<Compartment> descriptions);

    std::size_t size() const { return compartments_.size(); }
    const Compartment& operator[](std::size_t i) const { return compartments_[i]; }
    const std::vector<Compartment>& compartments() const { return compartments_; }

    const std::vector<int>& children(int id) const { return children_[id]; }
    // -1 for the root.
    int parent(int id) const { return parent_[id]; }
    int root() const { return 0; }
    std::size_t edge_count() const { return compartments_.size() - 1; }

    // Longest path (in compartments) between two leaves, passing through the
    // root when the root has at least two subtrees; ordered from one tip to the other.
    std::vector<int> longest_tip_to_tip_path() const;

private:
    std::vector<Compartment> compartments_;
    std::vector<int> parent_;
    std::vector<std::vector<int>> children_;
};

// Axial coupling rates of one compartment, in 1/s.
//   to_parent   = 1/(R_a C_m)  = a / (2 rL cm h^2)               (own cylinder)
//   to_child[q] = 1/(R'_a C_m) = a_q^2/a / (2 rL_q cm h_q h)      (child's cylinder)
// The resistance of an edge lives in the child's cylinder, so the current
// through an edge is the same seen from either end.
struct AxialCoupling {
    double to_parent = 0;
    std::vector<double> to_children;   // ordered as MorphologyTree::children(id)
    double capacitance = 0;            // F

    double children_sum() const;
    double total() const { return to_parent + children_sum(); }
};

std::vector<AxialCoupling> axial_couplings(const MorphologyTree& tree);

// Dense conductance of the edge (child -> parent), in S.
double edge_conductance(const Compartment& child);

} // namespace hhcable
