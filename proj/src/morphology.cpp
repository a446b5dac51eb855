#include <hhcable/morphology.hpp>
#include <hhcable/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hhcable {

double Compartment::area() const {
    return 2*std::numbers::pi*radius*length;
}

double Compartment::capacitance() const {
    return cm*area();
}

MorphologyTree MorphologyTree::build(std::vector<Compartment> desc) {
    if (desc.empty()) {
        throw error("morphology has no compartments");
    }
    std::sort(desc.begin(), desc.end(), [](auto& a, auto& b) { return a.id<b.id; });

    const int n = static_cast<int>(desc.size());
    for (int i=0; i<n; ++i) {
        if (desc[i].id!=i) {
            throw invalid_compartment(desc[i].id, "ids must be unique and numbered 0.." + std::to_string(n-1));
        }
    }

    for (auto& c: desc) {
        if (c.parent && (*c.parent<0 || *c.parent>=n)) throw dangling_parent(c.id);
    }

    std::optional<int> root;
    for (auto& c: desc) {
        if (!c.parent) {
            if (root) throw multiple_roots(c.id);
            root = c.id;
        }
    }

    // Walk each compartment towards the root; revisiting a node on the
    // current walk means a cycle.
    std::vector<int> state(n, 0); // 0 unvisited, 1 on current walk, 2 reaches root
    for (int i=0; i<n; ++i) {
        std::vector<int> walk;
        int cur = i;
        while (cur>=0 && state[cur]==0) {
            state[cur] = 1;
            walk.push_back(cur);
            cur = desc[cur].parent? *desc[cur].parent: -1;
        }
        if (cur>=0 && state[cur]==1) throw cycle_detected(cur);
        for (int w: walk) state[w] = 2;
    }
    if (!root) throw cycle_detected(0);

    for (auto& c: desc) {
        if (c.parent && *c.parent>=c.id) {
            throw invalid_compartment(c.id, "parent id must be smaller than the compartment id");
        }
        if (!(c.radius>0) || !(c.length>0) || !(c.cm>0) || !(c.rm>0) || !(c.rl>0)) {
            throw invalid_compartment(c.id, "radius, length, cm, rm and rl must be positive");
        }
        if (!std::isfinite(c.e_leak)) {
            throw invalid_compartment(c.id, "leak reversal must be finite");
        }
    }

    MorphologyTree t;
    t.compartments_ = std::move(desc);
    t.parent_.assign(n, -1);
    t.children_.assign(n, {});
    for (auto& c: t.compartments_) {
        if (c.parent) {
            t.parent_[c.id] = *c.parent;
            t.children_[*c.parent].push_back(c.id);
        }
    }
    return t;
}

std::vector<int> MorphologyTree::longest_tip_to_tip_path() const {
    const int n = static_cast<int>(size());
    // deepest[i]: leaf id of the deepest descendant of i, depth[i]: its distance.
    std::vector<int> deepest(n), depth(n, 0);
    for (int i=n-1; i>=0; --i) {
        deepest[i] = i;
        for (int c: children_[i]) {
            if (depth[c]+1>depth[i]) {
                depth[i] = depth[c]+1;
                deepest[i] = deepest[c];
            }
        }
    }

    auto chain_up = [&](int leaf, int stop) {
        std::vector<int> p;
        for (int cur=leaf; cur!=stop; cur=parent_[cur]) p.push_back(cur);
        return p;
    };

    auto kids = children_[0];
    std::stable_sort(kids.begin(), kids.end(), [&](int a, int b) { return depth[a]>depth[b]; });

    std::vector<int> path;
    if (!kids.empty()) {
        path = chain_up(deepest[kids[0]], 0);   // leaf .. first child
    }
    path.push_back(0);
    if (kids.size()>1) {
        auto other = chain_up(deepest[kids[1]], 0);
        path.insert(path.end(), other.rbegin(), other.rend());
    }
    return path;
}

double AxialCoupling::children_sum() const {
    return std::accumulate(to_children.begin(), to_children.end(), 0.0);
}

double edge_conductance(const Compartment& child) {
    return std::numbers::pi*child.radius*child.radius/(child.rl*child.length);
}

std::vector<AxialCoupling> axial_couplings(const MorphologyTree& tree) {
    const auto n = tree.size();
    std::vector<AxialCoupling> out(n);
    for (std::size_t i=0; i<n; ++i) {
        const auto& c = tree[i];
        auto& ac = out[i];
        ac.capacitance = c.capacitance();
        if (tree.parent(c.id)>=0) {
            ac.to_parent = c.radius/(2*c.rl*c.cm*c.length*c.length);
        }
        for (int q: tree.children(c.id)) {
            const auto& child = tree[q];
            ac.to_children.push_back(
                child.radius*child.radius/c.radius/(2*child.rl*c.cm*child.length*c.length));
        }
    }
    return out;
}

} // namespace hhcable
