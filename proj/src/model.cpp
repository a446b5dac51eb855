#include <hhcable/errors.hpp>
#include <hhcable/model.hpp>

#include <cstdint>
#include <cstdio>
#include <sstream>

namespace hhcable {

CellModel CellModel::make(MorphologyTree tree,
                          std::vector<ChannelSpec> channels,
                          const std::map<std::string, std::map<int, double>>& gbar_overrides,
                          std::optional<CalciumParams> calcium)
{
    CellModel m;
    const auto n = static_cast<Eigen::Index>(tree.size());
    const auto nc = static_cast<Eigen::Index>(channels.size());

    m.couplings = axial_couplings(tree);
    m.gbar.resize(nc, n);
    for (Eigen::Index i=0; i<nc; ++i) {
        const auto& ch = channels[i];
        if (!(ch.gbar>=0)) throw error("channel '" + ch.name + "': gbar must be >= 0");
        if (ch.exponent<1) throw error("channel '" + ch.name + "': activation exponent must be >= 1");
        m.gbar.row(i).setConstant(ch.gbar);
        if (auto it = gbar_overrides.find(ch.name); it!=gbar_overrides.end()) {
            for (auto [id, g]: it->second) {
                if (id<0 || id>=n) throw error("channel '" + ch.name + "': override for missing compartment " + std::to_string(id));
                if (!(g>=0)) throw error("channel '" + ch.name + "': gbar override must be >= 0");
                m.gbar(i, id) = g;
            }
        }
    }
    for (auto& [name, _]: gbar_overrides) {
        bool found = false;
        for (auto& ch: channels) found = found || ch.name==name;
        if (!found) throw error("gbar override names unknown channel '" + name + "'");
    }
    bool needs_pool = false;
    for (auto& ch: channels) needs_pool = needs_pool || ch.carries_calcium || ch.calcium_dependent();
    if (needs_pool && !calcium) {
        throw error("calcium-carrying or calcium-dependent channels require calcium pool parameters");
    }

    m.alpha.resize(n);
    m.e_leak.resize(n);
    m.cm.resize(n);
    m.area.resize(n);
    m.coupling_diag.resize(n);
    m.to_parent = Eigen::VectorXd::Zero(n);
    m.from_parent = Eigen::VectorXd::Zero(n);
    m.parent = Eigen::VectorXi::Constant(n, -1);
    for (Eigen::Index j=0; j<n; ++j) {
        const auto& c = tree[j];
        m.alpha[j] = 1/(c.rm*c.cm);
        m.e_leak[j] = c.e_leak;
        m.cm[j] = c.cm;
        m.area[j] = c.area();
        m.coupling_diag[j] = m.couplings[j].total();
        m.to_parent[j] = m.couplings[j].to_parent;
        m.parent[j] = tree.parent(static_cast<int>(j));
        const auto& kids = tree.children(static_cast<int>(j));
        for (std::size_t q=0; q<kids.size(); ++q) {
            m.from_parent[kids[q]] = m.couplings[j].to_children[q];
        }
    }

    m.tree = std::move(tree);
    m.channels = std::move(channels);
    m.calcium = calcium;
    return m;
}

namespace {

struct fnv1a {
    std::uint64_t h = 1469598103934665603ull;
    void bytes(const std::string& s) {
        for (unsigned char c: s) {
            h ^= c;
            h *= 1099511628211ull;
        }
    }
    void num(double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g;", x);
        bytes(buf);
    }
};

void hash_rate(fnv1a& f, const RateFunction& r) {
    f.num(static_cast<int>(r.shape));
    f.num(r.rate);
    f.num(r.midpoint);
    f.num(r.scale);
}

void hash_kinetics(fnv1a& f, const GateKinetics& k) {
    f.num(static_cast<int>(k.input()));
    std::visit([&](auto& rep) {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, RateKinetics>) {
            f.bytes("rate");
            hash_rate(f, rep.alpha);
            hash_rate(f, rep.beta);
        }
        else if constexpr (std::is_same_v<T, TableKinetics>) {
            f.bytes("table");
            for (auto v: rep.x) f.num(v);
            for (auto v: rep.steady_state) f.num(v);
            for (auto v: rep.time_constant) f.num(v);
        }
        else {
            f.bytes("const");
            f.num(rep.steady_state);
            f.num(rep.time_constant);
        }
    }, k.kinetics());
}

} // namespace

std::string CellModel::fingerprint() const {
    fnv1a f;
    for (auto& c: tree.compartments()) {
        f.num(c.id);
        f.num(c.parent? *c.parent: -1);
        f.num(c.radius);
        f.num(c.length);
        f.num(c.cm);
        f.num(c.rm);
        f.num(c.rl);
        f.num(c.e_leak);
    }
    for (auto& ch: channels) {
        f.bytes(ch.name);
        f.num(ch.reversal);
        f.num(ch.exponent);
        f.num(ch.carries_calcium);
        hash_kinetics(f, ch.activation);
        if (ch.inactivation) hash_kinetics(f, *ch.inactivation);
    }
    for (Eigen::Index i=0; i<gbar.size(); ++i) f.num(gbar.data()[i]);
    if (calcium) {
        f.num(calcium->influx_scale);
        f.num(calcium->decay_time);
    }
    std::ostringstream o;
    o << std::hex;
    o.width(16);
    o.fill('0');
    o << f.h;
    return o.str();
}

} // namespace hhcable
