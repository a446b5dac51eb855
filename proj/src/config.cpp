#include <hhcable/config.hpp>
#include <hhcable/errors.hpp>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hhcable {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error(path, 0, "", "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Cursor over a YAML node that remembers where it came from.
struct node_ref {
    YAML::Node node;
    std::string source;
    std::string path;

    std::size_t line() const { return node.Mark().line>=0? static_cast<std::size_t>(node.Mark().line) + 1: 0; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw config_error(source, line(), path, msg);
    }

    bool has(const std::string& key) const { return node.IsMap() && node[key] && !node[key].IsNull(); }

    node_ref at(const std::string& key) const {
        if (!node.IsMap()) fail("expected a mapping");
        if (!node[key]) fail("missing field '" + key + "'");
        return {node[key], source, path.empty()? key: path + "." + key};
    }

    node_ref item(std::size_t i) const {
        return {node[i], source, path + "[" + std::to_string(i) + "]"};
    }

    std::size_t size() const {
        if (!node.IsSequence()) fail("expected a list");
        return node.size();
    }

    double number() const {
        if (!node.IsScalar()) fail("expected a number");
        try {
            return node.as<double>();
        }
        catch (const YAML::Exception&) {
            fail("expected a number, got '" + node.Scalar() + "'");
        }
    }

    int integer() const {
        if (!node.IsScalar()) fail("expected an integer");
        try {
            return node.as<int>();
        }
        catch (const YAML::Exception&) {
            fail("expected an integer, got '" + node.Scalar() + "'");
        }
    }

    std::string string() const {
        if (!node.IsScalar()) fail("expected a string");
        return node.Scalar();
    }

    bool boolean() const {
        if (!node.IsScalar()) fail("expected true or false");
        try {
            return node.as<bool>();
        }
        catch (const YAML::Exception&) {
            fail("expected true or false, got '" + node.Scalar() + "'");
        }
    }

    std::vector<double> numbers() const {
        std::vector<double> v;
        for (std::size_t i=0; i<size(); ++i) v.push_back(item(i).number());
        return v;
    }

    std::vector<int> integers() const {
        std::vector<int> v;
        for (std::size_t i=0; i<size(); ++i) v.push_back(item(i).integer());
        return v;
    }

    double number_or(const std::string& key, double def) const { return has(key)? at(key).number(): def; }
};

node_ref parse_root(const std::string& text, const std::string& source) {
    try {
        YAML::Node n = YAML::Load(text);
        if (!n.IsMap()) throw config_error(source, 1, "", "top level must be a mapping");
        return {n, source, ""};
    }
    catch (const YAML::ParserException& e) {
        throw config_error(source, static_cast<std::size_t>(e.mark.line) + 1, "", e.msg);
    }
}

void check_known(const node_ref& n, std::initializer_list<const char*> known) {
    for (auto it = n.node.begin(); it!=n.node.end(); ++it) {
        auto key = it->first.Scalar();
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key==k; })) {
            node_ref{it->first, n.source, n.path.empty()? key: n.path + "." + key}.fail("unknown field");
        }
    }
}

} // namespace

MorphologyTree parse_morphology(const std::string& text, const std::string& source) {
    auto root = parse_root(text, source);
    check_known(root, {"defaults", "compartments"});
    Compartment def;
    if (root.has("defaults")) {
        auto d = root.at("defaults");
        check_known(d, {"cm", "rm", "rl", "e_leak"});
        def.cm = d.number_or("cm", def.cm);
        def.rm = d.number_or("rm", def.rm);
        def.rl = d.number_or("rl", def.rl);
        def.e_leak = d.number_or("e_leak", def.e_leak);
    }
    auto list = root.at("compartments");
    if (list.size()==0) list.fail("at least one compartment required");
    std::vector<Compartment> comps;
    for (std::size_t i=0; i<list.size(); ++i) {
        auto c = list.item(i);
        check_known(c, {"id", "parent", "radius_m", "length_m", "cm", "rm", "rl", "e_leak"});
        Compartment x = def;
        x.id = c.at("id").integer();
        if (c.has("parent")) x.parent = c.at("parent").integer();
        x.radius = c.at("radius_m").number();
        x.length = c.at("length_m").number();
        x.cm = c.number_or("cm", def.cm);
        x.rm = c.number_or("rm", def.rm);
        x.rl = c.number_or("rl", def.rl);
        x.e_leak = c.number_or("e_leak", def.e_leak);
        comps.push_back(x);
    }
    try {
        return MorphologyTree::build(std::move(comps));
    }
    catch (const morphology_error& e) {
        // Point at the list entry of the offending compartment.
        for (std::size_t i=0; i<list.size(); ++i) {
            auto c = list.item(i);
            if (c.at("id").integer()==e.compartment_id) throw config_error(source, c.line(), c.path, e.what());
        }
        throw config_error(source, list.line(), "compartments", e.what());
    }
}

MorphologyTree load_morphology(const std::string& path) {
    return parse_morphology(read_file(path), path);
}

namespace {

RateFunction parse_rate(const node_ref& n) {
    check_known(n, {"form", "rate", "midpoint", "scale"});
    RateFunction r;
    auto form = n.at("form").string();
    if (form=="exponential") r.shape = RateFunction::form::exponential;
    else if (form=="sigmoid") r.shape = RateFunction::form::sigmoid;
    else if (form=="linoid") r.shape = RateFunction::form::linoid;
    else n.at("form").fail("expected exponential, sigmoid or linoid");
    r.rate = n.at("rate").number();
    r.midpoint = n.number_or("midpoint", 0);
    r.scale = n.number_or("scale", 1);
    if (r.scale==0) n.at("scale").fail("must be nonzero");
    return r;
}

GateKinetics parse_gate(const node_ref& n) {
    check_known(n, {"input", "alpha", "beta", "table", "constant"});
    gate_input in = gate_input::voltage;
    if (n.has("input")) {
        auto s = n.at("input").string();
        if (s=="calcium") in = gate_input::calcium;
        else if (s!="voltage") n.at("input").fail("expected voltage or calcium");
    }
    int forms = n.has("alpha") + n.has("table") + n.has("constant");
    if (forms!=1) n.fail("give exactly one of alpha/beta, table or constant");
    try {
        if (n.has("alpha")) return GateKinetics(RateKinetics{parse_rate(n.at("alpha")), parse_rate(n.at("beta"))}, in);
        if (n.has("table")) {
            auto t = n.at("table");
            check_known(t, {"x", "steady_state", "time_constant"});
            TableKinetics tk{t.at("x").numbers(), t.at("steady_state").numbers(), t.at("time_constant").numbers()};
            for (std::size_t i=0; i<tk.time_constant.size(); ++i) {
                if (!(tk.time_constant[i]>0)) t.at("time_constant").item(i).fail("time constant must be positive");
                if (tk.steady_state.size()>i && !(tk.steady_state[i]>=0 && tk.steady_state[i]<=1)) {
                    t.at("steady_state").item(i).fail("steady state must lie in [0,1]");
                }
            }
            return GateKinetics(tk, in);
        }
        auto c = n.at("constant");
        check_known(c, {"steady_state", "time_constant"});
        ConstantKinetics ck{c.at("steady_state").number(), c.at("time_constant").number()};
        if (!(ck.time_constant>0)) c.at("time_constant").fail("time constant must be positive");
        if (!(ck.steady_state>=0 && ck.steady_state<=1)) c.at("steady_state").fail("steady state must lie in [0,1]");
        return GateKinetics(ck, in);
    }
    catch (const config_error&) {
        throw;
    }
    catch (const error& e) {
        n.fail(e.what());
    }
}

} // namespace

ChannelConfig parse_channels(const std::string& text, const std::string& source) {
    auto root = parse_root(text, source);
    check_known(root, {"channels", "gbar_overrides", "calcium"});
    ChannelConfig cfg;
    if (root.has("channels")) {
        auto list = root.at("channels");
        for (std::size_t i=0; i<list.size(); ++i) {
            auto c = list.item(i);
            check_known(c, {"name", "gbar", "reversal", "exponent", "activation", "inactivation", "carries_calcium"});
            ChannelSpec s;
            s.name = c.at("name").string();
            s.gbar = c.at("gbar").number();
            if (!(s.gbar>=0)) c.at("gbar").fail("must be >= 0");
            s.reversal = c.at("reversal").number();
            s.exponent = c.has("exponent")? c.at("exponent").integer(): 1;
            if (s.exponent<1) c.at("exponent").fail("must be >= 1");
            s.activation = parse_gate(c.at("activation"));
            if (c.has("inactivation")) s.inactivation = parse_gate(c.at("inactivation"));
            if (c.has("carries_calcium")) s.carries_calcium = c.at("carries_calcium").boolean();
            for (auto& other: cfg.channels) {
                if (other.name==s.name) c.at("name").fail("duplicate channel name");
            }
            cfg.channels.push_back(std::move(s));
        }
    }
    if (root.has("gbar_overrides")) {
        auto ov = root.at("gbar_overrides");
        if (!ov.node.IsMap()) ov.fail("expected a mapping of channel name to {compartment: gbar}");
        for (auto it = ov.node.begin(); it!=ov.node.end(); ++it) {
            auto name = it->first.Scalar();
            node_ref per{it->second, source, "gbar_overrides." + name};
            if (std::none_of(cfg.channels.begin(), cfg.channels.end(), [&](auto& c) { return c.name==name; })) {
                per.fail("unknown channel");
            }
            if (!per.node.IsMap()) per.fail("expected a mapping of compartment id to gbar");
            for (auto jt = per.node.begin(); jt!=per.node.end(); ++jt) {
                node_ref key{jt->first, source, per.path};
                node_ref val{jt->second, source, per.path + "." + jt->first.Scalar()};
                double g = val.number();
                if (!(g>=0)) val.fail("must be >= 0");
                cfg.gbar_overrides[name][key.integer()] = g;
            }
        }
    }
    if (root.has("calcium")) {
        auto c = root.at("calcium");
        check_known(c, {"influx_scale", "decay_time"});
        CalciumParams p;
        p.influx_scale = c.at("influx_scale").number();
        p.decay_time = c.number_or("decay_time", p.decay_time);
        if (!(p.decay_time>0)) c.at("decay_time").fail("must be positive");
        cfg.calcium = p;
    }
    return cfg;
}

ChannelConfig load_channels(const std::string& path) {
    return parse_channels(read_file(path), path);
}

ExperimentConfig parse_experiment(const std::string& text, const std::string& source, const std::string& base_dir) {
    auto root = parse_root(text, source);
    check_known(root, {"morphology", "channels", "schemes", "step_sizes", "duration", "record", "output",
                       "integrator", "analysis", "order", "initial_state", "save_final_state"});
    ExperimentConfig e;
    e.source = source;
    auto resolve = [&](const std::string& p) {
        fs::path q(p);
        return (q.is_absolute()? q: fs::path(base_dir)/q).lexically_normal().string();
    };
    e.morphology_path = resolve(root.at("morphology").string());
    e.channels_path = resolve(root.at("channels").string());

    if (root.has("schemes")) {
        auto s = root.at("schemes");
        for (std::size_t i=0; i<s.size(); ++i) {
            try {
                e.schemes.push_back(parse_scheme(s.item(i).string()));
            }
            catch (const unsupported_scheme& ex) {
                s.item(i).fail(ex.what());
            }
        }
    }
    else {
        e.schemes.assign(all_schemes.begin(), all_schemes.end());
    }

    if (root.has("step_sizes")) {
        auto s = root.at("step_sizes");
        if (s.node.IsSequence()) {
            e.step_sizes = s.numbers();
        }
        else {
            check_known(s, {"from", "to", "step"});
            double from = s.at("from").number(), to = s.at("to").number(), step = s.at("step").number();
            if (!(step>0) || !(from>0) || to<from) s.fail("need 0 < from <= to and step > 0");
            long n = static_cast<long>(std::floor((to - from)/step + 1e-9));
            for (long i=0; i<=n; ++i) e.step_sizes.push_back(from + i*step);
        }
    }
    else {
        for (int i=1; i<=99; ++i) e.step_sizes.push_back(i*1e-6);
    }
    for (std::size_t i=0; i<e.step_sizes.size(); ++i) {
        if (!(e.step_sizes[i]>0)) root.at("step_sizes").fail("step sizes must be positive");
        if (i>0 && !(e.step_sizes[i]>e.step_sizes[i-1])) root.at("step_sizes").fail("step sizes must be strictly increasing");
    }

    if (root.has("duration")) e.duration = root.at("duration").number();
    if (!e.step_sizes.empty() && !(e.duration>e.step_sizes.back())) {
        (root.has("duration")? root.at("duration"): root).fail("duration must exceed the largest step size");
    }
    e.record = root.has("record")? root.at("record").integers(): std::vector<int>{0};
    if (root.has("output")) e.output_dir = resolve(root.at("output").string());

    if (root.has("integrator")) {
        auto n = root.at("integrator");
        check_known(n, {"rk_gates", "divergence_threshold"});
        if (n.has("rk_gates")) {
            auto g = n.at("rk_gates").string();
            if (g=="multistage") e.integrator.rk_gates = rk_gate_mode::multistage;
            else if (g=="single_stage") e.integrator.rk_gates = rk_gate_mode::single_stage;
            else n.at("rk_gates").fail("expected multistage or single_stage");
        }
        e.integrator.divergence_threshold = n.number_or("divergence_threshold", e.integrator.divergence_threshold);
    }
    if (root.has("analysis")) {
        auto n = root.at("analysis");
        check_known(n, {"mean_removal", "theta_path", "skip_cycles", "reference_step", "coefficient_stride"});
        if (n.has("mean_removal")) e.analysis.mean_removal = n.at("mean_removal").boolean();
        if (n.has("theta_path")) e.analysis.theta_path = n.at("theta_path").integers();
        if (n.has("skip_cycles")) e.analysis.skip_cycles = n.at("skip_cycles").integer();
        e.analysis.reference_step = n.number_or("reference_step", e.analysis.reference_step);
        if (n.has("coefficient_stride")) e.analysis.coefficient_stride = n.at("coefficient_stride").integer();
        if (e.analysis.coefficient_stride<1) n.at("coefficient_stride").fail("must be >= 1");
    }
    if (root.has("order")) {
        auto n = root.at("order");
        check_known(n, {"k0", "levels", "reference_divisor", "duration"});
        e.order.k0 = n.number_or("k0", e.order.k0);
        if (n.has("levels")) e.order.levels = n.at("levels").integer();
        if (n.has("reference_divisor")) e.order.reference_divisor = n.at("reference_divisor").integer();
        e.order.duration = n.number_or("duration", e.order.duration);
        if (e.order.levels<3) n.at("levels").fail("at least 3 ladder levels needed");
    }
    if (root.has("initial_state")) e.initial_state_path = resolve(root.at("initial_state").string());
    if (root.has("save_final_state")) e.final_state_path = resolve(root.at("save_final_state").string());
    return e;
}

ExperimentConfig load_experiment(const std::string& path) {
    auto base = fs::path(path).parent_path().string();
    return parse_experiment(read_file(path), path, base.empty()? ".": base);
}

CellModel ExperimentConfig::model() const {
    auto tree = load_morphology(morphology_path);
    auto ch = load_channels(channels_path);
    try {
        auto m = CellModel::make(std::move(tree), std::move(ch.channels), ch.gbar_overrides, ch.calcium);
        for (int id: record) {
            if (id<0 || static_cast<std::size_t>(id)>=m.size()) {
                throw config_error(source, 0, "record", "no compartment " + std::to_string(id));
            }
        }
        return m;
    }
    catch (const config_error&) {
        throw;
    }
    catch (const error& e) {
        throw config_error(channels_path, 0, "", e.what());
    }
}

void save_state(const std::string& path, const SimState& s) {
    nlohmann::json j;
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    auto arr = [](const Eigen::ArrayXXd& a) {
        std::vector<std::vector<double>> rows;
        for (Eigen::Index i=0; i<a.rows(); ++i) {
            Eigen::VectorXd r = a.row(i).transpose();
            rows.emplace_back(r.data(), r.data() + r.size());
        }
        return rows;
    };
    j["t"] = s.t;
    j["v"] = vec(s.v);
    j["m"] = arr(s.m);
    j["h"] = arr(s.h);
    j["calcium"] = vec(s.calcium);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write " + path);
    out << j.dump() << '\n';
}

SimState load_state(const std::string& path, const CellModel& model) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    }
    catch (const nlohmann::json::exception& e) {
        throw config_error(path, 0, "", e.what());
    }
    const auto n = static_cast<Eigen::Index>(model.size());
    const auto nc = static_cast<Eigen::Index>(model.channel_count());
    SimState s = initial_state(model);
    try {
        auto v = j.at("v").get<std::vector<double>>();
        auto ca = j.at("calcium").get<std::vector<double>>();
        auto m = j.at("m").get<std::vector<std::vector<double>>>();
        auto h = j.at("h").get<std::vector<std::vector<double>>>();
        if (static_cast<Eigen::Index>(v.size())!=n || static_cast<Eigen::Index>(ca.size())!=n) {
            throw config_error(path, 0, "v", "state size does not match the model");
        }
        if (static_cast<Eigen::Index>(m.size())!=nc || static_cast<Eigen::Index>(h.size())!=nc) {
            throw config_error(path, 0, "m", "channel count does not match the model");
        }
        s.v = Eigen::Map<Eigen::VectorXd>(v.data(), n);
        s.calcium = Eigen::Map<Eigen::VectorXd>(ca.data(), n);
        for (Eigen::Index i=0; i<nc; ++i) {
            if (static_cast<Eigen::Index>(m[i].size())!=n || static_cast<Eigen::Index>(h[i].size())!=n) {
                throw config_error(path, 0, "m", "state size does not match the model");
            }
            for (Eigen::Index c=0; c<n; ++c) {
                s.m(i, c) = m[i][c];
                s.h(i, c) = h[i][c];
            }
        }
    }
    catch (const nlohmann::json::exception& e) {
        throw config_error(path, 0, "", e.what());
    }
    // Warm starts restart the clock.
    s.t = 0;
    return s;
}

} // namespace hhcable
