#include <hhcable/errors.hpp>
#include <hhcable/trace_io.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hhcable {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_trace_csv(std::ostream& out, const SimTrace& tr) {
    out << "# scheme=" << tr.scheme << '\n';
    out << "# model_hash=" << tr.model_hash << '\n';
    out << "# k=" << format_double(tr.k) << '\n';
    out << "# duration=" << format_double(tr.duration) << '\n';
    out << "# stable=" << (tr.stable? "true": "false") << '\n';
    if (tr.failure_time) out << "# failure_time=" << format_double(*tr.failure_time) << '\n';
    if (!tr.failure_message.empty()) out << "# failure_message=" << tr.failure_message << '\n';
    out << "time_s";
    for (int id: tr.record) out << ",V_" << id;
    out << '\n';
    for (std::size_t r=0; r<tr.times.size(); ++r) {
        out << format_double(tr.times[r]);
        for (Eigen::Index c=0; c<tr.samples.cols(); ++c) out << ',' << format_double(tr.samples(r, c));
        out << '\n';
    }
}

namespace {

double parse_number(const std::string& s, const std::string& source, std::size_t line, const std::string& field) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end!='\0') throw config_error(source, line, field, "not a number: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!s.empty() && s.back()==sep) parts.emplace_back();
    return parts;
}

} // namespace

SimTrace read_trace_csv(std::istream& in, const std::string& source) {
    SimTrace tr;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back()=='\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# ", 0)==0) {
            auto eq = line.find('=');
            if (eq==std::string::npos) continue;
            std::string key = line.substr(2, eq - 2), val = line.substr(eq + 1);
            if (key=="scheme") tr.scheme = val;
            else if (key=="model_hash") tr.model_hash = val;
            else if (key=="k") tr.k = parse_number(val, source, lineno, key);
            else if (key=="duration") tr.duration = parse_number(val, source, lineno, key);
            else if (key=="stable") tr.stable = val=="true";
            else if (key=="failure_time") tr.failure_time = parse_number(val, source, lineno, key);
            else if (key=="failure_message") tr.failure_message = val;
            continue;
        }
        auto cells = split(line, ',');
        if (!header) {
            if (cells.empty() || cells[0]!="time_s") throw config_error(source, lineno, "header", "expected 'time_s' column");
            for (std::size_t c=1; c<cells.size(); ++c) {
                if (cells[c].rfind("V_", 0)!=0) throw config_error(source, lineno, "header", "expected V_<id> column, got '" + cells[c] + "'");
                tr.record.push_back(static_cast<int>(parse_number(cells[c].substr(2), source, lineno, "header")));
            }
            header = true;
            continue;
        }
        if (cells.size()!=tr.record.size() + 1) throw config_error(source, lineno, "row", "wrong number of columns");
        std::vector<double> row;
        for (auto& c: cells) row.push_back(parse_number(c, source, lineno, "row"));
        rows.push_back(std::move(row));
    }
    if (!header) throw config_error(source, lineno, "header", "missing column header");
    tr.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(tr.record.size()));
    for (std::size_t r=0; r<rows.size(); ++r) {
        tr.times.push_back(rows[r][0]);
        for (std::size_t c=0; c<tr.record.size(); ++c) tr.samples(r, c) = rows[r][c + 1];
    }
    return tr;
}

std::string trace_to_json(const SimTrace& tr) {
    nlohmann::json j;
    j["scheme"] = tr.scheme;
    j["model_hash"] = tr.model_hash;
    j["k"] = tr.k;
    j["duration"] = tr.duration;
    j["stable"] = tr.stable;
    j["failure_time"] = tr.failure_time? nlohmann::json(*tr.failure_time): nlohmann::json();
    j["failure_message"] = tr.failure_message;
    j["record"] = tr.record;
    j["times"] = tr.times;
    auto cols = nlohmann::json::array();
    for (Eigen::Index c=0; c<tr.samples.cols(); ++c) {
        std::vector<double> col(tr.samples.rows());
        for (Eigen::Index r=0; r<tr.samples.rows(); ++r) col[r] = tr.samples(r, c);
        cols.push_back(std::move(col));
    }
    j["voltages"] = std::move(cols);
    return j.dump();
}

SimTrace trace_from_json(const std::string& text, const std::string& source) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e) {
        throw config_error(source, 0, "", e.what());
    }
    SimTrace tr;
    try {
        tr.scheme = j.at("scheme").get<std::string>();
        tr.model_hash = j.at("model_hash").get<std::string>();
        tr.k = j.at("k").get<double>();
        tr.duration = j.at("duration").get<double>();
        tr.stable = j.at("stable").get<bool>();
        if (!j.at("failure_time").is_null()) tr.failure_time = j.at("failure_time").get<double>();
        tr.failure_message = j.at("failure_message").get<std::string>();
        tr.record = j.at("record").get<std::vector<int>>();
        tr.times = j.at("times").get<std::vector<double>>();
        auto& cols = j.at("voltages");
        if (cols.size()!=tr.record.size()) throw config_error(source, 0, "voltages", "one column per recorded compartment expected");
        tr.samples.resize(static_cast<Eigen::Index>(tr.times.size()), static_cast<Eigen::Index>(tr.record.size()));
        for (std::size_t c=0; c<cols.size(); ++c) {
            auto col = cols[c].get<std::vector<double>>();
            if (col.size()!=tr.times.size()) throw config_error(source, 0, "voltages", "column length differs from times");
            for (std::size_t r=0; r<col.size(); ++r) tr.samples(r, c) = col[r];
        }
    }
    catch (const nlohmann::json::exception& e) {
        throw config_error(source, 0, "", e.what());
    }
    return tr;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size()>=suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix)==0;
}

} // namespace

void save_trace(const std::string& path, const SimTrace& tr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write " + path);
    if (ends_with(path, ".json")) out << trace_to_json(tr) << '\n';
    else write_trace_csv(out, tr);
}

SimTrace load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error(path, 0, "", "cannot open file");
    if (ends_with(path, ".json")) {
        std::stringstream ss;
        ss << in.rdbuf();
        return trace_from_json(ss.str(), path);
    }
    return read_trace_csv(in, path);
}

} // namespace hhcable
