#pragma once

#include <hhcable/simulation.hpp>

#include <iosfwd>
#include <string>

namespace hhcable {

// CSV: metadata as leading "# key=value" lines, then "time_s,V_<id>,..."
// and one row per sample, numbers printed with 17 significant digits.
void write_trace_csv(std::ostream& out, const SimTrace& tr);
SimTrace read_trace_csv(std::istream& in, const std::string& source = "<stream>");

// JSON record with the same content; doubles round-trip exactly.
std::string trace_to_json(const SimTrace& tr);
SimTrace trace_from_json(const std::string& text, const std::string& source = "<string>");

void save_trace(const std::string& path, const SimTrace& tr);   // by extension: .csv or .json
SimTrace load_trace(const std::string& path);

// printf("%.17g")
std::string format_double(double x);

} // namespace hhcable
