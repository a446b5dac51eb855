#include <hhcable/errors.hpp>

#include <sstream>

namespace hhcable {

cycle_detected::cycle_detected(int id):
    morphology_error("cycle detected at compartment " + std::to_string(id), id)
{}

multiple_roots::multiple_roots(int id):
    morphology_error("compartment " + std::to_string(id) + " is a second root", id)
{}

dangling_parent::dangling_parent(int id):
    morphology_error("compartment " + std::to_string(id) + " references a missing parent", id)
{}

invalid_compartment::invalid_compartment(int id, const std::string& why):
    morphology_error("compartment " + std::to_string(id) + ": " + why, id)
{}

divergence_detected::divergence_detected(double t, int c):
    error("voltage diverged in compartment " + std::to_string(c) + " at t=" + std::to_string(t) + " s"),
    time(t), compartment(c)
{}

singular_system::singular_system(int r):
    error("singular tree system: vanishing pivot at row " + std::to_string(r)), row(r)
{}

namespace {
std::string format_config_error(const std::string& file, std::size_t line, const std::string& field, const std::string& msg) {
    std::ostringstream o;
    o << file;
    if (line) o << ':' << line;
    if (!field.empty()) o << ": field '" << field << "'";
    o << ": " << msg;
    return o.str();
}
}

config_error::config_error(const std::string& f, std::size_t l, const std::string& fld, const std::string& msg):
    error(format_config_error(f, l, fld, msg)), file(f), line(l), field(fld)
{}

} // namespace hhcable
