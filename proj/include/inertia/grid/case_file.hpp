#pragma once

#include <iosfwd>
#include <string>

#include "inertia/grid/power_system.hpp"

namespace inertia::grid {

// Plain-text case format. Blank lines and '#' comments are ignored.
//
//   name    <identifier>
//   s_base  <MVA>
//   f_nominal <Hz>
//   bus
//   <id> <base_kv> <load_p> <load_q>             (loads in pu on s_base)
//   branch
//   <from_id> <to_id> <r> <x> <b_shunt>          (pu on s_base)
//   gen
//   <bus_id> <s_rated> <h> <d> <xd_t> <p_set>
//
// A section keyword switches the row parser until the next keyword. Bus ids
// are external (1-based) numbers and are internalized in file order.
PowerSystem read_case(std::istream& in);
PowerSystem read_case_file(const std::string& path);

void write_case(std::ostream& out, const PowerSystem& sys);

}  // namespace inertia::grid
