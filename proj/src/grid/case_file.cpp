#include "inertia/grid/case_file.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

#include "inertia/common/error.hpp"

namespace inertia::grid {
namespace {

enum class Section { kNone, kBus, kBranch, kGen };

std::vector<double> parse_numbers(const std::string& line, std::size_t expected, int lineno) {
  std::istringstream ss(line);
  std::vector<double> v;
  double x = 0.0;
  while (ss >> x) v.push_back(x);
  if (!ss.eof() || v.size() != expected)
    throw DataError("case line " + std::to_string(lineno) + ": expected " +
                    std::to_string(expected) + " numeric columns");
  return v;
}

}  // namespace

PowerSystem read_case(std::istream& in) {
  PowerSystem sys;
  std::map<int, int> index;
  struct RawBranch { int from, to; double r, x, b; };
  struct RawGen { int bus; double s, h, d, xd, p; };
  std::vector<RawBranch> branches;
  std::vector<RawGen> gens;

  Section section = Section::kNone;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string head;
    if (!(ss >> head)) continue;

    if (head == "bus") { section = Section::kBus; continue; }
    if (head == "branch") { section = Section::kBranch; continue; }
    if (head == "gen") { section = Section::kGen; continue; }
    if (head == "name") { ss >> sys.name; section = Section::kNone; continue; }
    if (head == "s_base" || head == "f_nominal") {
      double v = 0.0;
      if (!(ss >> v)) throw DataError("case line " + std::to_string(lineno) + ": missing value");
      (head == "s_base" ? sys.s_base : sys.f_nominal) = v;
      section = Section::kNone;
      continue;
    }

    switch (section) {
      case Section::kBus: {
        auto v = parse_numbers(line, 4, lineno);
        const int id = static_cast<int>(v[0]);
        if (!index.emplace(id, static_cast<int>(sys.buses.size())).second)
          throw DataError("case line " + std::to_string(lineno) + ": duplicate bus id");
        sys.buses.push_back({id, v[1], v[2], v[3], false});
        break;
      }
      case Section::kBranch: {
        auto v = parse_numbers(line, 5, lineno);
        branches.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), v[2], v[3], v[4]});
        break;
      }
      case Section::kGen: {
        auto v = parse_numbers(line, 6, lineno);
        gens.push_back({static_cast<int>(v[0]), v[1], v[2], v[3], v[4], v[5]});
        break;
      }
      case Section::kNone:
        throw DataError("case line " + std::to_string(lineno) + ": unexpected '" + head + "'");
    }
  }

  auto lookup = [&](int id) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("case references unknown bus " + std::to_string(id));
    return it->second;
  };
  for (const auto& b : branches) sys.branches.push_back({lookup(b.from), lookup(b.to), b.r, b.x, b.b});
  for (const auto& g : gens) sys.generators.push_back({lookup(g.bus), g.s, g.h, g.d, g.xd, g.p});

  try {
    validate(sys);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("invalid case: ") + e.what());
  }
  return sys;
}

PowerSystem read_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open case file " + path);
  return read_case(in);
}

void write_case(std::ostream& out, const PowerSystem& sys) {
  out << std::setprecision(17);
  out << "name " << (sys.name.empty() ? "unnamed" : sys.name) << "\n";
  out << "s_base " << sys.s_base << "\n";
  out << "f_nominal " << sys.f_nominal << "\n";
  out << "bus\n# id base_kv load_p load_q\n";
  for (const auto& b : sys.buses)
    out << b.id << ' ' << b.base_kv << ' ' << b.load_p << ' ' << b.load_q << "\n";
  out << "branch\n# from to r x b_shunt\n";
  for (const auto& br : sys.branches)
    out << sys.buses[br.from_bus].id << ' ' << sys.buses[br.to_bus].id << ' ' << br.r << ' '
        << br.x << ' ' << br.b_shunt << "\n";
  out << "gen\n# bus s_rated h d xd_t p_set\n";
  for (const auto& g : sys.generators)
    out << sys.buses[g.bus].id << ' ' << g.s_rated << ' ' << g.h << ' ' << g.d << ' ' << g.xd_t
        << ' ' << g.p_set << "\n";
}

}  // namespace inertia::grid
