#include "inertia/grid/power_system.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <random>
#include <set>

#include "inertia/common/error.hpp"

namespace inertia::grid {

double kinetic_energy(double j, double omega) {
  require(j > 0.0 && omega > 0.0, "kinetic_energy: j and omega must be positive");
  return 0.5 * j * omega * omega;
}

double inertia_constant(double j, double omega, double s_rated) {
  require(j > 0.0 && omega > 0.0 && s_rated > 0.0,
          "inertia_constant: j, omega and s_rated must be positive");
  return j * omega * omega / (2.0 * s_rated);
}

SystemInertia system_inertia(const PowerSystem& sys, std::span<const std::size_t> active) {
  require(!active.empty(), "system_inertia: active generator set is empty");
  require(sys.s_base > 0.0, "system_inertia: s_base must be positive");
  SystemInertia out;
  for (auto i : active) {
    require(i < sys.generators.size(), "system_inertia: generator index out of range");
    out.energy += sys.generators[i].h * sys.generators[i].s_rated;
  }
  out.h_sys = out.energy / sys.s_base;
  return out;
}

SystemInertia system_inertia(const PowerSystem& sys) {
  std::vector<std::size_t> all(sys.generators.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return system_inertia(sys, all);
}

Eigen::MatrixXcd admittance_matrix(const PowerSystem& sys) {
  const auto n = static_cast<Eigen::Index>(sys.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : sys.branches) {
    require(br.r != 0.0 || br.x != 0.0, "admittance_matrix: zero-impedance branch");
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> half_charging(0.0, 0.5 * br.b_shunt);
    y(br.from_bus, br.from_bus) += ys + half_charging;
    y(br.to_bus, br.to_bus) += ys + half_charging;
    y(br.from_bus, br.to_bus) -= ys;
    y(br.to_bus, br.from_bus) -= ys;
  }
  return y;
}

PowerSystem scale_inertia(const PowerSystem& sys, double h_target) {
  require(h_target > 0.0, "scale_inertia: target must be positive");
  const double current = system_inertia(sys).h_sys;
  PowerSystem out = sys;
  const double factor = h_target / current;
  for (auto& g : out.generators) g.h *= factor;
  return out;
}

PowerSystem perturb_inertia(const PowerSystem& sys, double spread, unsigned long long seed) {
  require(spread >= 0.0 && spread < 1.0, "perturb_inertia: spread must be in [0, 1)");
  PowerSystem out = sys;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.0 - spread, 1.0 + spread);
  for (auto& g : out.generators) g.h *= u(rng);
  return out;
}

Eigen::MatrixXd bus_adjacency(const PowerSystem& sys) {
  const auto n = static_cast<Eigen::Index>(sys.buses.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& br : sys.branches) {
    a(br.from_bus, br.to_bus) = 1.0;
    a(br.to_bus, br.from_bus) = 1.0;
  }
  return a;
}

bool is_connected(const PowerSystem& sys) {
  const std::size_t n = sys.buses.size();
  if (n == 0) return false;
  std::vector<std::vector<int>> nbr(n);
  for (const auto& br : sys.branches) {
    nbr[br.from_bus].push_back(br.to_bus);
    nbr[br.to_bus].push_back(br.from_bus);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : nbr[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n;
}

std::vector<int> generator_buses(const PowerSystem& sys) {
  std::set<int> s;
  for (const auto& g : sys.generators) s.insert(g.bus);
  return {s.begin(), s.end()};
}

int highest_load_bus(const PowerSystem& sys) {
  require(!sys.buses.empty(), "highest_load_bus: empty system");
  int best = 0;
  for (std::size_t i = 1; i < sys.buses.size(); ++i)
    if (sys.buses[i].load_p > sys.buses[best].load_p) best = static_cast<int>(i);
  return best;
}

int bus_index(const PowerSystem& sys, int external_id) {
  for (std::size_t i = 0; i < sys.buses.size(); ++i)
    if (sys.buses[i].id == external_id) return static_cast<int>(i);
  throw InvalidArgument("unknown bus id " + std::to_string(external_id));
}

void validate(PowerSystem& sys) {
  const auto n = static_cast<int>(sys.buses.size());
  require(n > 0, "power system has no buses");
  require(sys.s_base > 0.0, "s_base must be positive");
  require(sys.f_nominal > 0.0, "f_nominal must be positive");
  std::set<int> ids;
  for (const auto& b : sys.buses) {
    require(ids.insert(b.id).second, "duplicate bus id " + std::to_string(b.id));
    require(b.base_kv > 0.0, "bus " + std::to_string(b.id) + ": base_kv must be positive");
    require(std::isfinite(b.load_p) && std::isfinite(b.load_q),
            "bus " + std::to_string(b.id) + ": non-finite load");
  }
  for (const auto& br : sys.branches) {
    require(br.from_bus >= 0 && br.from_bus < n && br.to_bus >= 0 && br.to_bus < n,
            "branch references an unknown bus");
    require(br.from_bus != br.to_bus, "branch is a self-loop");
    require(br.x != 0.0, "branch reactance must be nonzero");
  }
  for (auto& b : sys.buses) b.has_generator = false;
  for (const auto& g : sys.generators) {
    require(g.bus >= 0 && g.bus < n, "generator references an unknown bus");
    require(g.s_rated > 0.0 && g.h > 0.0 && g.d >= 0.0 && g.xd_t > 0.0,
            "generator at bus " + std::to_string(sys.buses[g.bus].id) + " has invalid parameters");
    sys.buses[g.bus].has_generator = true;
  }
  require(is_connected(sys), "power system graph is not connected");
}

}  // namespace inertia::grid
