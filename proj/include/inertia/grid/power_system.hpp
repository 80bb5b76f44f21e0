#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace inertia::grid {

/// A network node. `id` is the external (published, 1-based) bus number; the
/// bus's position in PowerSystem::buses is its internal 0-based index.
struct Bus {
  int id = 0;
  double base_kv = 0.0;
  double load_p = 0.0;  // pu on PowerSystem::s_base
  double load_q = 0.0;  // pu on PowerSystem::s_base
  bool has_generator = false;
};

/// Undirected pi-model line. Bus references are internal indices.
struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double b_shunt = 0.0;  // total line charging, pu
};

/// Classical machine. `h` is the canonical inertia parameter; rotor moment of
/// inertia and speed are only ever needed through kinetic_energy() and
/// inertia_constant().
struct Generator {
  int bus = 0;            // internal index
  double s_rated = 0.0;   // MVA
  double h = 0.0;         // s, on machine base
  double d = 0.0;         // pu on machine base
  double xd_t = 0.0;      // pu on machine base
  double p_set = 0.0;     // pu on system base
};

struct PowerSystem {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  double s_base = 100.0;  // MVA; total rated power for inertia aggregation
  double f_nominal = 60.0;

  [[nodiscard]] std::size_t n_buses() const { return buses.size(); }
  [[nodiscard]] std::size_t n_generators() const { return generators.size(); }
};

struct SystemInertia {
  double energy = 0.0;  // MW*s
  double h_sys = 0.0;   // s
};

/// Rotational energy 0.5*J*w^2 in joules.
double kinetic_energy(double j, double omega);

/// H = J*w^2 / (2*S) in seconds; `s_rated` in VA.
double inertia_constant(double j, double omega, double s_rated);

/// Aggregate stored energy and system inertia constant over the `active`
/// generator indices. Throws on an empty or out-of-range set.
SystemInertia system_inertia(const PowerSystem& sys, std::span<const std::size_t> active);
SystemInertia system_inertia(const PowerSystem& sys);

/// Bus admittance matrix in pu on s_base (series admittances plus half line
/// charging at each end). Loads are not included.
Eigen::MatrixXcd admittance_matrix(const PowerSystem& sys);

/// Copy of `sys` with every generator H multiplied by one common factor so
/// the system inertia equals `h_target`.
PowerSystem scale_inertia(const PowerSystem& sys, double h_target);

/// Multiplies each H by an independent factor drawn uniformly from
/// [1 - spread, 1 + spread]. Used for the heterogeneous-inertia option.
PowerSystem perturb_inertia(const PowerSystem& sys, double spread, unsigned long long seed);

/// Binary bus adjacency from the branch list (parallel lines collapse).
Eigen::MatrixXd bus_adjacency(const PowerSystem& sys);

bool is_connected(const PowerSystem& sys);

/// Sorted, distinct internal indices of buses hosting at least one generator.
std::vector<int> generator_buses(const PowerSystem& sys);

/// Internal index of the bus with the largest load_p (ties: lowest index).
int highest_load_bus(const PowerSystem& sys);

/// Internal index for an external bus id; throws if absent.
int bus_index(const PowerSystem& sys, int external_id);

/// Checks every structural invariant and recomputes Bus::has_generator.
/// Throws InvalidArgument describing the first violation.
void validate(PowerSystem& sys);

}  // namespace inertia::grid
