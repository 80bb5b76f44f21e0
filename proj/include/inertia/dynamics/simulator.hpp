#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "inertia/dynamics/probing.hpp"
#include "inertia/dynamics/sim_config.hpp"
#include "inertia/grid/power_system.hpp"

namespace inertia::dynamics {

/// Classical-model network: every machine is a constant EMF behind its
/// transient reactance, loads are constant impedances, and external current
/// injections enter at a fixed list of buses. The bus equations are factored
/// once; each solve is two dense matrix-vector products.
class NetworkModel {
 public:
  NetworkModel(const grid::PowerSystem& sys, std::vector<int> injection_buses);

  /// Bus voltages for internal EMFs `emf` (one per machine) and currents `inj`
  /// injected at the injection buses.
  void bus_voltages(const Eigen::VectorXcd& emf, const Eigen::VectorXcd& inj,
                    Eigen::VectorXcd& v) const;

  /// Machine stator currents given the solved bus voltages.
  void machine_currents(const Eigen::VectorXcd& emf, const Eigen::VectorXcd& v,
                        Eigen::VectorXcd& current) const;

  /// Instantaneous bus frequency deviation (pu) implied by machine speed
  /// deviations: d(arg V)/dt / omega_base, evaluated analytically.
  void bus_frequency(const Eigen::VectorXcd& emf, const Eigen::VectorXd& speed_dev,
                     const Eigen::VectorXcd& v, Eigen::VectorXd& freq) const;

  [[nodiscard]] const std::vector<int>& injection_buses() const { return injection_buses_; }
  [[nodiscard]] const std::vector<int>& machine_bus() const { return machine_bus_; }
  [[nodiscard]] Eigen::Index n_buses() const { return emf_to_bus_.rows(); }

 private:
  std::vector<int> injection_buses_;
  std::vector<int> machine_bus_;
  Eigen::VectorXcd machine_admittance_;  // 1 / (j xd')
  Eigen::MatrixXcd emf_to_bus_;          // N x G
  Eigen::MatrixXcd inj_to_bus_;          // N x K
};

/// Pre-disturbance operating point consistent with the classical model.
struct OperatingPoint {
  Eigen::VectorXd emf_mag;     // |E| per machine
  Eigen::VectorXd delta;       // rad
  Eigen::VectorXd p_mech;      // pu system base; equals P_e at the operating point
  Eigen::VectorXcd v_bus;      // pre-disturbance bus voltages
};

inline constexpr double kInternalEmf = 1.05;

/// DC power flow for rotor angles, flat EMF magnitudes, then mechanical power
/// set to the solved electrical power so the point is an exact equilibrium.
OperatingPoint initial_operating_point(const grid::PowerSystem& sys, const NetworkModel& net);

struct SimulationTrace {
  std::vector<double> times;
  std::vector<std::vector<double>> delta_omega;  // [bus][sample], pu
  std::vector<std::vector<double>> rocof;        // [bus][sample], pu/s
  std::vector<std::vector<double>> v_mag;        // [bus][sample], pu
  std::vector<double> v_mag0;                    // pre-disturbance |V|
  std::vector<double> coi_delta_omega;           // centre-of-inertia speed deviation
  std::vector<std::vector<double>> machine_angle;  // [machine][sample], rad
  std::vector<std::vector<double>> machine_speed;  // [machine][sample], pu deviation
  std::vector<double> injection;                 // probe value per sample
  double label_h_sys = 0.0;
  double dt = 0.0;

  [[nodiscard]] std::size_t n_buses() const { return delta_omega.size(); }
  [[nodiscard]] std::size_t n_samples() const { return times.size(); }
};

/// Integrates the multi-machine swing dynamics with first-order governor droop
/// (explicit RK4, input held over each step). Throws NumericalError if any
/// |delta omega| exceeds 0.1 pu or the network matrix is singular.
SimulationTrace simulate(const grid::PowerSystem& sys, const ProbingSignal& probe,
                         const SimConfig& cfg);

/// Centred-difference derivative smoothed by a centred moving average of
/// width `window` (truncated at the ends). Output length equals input length.
std::vector<double> rocof(std::span<const double> series, double rate, int window);

}  // namespace inertia::dynamics
