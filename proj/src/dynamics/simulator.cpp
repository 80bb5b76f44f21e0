#include "inertia/dynamics/simulator.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "inertia/common/error.hpp"
#include "inertia/common/rng.hpp"

namespace inertia::dynamics {

using cd = std::complex<double>;

NetworkModel::NetworkModel(const grid::PowerSystem& sys, std::vector<int> injection_buses)
    : injection_buses_(std::move(injection_buses)) {
  const auto n = static_cast<Eigen::Index>(sys.n_buses());
  const auto g = static_cast<Eigen::Index>(sys.n_generators());
  Eigen::MatrixXcd y = grid::admittance_matrix(sys);
  for (Eigen::Index i = 0; i < n; ++i) y(i, i) += cd(sys.buses[i].load_p, -sys.buses[i].load_q);

  machine_admittance_.resize(g);
  machine_bus_.resize(g);
  Eigen::MatrixXcd incidence = Eigen::MatrixXcd::Zero(n, g);
  for (Eigen::Index i = 0; i < g; ++i) {
    const auto& gen = sys.generators[i];
    const double x_sys = gen.xd_t * sys.s_base / gen.s_rated;
    machine_admittance_(i) = 1.0 / cd(0.0, x_sys);
    machine_bus_[i] = gen.bus;
    y(gen.bus, gen.bus) += machine_admittance_(i);
    incidence(gen.bus, i) = machine_admittance_(i);
  }

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(y);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) throw NumericalError("network admittance matrix is singular");
  emf_to_bus_ = lu.solve(incidence);
  inj_to_bus_.resize(n, static_cast<Eigen::Index>(injection_buses_.size()));
  for (std::size_t k = 0; k < injection_buses_.size(); ++k) {
    require(injection_buses_[k] >= 0 && injection_buses_[k] < n, "injection bus out of range");
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    e(injection_buses_[k]) = 1.0;
    inj_to_bus_.col(static_cast<Eigen::Index>(k)) = lu.solve(e);
  }
  if (!emf_to_bus_.allFinite() || !inj_to_bus_.allFinite())
    throw NumericalError("network admittance matrix is singular");
}

void NetworkModel::bus_voltages(const Eigen::VectorXcd& emf, const Eigen::VectorXcd& inj,
                                Eigen::VectorXcd& v) const {
  v.noalias() = emf_to_bus_ * emf;
  if (inj.size() > 0) v.noalias() += inj_to_bus_ * inj;
}

void NetworkModel::machine_currents(const Eigen::VectorXcd& emf, const Eigen::VectorXcd& v,
                                    Eigen::VectorXcd& current) const {
  current.resize(emf.size());
  for (Eigen::Index i = 0; i < emf.size(); ++i)
    current(i) = machine_admittance_(i) * (emf(i) - v(machine_bus_[i]));
}

void NetworkModel::bus_frequency(const Eigen::VectorXcd& emf, const Eigen::VectorXd& speed_dev,
                                 const Eigen::VectorXcd& v, Eigen::VectorXd& freq) const {
  // dV/dt = M * (j w_b dw .* E) with injections held constant, hence
  // d(arg V)/dt / w_b = Re(M (dw .* E) / V).
  const Eigen::VectorXcd weighted = speed_dev.cast<cd>().cwiseProduct(emf);
  const Eigen::VectorXcd dv = emf_to_bus_ * weighted;
  freq.resize(v.size());
  for (Eigen::Index b = 0; b < v.size(); ++b) freq(b) = (dv(b) / v(b)).real();
}

OperatingPoint initial_operating_point(const grid::PowerSystem& sys, const NetworkModel& net) {
  const auto n = static_cast<Eigen::Index>(sys.n_buses());
  const auto g = static_cast<Eigen::Index>(sys.n_generators());

  // Dispatch scaled to the total load, then a lossless DC flow.
  double load = 0.0, dispatch = 0.0;
  for (const auto& b : sys.buses) load += b.load_p;
  for (const auto& gen : sys.generators) dispatch += gen.p_set;
  const double scale = dispatch > 0.0 ? load / dispatch : 0.0;

  Eigen::VectorXd p_gen(g);
  Eigen::VectorXd injection = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) injection(i) -= sys.buses[i].load_p;
  std::vector<double> bus_rating(n, 0.0);
  for (Eigen::Index i = 0; i < g; ++i) {
    const auto& gen = sys.generators[i];
    p_gen(i) = dispatch > 0.0 ? gen.p_set * scale : load * gen.s_rated / sys.s_base;
    injection(gen.bus) += p_gen(i);
    bus_rating[gen.bus] += gen.s_rated;
  }
  Eigen::Index slack = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    if (bus_rating[i] > bus_rating[slack]) slack = i;

  Eigen::MatrixXd bdc = Eigen::MatrixXd::Zero(n, n);
  for (const auto& br : sys.branches) {
    const double b = 1.0 / br.x;
    bdc(br.from_bus, br.from_bus) += b;
    bdc(br.to_bus, br.to_bus) += b;
    bdc(br.from_bus, br.to_bus) -= b;
    bdc(br.to_bus, br.from_bus) -= b;
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != slack) keep.push_back(i);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  if (!keep.empty()) {
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd br(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      rhs(a) = injection(keep[a]);
      for (Eigen::Index c = 0; c < m; ++c) br(a, c) = bdc(keep[a], keep[c]);
    }
    Eigen::VectorXd sol = br.partialPivLu().solve(rhs);
    for (Eigen::Index a = 0; a < m; ++a) theta(keep[a]) = sol(a);
  }

  OperatingPoint op;
  op.emf_mag = Eigen::VectorXd::Constant(g, kInternalEmf);
  op.delta.resize(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    const auto& gen = sys.generators[i];
    const double x_sys = gen.xd_t * sys.s_base / gen.s_rated;
    op.delta(i) = theta(gen.bus) + p_gen(i) * x_sys / kInternalEmf;
  }

  Eigen::VectorXcd emf(g);
  for (Eigen::Index i = 0; i < g; ++i) emf(i) = std::polar(op.emf_mag(i), op.delta(i));
  Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(net.injection_buses().size()));
  Eigen::VectorXcd current;
  net.bus_voltages(emf, inj, op.v_bus);
  net.machine_currents(emf, op.v_bus, current);
  op.p_mech.resize(g);
  for (Eigen::Index i = 0; i < g; ++i) op.p_mech(i) = (emf(i) * std::conj(current(i))).real();
  if (!op.p_mech.allFinite() || !op.v_bus.allFinite())
    throw NumericalError("operating point is not finite");
  return op;
}

namespace {

// Machine state layout: [delta | speed deviation | governor output].
struct Machines {
  Eigen::VectorXd m;        // 2 H S / S_B
  Eigen::VectorXd d;        // damping, system base
  Eigen::VectorXd k_droop;  // droop gain, system base
};

}  // namespace

SimulationTrace simulate(const grid::PowerSystem& sys, const ProbingSignal& probe,
                         const SimConfig& cfg) {
  cfg.validate();
  probe.validate();
  require(probe.bus >= 0 && static_cast<std::size_t>(probe.bus) < sys.n_buses(),
          "probe bus out of range");

  const auto n_bus = static_cast<Eigen::Index>(sys.n_buses());
  const auto g = static_cast<Eigen::Index>(sys.n_generators());
  require(g > 0, "simulate: system has no generators");

  // Injection points: the probe bus first, then loaded buses when ambient
  // fluctuation is enabled.
  std::vector<int> inj_buses{probe.bus};
  std::vector<double> ambient_scale{0.0};
  if (cfg.ambient_sigma > 0.0) {
    for (Eigen::Index b = 0; b < n_bus; ++b) {
      if (sys.buses[b].load_p > 0.0) {
        inj_buses.push_back(static_cast<int>(b));
        ambient_scale.push_back(cfg.ambient_sigma * sys.buses[b].load_p);
      }
    }
  }
  const NetworkModel net(sys, inj_buses);
  const OperatingPoint op = initial_operating_point(sys, net);
  const auto n_inj = static_cast<Eigen::Index>(inj_buses.size());

  Machines mach;
  mach.m.resize(g);
  mach.d.resize(g);
  mach.k_droop.resize(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    const auto& gen = sys.generators[i];
    const double share = gen.s_rated / sys.s_base;
    mach.m(i) = 2.0 * gen.h * share;
    mach.d(i) = gen.d * share;
    mach.k_droop(i) = cfg.droop_gain * share;
  }
  const double omega_base = 2.0 * std::numbers::pi * sys.f_nominal;
  const double tau = cfg.governor_tc;

  // Constant-current equivalents of power drawn at the injection buses,
  // referenced to the pre-disturbance voltage.
  Eigen::VectorXcd unit_current(n_inj);
  for (Eigen::Index k = 0; k < n_inj; ++k)
    unit_current(k) = -1.0 / std::conj(op.v_bus(inj_buses[k]));

  const std::vector<double> probe_series = generate_probing(probe, cfg);
  const std::size_t n_steps = cfg.n_steps();

  // Ambient fluctuation: Ornstein-Uhlenbeck per load bus, started at zero.
  std::vector<std::vector<double>> ambient;
  if (n_inj > 1) {
    Rng rng(derive_seed(cfg.seed, SeedStream::kAmbient));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double a = std::exp(-cfg.dt / cfg.ambient_tc);
    const double s = std::sqrt(1.0 - a * a);
    ambient.assign(static_cast<std::size_t>(n_inj), std::vector<double>(n_steps + 1, 0.0));
    for (std::size_t k = 1; k <= n_steps; ++k)
      for (Eigen::Index j = 1; j < n_inj; ++j)
        ambient[j][k] = a * ambient[j][k - 1] + s * ambient_scale[j] * normal(rng);
  }

  auto injections_at = [&](std::size_t k, Eigen::VectorXcd& inj) {
    inj.resize(n_inj);
    inj(0) = probe_series[k] * unit_current(0);
    for (Eigen::Index j = 1; j < n_inj; ++j) inj(j) = ambient[j][k] * unit_current(j);
  };

  Eigen::VectorXcd emf(g), v, current;
  auto make_emf = [&](const Eigen::VectorXd& x) {
    for (Eigen::Index i = 0; i < g; ++i) emf(i) = std::polar(op.emf_mag(i), x(i));
  };

  auto derivative = [&](const Eigen::VectorXd& x, const Eigen::VectorXcd& inj, Eigen::VectorXd& dx) {
    make_emf(x);
    net.bus_voltages(emf, inj, v);
    net.machine_currents(emf, v, current);
    dx.resize(3 * g);
    for (Eigen::Index i = 0; i < g; ++i) {
      const double w = x(g + i);
      const double pe = (emf(i) * std::conj(current(i))).real();
      dx(i) = omega_base * w;
      dx(g + i) = (op.p_mech(i) + x(2 * g + i) - pe - mach.d(i) * w) / mach.m(i);
      dx(2 * g + i) = (-x(2 * g + i) - mach.k_droop(i) * w) / tau;
    }
  };

  // Machines sharing a bus report their inertia-weighted mean speed.
  std::vector<std::vector<Eigen::Index>> machines_at(static_cast<std::size_t>(n_bus));
  for (Eigen::Index i = 0; i < g; ++i) machines_at[sys.generators[i].bus].push_back(i);

  SimulationTrace tr;
  tr.dt = cfg.dt;
  tr.label_h_sys = grid::system_inertia(sys).h_sys;
  tr.times.resize(n_steps + 1);
  tr.delta_omega.assign(n_bus, std::vector<double>(n_steps + 1));
  tr.v_mag.assign(n_bus, std::vector<double>(n_steps + 1));
  tr.coi_delta_omega.resize(n_steps + 1);
  tr.machine_angle.assign(g, std::vector<double>(n_steps + 1));
  tr.machine_speed.assign(g, std::vector<double>(n_steps + 1));
  tr.injection = probe_series;
  tr.v_mag0.resize(n_bus);
  for (Eigen::Index b = 0; b < n_bus; ++b) tr.v_mag0[b] = std::abs(op.v_bus(b));
  const double m_total = mach.m.sum();

  Eigen::VectorXd x(3 * g);
  x << op.delta, Eigen::VectorXd::Zero(g), Eigen::VectorXd::Zero(g);
  Eigen::VectorXd k1, k2, k3, k4, freq;
  Eigen::VectorXcd inj;

  auto record = [&](std::size_t k) {
    make_emf(x);
    net.bus_voltages(emf, inj, v);
    const Eigen::VectorXd speed = x.segment(g, g);
    net.bus_frequency(emf, speed, v, freq);
    tr.times[k] = static_cast<double>(k) * cfg.dt;
    for (Eigen::Index b = 0; b < n_bus; ++b) {
      double f = freq(b);
      if (!machines_at[b].empty()) {
        double num = 0.0, den = 0.0;
        for (auto i : machines_at[b]) {
          num += mach.m(i) * speed(i);
          den += mach.m(i);
        }
        f = num / den;
      }
      tr.delta_omega[b][k] = f;
      tr.v_mag[b][k] = std::abs(v(b));
    }
    tr.coi_delta_omega[k] = mach.m.dot(speed) / m_total;
    for (Eigen::Index i = 0; i < g; ++i) {
      tr.machine_angle[i][k] = x(i);
      tr.machine_speed[i][k] = speed(i);
    }
  };

  injections_at(0, inj);
  record(0);
  for (std::size_t k = 0; k < n_steps; ++k) {
    injections_at(k, inj);
    const double h = cfg.dt;
    derivative(x, inj, k1);
    derivative(x + 0.5 * h * k1, inj, k2);
    derivative(x + 0.5 * h * k2, inj, k3);
    derivative(x + h * k3, inj, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double peak = x.segment(g, g).cwiseAbs().maxCoeff();
    if (!std::isfinite(peak) || peak > 0.1)
      throw NumericalError("simulation diverged at t = " + std::to_string((k + 1) * h) +
                           " s (|delta omega| = " + std::to_string(peak) + " pu)");
    injections_at(k + 1, inj);
    record(k + 1);
  }

  const double rate = 1.0 / cfg.dt;
  tr.rocof.resize(n_bus);
  for (Eigen::Index b = 0; b < n_bus; ++b) tr.rocof[b] = rocof(tr.delta_omega[b], rate, cfg.rocof_window);
  return tr;
}

std::vector<double> rocof(std::span<const double> series, double rate, int window) {
  require(window >= 1 && window % 2 == 1, "rocof: window must be odd and >= 1");
  require(series.size() > static_cast<std::size_t>(window), "rocof: window must be shorter than the series");
  require(series.size() >= 2, "rocof: series too short");
  require(rate > 0.0, "rocof: rate must be positive");
  const std::size_t n = series.size();
  std::vector<double> d(n);
  d[0] = (series[1] - series[0]) * rate;
  d[n - 1] = (series[n - 1] - series[n - 2]) * rate;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (series[i + 1] - series[i - 1]) * 0.5 * rate;
  if (window == 1) return d;

  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> out(n);
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, i + half);
    double s = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) s += d[j];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace inertia::dynamics
