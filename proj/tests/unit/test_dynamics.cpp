#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "inertia/common/error.hpp"
#include "inertia/dynamics/pmu.hpp"
#include "inertia/dynamics/probing.hpp"
#include "inertia/dynamics/simulator.hpp"
#include "inertia/grid/ieee24.hpp"

using namespace inertia;
using namespace inertia::dynamics;

namespace {

double max_abs(const std::vector<std::vector<double>>& a) {
  double m = 0.0;
  for (const auto& row : a)
    for (double v : row) m = std::max(m, std::abs(v));
  return m;
}

ProbingSignal default_probe(const grid::PowerSystem& sys, double amp) {
  ProbingSignal p;
  p.amplitude = amp;
  p.bus = grid::highest_load_bus(sys);
  return p;
}

}  // namespace

TEST_CASE("probing signal generation") {
  SimConfig cfg;
  ProbingSignal p;
  p.amplitude = 0.001;

  auto step = generate_probing(p, cfg);
  CHECK(step.size() == cfg.n_steps() + 1);
  CHECK(std::all_of(step.begin(), step.end(), [](double v) { return v == 0.001; }));

  p.shape = ProbeShape::kPulse;
  p.width = 0.0;
  auto empty = generate_probing(p, cfg);
  CHECK(std::all_of(empty.begin(), empty.end(), [](double v) { return v == 0.0; }));

  p.width = 0.1;
  p.start = 0.5;
  auto pulse = generate_probing(p, cfg);
  CHECK(pulse[499] == 0.0);
  CHECK(pulse[500] == 0.001);
  CHECK(pulse[599] == 0.001);
  CHECK(pulse[600] == 0.0);

  p.shape = ProbeShape::kPrbs;
  p.start = 0.0;
  p.period = 0.05;
  cfg.seed = 11;
  auto a = generate_probing(p, cfg);
  auto b = generate_probing(p, cfg);
  CHECK(a == b);
  cfg.seed = 12;
  auto c = generate_probing(p, cfg);
  CHECK(a != c);
  for (double v : a) CHECK(std::abs(v) == doctest::Approx(0.001));
  // constant within a switching period
  for (std::size_t k = 0; k < 50; ++k) CHECK(a[k] == a[0]);

  ProbingSignal too_big;
  too_big.amplitude = 0.06;
  CHECK_THROWS_AS(generate_probing(too_big, cfg), InvalidArgument);
}

TEST_CASE("rocof estimator") {
  std::vector<double> c(100, 3.5);
  for (double v : rocof(c, 200.0, 5)) CHECK(v == 0.0);

  const double rate = 200.0, a = 0.37;
  std::vector<double> ramp(300);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = a * static_cast<double>(i) / rate;
  auto r = rocof(ramp, rate, 5);
  for (std::size_t i = 2; i + 2 < r.size(); ++i) CHECK(std::abs(r[i] - a) < 1e-12);

  std::vector<double> s(400);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(2 * std::numbers::pi * i / rate);
  auto ds = rocof(s, rate, 5);
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < s.size(); ++i)
    worst = std::max(worst, std::abs(ds[i] - 2 * std::numbers::pi * std::cos(2 * std::numbers::pi * i / rate)));
  CHECK(worst < 0.01);

  CHECK_THROWS_AS(rocof(std::vector<double>(5, 0.0), rate, 5), InvalidArgument);
  CHECK_THROWS_AS(rocof(s, rate, 4), InvalidArgument);
}

TEST_CASE("zero probe preserves the equilibrium") {
  const auto sys = grid::build_ieee24();
  SimConfig cfg;
  const auto tr = simulate(sys, default_probe(sys, 0.0), cfg);
  CHECK(tr.n_samples() == cfg.n_steps() + 1);
  CHECK(max_abs(tr.delta_omega) < 1e-10);
  CHECK(max_abs(tr.rocof) < 1e-10);
  for (std::size_t b = 0; b < tr.n_buses(); ++b)
    for (double v : tr.v_mag[b]) CHECK(std::abs(v - tr.v_mag0[b]) < 1e-12);
  CHECK(tr.label_h_sys == doctest::Approx(grid::system_inertia(sys).h_sys));
}

TEST_CASE("small step response") {
  const auto sys = grid::build_ieee24();
  SimConfig cfg;
  const auto tr = simulate(sys, default_probe(sys, 0.001), cfg);
  for (std::size_t b = 0; b < tr.n_buses(); ++b) CHECK(tr.delta_omega[b][0] == 0.0);
  const double peak = max_abs(tr.delta_omega);
  CHECK(peak > 0.0);
  CHECK(peak < 1e-3);
  // Added load: frequency settles below nominal after the droop acts.
  CHECK(tr.coi_delta_omega.back() < 0.0);
  for (std::size_t b = 0; b < tr.n_buses(); ++b) CHECK(tr.delta_omega[b].back() < 0.0);
}

TEST_CASE("initial rocof scales with 1/H") {
  const auto base = grid::build_ieee24();
  const auto sys1 = grid::scale_inertia(base, 4.0);
  const auto sys2 = grid::scale_inertia(base, 8.0);
  SimConfig cfg;
  const auto p = default_probe(base, 0.005);
  const auto t1 = simulate(sys1, p, cfg);
  const auto t2 = simulate(sys2, p, cfg);

  const double scale = max_abs(t1.rocof);
  for (std::size_t b = 0; b < t1.n_buses(); ++b) {
    const double r1 = t1.rocof[b][1], r2 = t2.rocof[b][1];
    if (std::abs(r1) < 1e-3 * scale) continue;
    CHECK(std::abs(r1 / r2 - 2.0) < 0.1);
  }
  const double coi1 = (t1.coi_delta_omega[1] - t1.coi_delta_omega[0]) / cfg.dt;
  const double coi2 = (t2.coi_delta_omega[1] - t2.coi_delta_omega[0]) / cfg.dt;
  CHECK(std::abs(coi1 / coi2 - 2.0) < 0.1);
}

TEST_CASE("centre-of-inertia rocof follows the aggregate swing equation") {
  const auto sys = grid::build_ieee24();
  SimConfig cfg;
  for (double amp : {0.001, 0.01}) {
    const auto tr = simulate(sys, default_probe(sys, amp), cfg);
    const double measured = (tr.coi_delta_omega[1] - tr.coi_delta_omega[0]) / cfg.dt;
    const double predicted = -amp / (2.0 * tr.label_h_sys);
    CHECK(std::abs(measured - predicted) < 0.1 * std::abs(predicted));
  }
}

TEST_CASE("peak rocof decreases with system inertia") {
  const auto base = grid::build_ieee24();
  SimConfig cfg;
  double prev = std::numeric_limits<double>::infinity();
  for (double h = 3.0; h <= 8.0 + 1e-9; h += 0.5) {
    const auto tr = simulate(grid::scale_inertia(base, h), default_probe(base, 0.005), cfg);
    const double peak = max_abs(tr.rocof);
    CHECK(peak < prev);
    prev = peak;
  }
}

TEST_CASE("integration converges under step halving") {
  const auto sys = grid::build_ieee24();
  SimConfig cfg;
  const auto p = default_probe(sys, 0.005);
  const double a = max_abs(simulate(sys, p, cfg).delta_omega);
  cfg.dt = 0.5e-3;
  const double b = max_abs(simulate(sys, p, cfg).delta_omega);
  CHECK(std::abs(a - b) / b < 0.01);
}

TEST_CASE("energy is conserved on a lossless undamped network") {
  grid::PowerSystem s;
  s.s_base = 300.0;
  s.buses = {{1, 230, 0, 0, false}, {2, 230, 0, 0, false}, {3, 230, 0, 0, false}};
  s.branches = {{0, 1, 0.0, 0.1, 0.0}, {1, 2, 0.0, 0.15, 0.0}, {0, 2, 0.0, 0.2, 0.0}};
  s.generators = {{0, 100, 4.0, 0.0, 0.3, 0.2}, {1, 100, 3.0, 0.0, 0.25, -0.1}, {2, 100, 5.0, 0.0, 0.2, -0.1}};
  grid::validate(s);

  SimConfig cfg;
  cfg.droop_gain = 0.0;
  cfg.duration = 3.0;
  ProbingSignal p;
  p.amplitude = 0.02;
  p.bus = 1;
  const auto tr = simulate(s, p, cfg);

  // Independent energy function built from the linear network map.
  NetworkModel net(s, {p.bus});
  const auto op = initial_operating_point(s, net);
  const Eigen::Index g = 3;
  Eigen::MatrixXcd y_red(g, g);
  Eigen::VectorXcd v, cur;
  for (Eigen::Index j = 0; j < g; ++j) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(g);
    e(j) = 1.0;
    net.bus_voltages(e, Eigen::VectorXcd::Zero(1), v);
    net.machine_currents(e, v, cur);
    y_red.col(j) = cur;
  }
  Eigen::VectorXcd c(g);
  {
    Eigen::VectorXcd inj(1);
    inj(0) = -p.amplitude / std::conj(op.v_bus(p.bus));
    net.bus_voltages(Eigen::VectorXcd::Zero(g), inj, v);
    net.machine_currents(Eigen::VectorXcd::Zero(g), v, c);
  }
  const double wb = 2 * std::numbers::pi * s.f_nominal;
  auto energy = [&](std::size_t k, double& kinetic) {
    Eigen::VectorXcd e(g);
    kinetic = 0.0;
    double u = 0.0;
    for (Eigen::Index i = 0; i < g; ++i) {
      e(i) = std::polar(op.emf_mag(i), tr.machine_angle[i][k]);
      const double m = 2.0 * s.generators[i].h * s.generators[i].s_rated / s.s_base;
      kinetic += 0.5 * wb * m * tr.machine_speed[i][k] * tr.machine_speed[i][k];
      u -= op.p_mech(i) * tr.machine_angle[i][k];
      u += (e(i) * std::conj(c(i))).imag();
    }
    u -= 0.5 * (e.adjoint() * y_red * e)(0).imag();
    return kinetic + u;
  };
  double ke = 0.0, ke_max = 0.0;
  const double w0 = energy(1, ke);
  double drift = 0.0;
  for (std::size_t k = 1; k < tr.n_samples(); ++k) {
    drift = std::max(drift, std::abs(energy(k, ke) - w0));
    ke_max = std::max(ke_max, ke);
  }
  REQUIRE(ke_max > 0.0);
  CHECK(drift / ke_max / cfg.duration < 1e-3);
}

TEST_CASE("divergence and singular networks are reported") {
  grid::PowerSystem s;
  s.s_base = 100.0;
  s.buses = {{1, 230, 0, 0, false}, {2, 230, 0.2, 0, false}};
  s.branches = {{0, 1, 0.0, 0.1, 0.0}};
  s.generators = {{0, 100, 0.005, 0.0, 0.25, 0.2}};
  grid::validate(s);
  SimConfig cfg;
  cfg.droop_gain = 0.0;
  ProbingSignal p;
  p.amplitude = 0.05;
  p.bus = 1;
  CHECK_THROWS_AS(simulate(s, p, cfg), NumericalError);

  // Series resonance between the line and the charging at bus 2.
  grid::PowerSystem r;
  r.s_base = 100.0;
  r.buses = {{1, 230, 0, 0, false}, {2, 230, 0, 0, false}};
  r.branches = {{0, 1, 0.0, 0.5, 2.0 * (4.0 - 2.0 * std::sqrt(2.0))}};
  r.generators = {{0, 100, 5.0, 1.0, 0.25, 0.0}};
  grid::validate(r);
  p.amplitude = 0.001;
  CHECK_THROWS_AS(simulate(r, p, SimConfig{}), NumericalError);
}

TEST_CASE("pmu sampling") {
  const auto sys = grid::build_ieee24();
  SimConfig cfg;
  const auto tr = simulate(sys, default_probe(sys, 0.002), cfg);
  const auto gen_buses = grid::generator_buses(sys);

  auto rec = sample_pmu(tr, gen_buses, 200.0);
  CHECK(rec.n_samples() == static_cast<std::size_t>(cfg.duration * 200) + 1);
  CHECK(rec.channels.size() == 3 * gen_buses.size());
  for (auto f : kAllFeatures) {
    std::size_t count = 0;
    for (const auto& ch : rec.channels) count += ch.feature == f ? 1 : 0;
    CHECK(count == gen_buses.size());
  }
  const auto& ch = rec.channel(gen_buses[0], FeatureId::kDeltaOmega);
  for (std::size_t k = 0; k < rec.n_samples(); ++k) CHECK(ch.values[k] == tr.delta_omega[gen_buses[0]][5 * k]);
  CHECK(rec.label_h_sys == tr.label_h_sys);

  CHECK_THROWS_AS(sample_pmu(tr, gen_buses, 150.0), InvalidArgument);
  CHECK_THROWS_AS(sample_pmu(tr, gen_buses, 500.0), InvalidArgument);
  CHECK_THROWS_AS(sample_pmu(tr, std::vector<int>{}, 200.0), InvalidArgument);

  SimConfig coarse;
  coarse.dt = 0.005;
  const auto tr2 = simulate(sys, default_probe(sys, 0.002), coarse);
  std::vector<int> one{3};
  auto same = sample_pmu(tr2, one, 200.0);
  CHECK(same.channel(3, FeatureId::kRocof).values == tr2.rocof[3]);
}
