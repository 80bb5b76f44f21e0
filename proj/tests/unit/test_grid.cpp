#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "inertia/common/error.hpp"
#include "inertia/grid/case_file.hpp"
#include "inertia/grid/ieee24.hpp"
#include "inertia/grid/power_system.hpp"

using namespace inertia;
using namespace inertia::grid;

namespace {

PowerSystem two_bus(double r, double x, double b = 0.0) {
  PowerSystem s;
  s.s_base = 100.0;
  s.buses = {{1, 138, 0.0, 0.0, false}, {2, 138, 0.5, 0.1, false}};
  s.branches = {{0, 1, r, x, b}};
  s.generators = {{0, 100.0, 5.0, 1.0, 0.25, 0.5}};
  validate(s);
  return s;
}

}  // namespace

TEST_CASE("kinetic energy and inertia constant conversions") {
  CHECK(kinetic_energy(2, 1) == doctest::Approx(1.0));
  CHECK(kinetic_energy(1, 2) == doctest::Approx(2.0));
  CHECK_THROWS_AS(kinetic_energy(0, 1), InvalidArgument);
  CHECK_THROWS_AS(kinetic_energy(1, -1), InvalidArgument);

  CHECK(inertia_constant(2, 1, 1) == doctest::Approx(1.0));
  CHECK(inertia_constant(4, 2, 2) == doctest::Approx(4.0));
  CHECK_THROWS_AS(inertia_constant(1, 1, 0), InvalidArgument);
}

TEST_CASE("system inertia aggregation") {
  PowerSystem s = two_bus(0.0, 0.5);
  s.s_base = 400.0;
  s.generators = {{0, 100.0, 3.0, 1.0, 0.25, 0.0}, {1, 300.0, 5.0, 1.0, 0.25, 0.0}};
  auto si = system_inertia(s);
  CHECK(si.energy == doctest::Approx(1800.0));
  CHECK(si.h_sys == doctest::Approx(4.5));

  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(system_inertia(s, none), InvalidArgument);
  const std::vector<std::size_t> bad{5};
  CHECK_THROWS_AS(system_inertia(s, bad), InvalidArgument);

  SUBCASE("single machine at system base reproduces its own H") {
    PowerSystem one = two_bus(0.0, 0.5);
    one.generators = {{0, one.s_base, 6.25, 1.0, 0.25, 0.0}};
    CHECK(system_inertia(one).h_sys == doctest::Approx(6.25));
  }

  SUBCASE("linear in each machine's stored energy") {
    const double before = system_inertia(s).energy;
    s.generators[1].h *= 2.0;
    CHECK(system_inertia(s).energy == doctest::Approx(before + 5.0 * 300.0));
  }
}

TEST_CASE("admittance matrix") {
  SUBCASE("pure reactance two-bus") {
    auto y = admittance_matrix(two_bus(0.0, 0.5));
    CHECK(std::abs(y(0, 0) - std::complex<double>(0, -2)) < 1e-15);
    CHECK(std::abs(y(0, 1) - std::complex<double>(0, 2)) < 1e-15);
    CHECK(std::abs(y(1, 0) - std::complex<double>(0, 2)) < 1e-15);
    CHECK(std::abs(y(1, 1) - std::complex<double>(0, -2)) < 1e-15);
  }
  SUBCASE("rows sum to zero without shunts") {
    PowerSystem s = build_ieee24();
    for (auto& br : s.branches) br.b_shunt = 0.0;
    auto y = admittance_matrix(s);
    for (Eigen::Index i = 0; i < y.rows(); ++i) CHECK(std::abs(y.row(i).sum()) < 1e-9);
  }
  SUBCASE("ieee24 Y-bus is symmetric") {
    auto y = admittance_matrix(build_ieee24());
    const Eigen::MatrixXcd diff = y - y.transpose();
    CHECK(diff.cwiseAbs().rowwise().sum().maxCoeff() < 1e-12);
  }
  SUBCASE("zero impedance rejected") {
    PowerSystem s = two_bus(0.0, 0.5);
    s.branches[0].x = 0.0;
    CHECK_THROWS_AS(admittance_matrix(s), InvalidArgument);
  }
}

TEST_CASE("ieee24 case structure") {
  const PowerSystem s = build_ieee24();
  CHECK(s.n_buses() == 24);
  CHECK(s.branches.size() == 38);
  CHECK(s.n_generators() == 38);
  CHECK(is_connected(s));

  int loaded = 0;
  for (const auto& b : s.buses) loaded += b.load_p > 0.0 ? 1 : 0;
  CHECK(loaded == 17);

  // Independent count straight from the machine list.
  std::set<int> gen_bus_ids;
  for (const auto& g : s.generators) gen_bus_ids.insert(s.buses[g.bus].id);
  int without_gen = 0;
  for (const auto& b : s.buses) without_gen += b.has_generator ? 0 : 1;
  CHECK(without_gen == 24 - static_cast<int>(gen_bus_ids.size()));
  CHECK(generator_buses(s).size() == gen_bus_ids.size());

  const double h = system_inertia(s).h_sys;
  CHECK(h >= 3.0);
  CHECK(h <= 8.0);

  CHECK(s.buses[highest_load_bus(s)].id == 18);

  SUBCASE("deterministic") {
    const PowerSystem t = build_ieee24();
    std::ostringstream a, b;
    write_case(a, s);
    write_case(b, t);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("inertia scaling") {
  const PowerSystem s = build_ieee24();
  const double h0 = system_inertia(s).h_sys;

  auto same = scale_inertia(s, h0);
  for (std::size_t i = 0; i < s.n_generators(); ++i)
    CHECK(same.generators[i].h == doctest::Approx(s.generators[i].h).epsilon(1e-14));

  auto doubled = scale_inertia(s, 2.0 * h0);
  for (std::size_t i = 0; i < s.n_generators(); ++i)
    CHECK(doubled.generators[i].h == doctest::Approx(2.0 * s.generators[i].h).epsilon(1e-14));

  for (double target : {0.1, 3.0, 5.5, 8.0, 37.0, 100.0}) {
    const double got = system_inertia(scale_inertia(s, target)).h_sys;
    CHECK(std::abs(got - target) / target < 1e-12);
  }
  CHECK_THROWS_AS(scale_inertia(s, 0.0), InvalidArgument);

  auto het = perturb_inertia(s, 0.2, 7);
  bool changed = false;
  for (std::size_t i = 0; i < s.n_generators(); ++i) changed |= het.generators[i].h != s.generators[i].h;
  CHECK(changed);
  CHECK(std::abs(system_inertia(scale_inertia(het, 5.0)).h_sys - 5.0) < 1e-12);
}

TEST_CASE("case file round trip and validation") {
  const PowerSystem s = build_ieee24();
  std::stringstream io;
  write_case(io, s);
  const PowerSystem t = read_case(io);
  REQUIRE(t.n_buses() == s.n_buses());
  REQUIRE(t.branches.size() == s.branches.size());
  REQUIRE(t.n_generators() == s.n_generators());
  CHECK(t.s_base == s.s_base);
  for (std::size_t i = 0; i < s.branches.size(); ++i) {
    CHECK(t.branches[i].from_bus == s.branches[i].from_bus);
    CHECK(t.branches[i].x == s.branches[i].x);
  }
  for (std::size_t i = 0; i < s.n_generators(); ++i) CHECK(t.generators[i].h == s.generators[i].h);

  std::istringstream disconnected(
      "s_base 100\nbus\n1 138 0 0\n2 138 0.1 0\n3 138 0 0\nbranch\n1 2 0 0.1 0\ngen\n1 100 5 1 0.25 0.1\n");
  CHECK_THROWS_AS(read_case(disconnected), DataError);

  std::istringstream unknown_bus("bus\n1 138 0 0\nbranch\n1 9 0 0.1 0\n");
  CHECK_THROWS_AS(read_case(unknown_bus), DataError);

  std::istringstream short_row("bus\n1 138 0\n");
  CHECK_THROWS_AS(read_case(short_row), DataError);
}
