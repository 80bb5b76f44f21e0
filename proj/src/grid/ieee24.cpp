#include "inertia/grid/ieee24.hpp"

#include <array>
#include <string_view>

namespace inertia::grid {
namespace {

struct BusRow {
  int id;
  double base_kv;
  double pd;  // MW
  double qd;  // MVAr; bus 6 includes its 100 MVAr shunt reactor
};

// Published RTS-24 bus data (MW / MVAr).
constexpr std::array<BusRow, 24> kBuses{{
    {1, 138, 108, 22},  {2, 138, 97, 20},   {3, 138, 180, 37},  {4, 138, 74, 15},
    {5, 138, 71, 14},   {6, 138, 136, 128}, {7, 138, 125, 25},  {8, 138, 171, 35},
    {9, 138, 175, 36},  {10, 138, 195, 40}, {11, 230, 0, 0},    {12, 230, 0, 0},
    {13, 230, 265, 54}, {14, 230, 194, 39}, {15, 230, 317, 64}, {16, 230, 100, 20},
    {17, 230, 0, 0},    {18, 230, 333, 68}, {19, 230, 181, 37}, {20, 230, 128, 26},
    {21, 230, 0, 0},    {22, 230, 0, 0},    {23, 230, 0, 0},    {24, 230, 0, 0},
}};

struct BranchRow {
  int from;
  int to;
  double r, x, b;  // pu on 100 MVA
};

constexpr std::array<BranchRow, 38> kBranches{{
    {1, 2, 0.0026, 0.0139, 0.4611},  {1, 3, 0.0546, 0.2112, 0.0572},
    {1, 5, 0.0218, 0.0845, 0.0229},  {2, 4, 0.0328, 0.1267, 0.0343},
    {2, 6, 0.0497, 0.1920, 0.0520},  {3, 9, 0.0308, 0.1190, 0.0322},
    {3, 24, 0.0023, 0.0839, 0.0},    {4, 9, 0.0268, 0.1037, 0.0281},
    {5, 10, 0.0228, 0.0883, 0.0239}, {6, 10, 0.0139, 0.0605, 2.4590},
    {7, 8, 0.0159, 0.0614, 0.0166},  {8, 9, 0.0427, 0.1651, 0.0447},
    {8, 10, 0.0427, 0.1651, 0.0447}, {9, 11, 0.0023, 0.0839, 0.0},
    {9, 12, 0.0023, 0.0839, 0.0},    {10, 11, 0.0023, 0.0839, 0.0},
    {10, 12, 0.0023, 0.0839, 0.0},   {11, 13, 0.0061, 0.0476, 0.0999},
    {11, 14, 0.0054, 0.0418, 0.0879}, {12, 13, 0.0061, 0.0476, 0.0999},
    {12, 23, 0.0124, 0.0966, 0.2030}, {13, 23, 0.0111, 0.0865, 0.1818},
    {14, 16, 0.0050, 0.0389, 0.0818}, {15, 16, 0.0022, 0.0173, 0.0364},
    {15, 21, 0.0063, 0.0490, 0.1030}, {15, 21, 0.0063, 0.0490, 0.1030},
    {15, 24, 0.0067, 0.0519, 0.1091}, {16, 17, 0.0033, 0.0259, 0.0545},
    {16, 19, 0.0030, 0.0231, 0.0485}, {17, 18, 0.0018, 0.0144, 0.0303},
    {17, 22, 0.0135, 0.1053, 0.2212}, {18, 21, 0.0033, 0.0259, 0.0545},
    {18, 21, 0.0033, 0.0259, 0.0545}, {19, 20, 0.0051, 0.0396, 0.0833},
    {19, 20, 0.0051, 0.0396, 0.0833}, {20, 23, 0.0028, 0.0216, 0.0455},
    {20, 23, 0.0028, 0.0216, 0.0455}, {21, 22, 0.0087, 0.0678, 0.1424},
}};

struct UnitType {
  std::string_view name;
  double s_rated;  // MVA
  double h;        // s
};

// Ratings and inertia by unit class. Inverter-interfaced plants ("res") carry
// a small emulated inertia so that every machine has H > 0.
constexpr UnitType kU12{"U12", 15, 2.9};
constexpr UnitType kU20{"U20", 25, 3.0};
constexpr UnitType kU50{"U50", 60, 3.5};
constexpr UnitType kU76{"U76", 90, 4.0};
constexpr UnitType kU100{"U100", 120, 4.2};
constexpr UnitType kU155{"U155", 180, 4.5};
constexpr UnitType kU197{"U197", 230, 4.7};
constexpr UnitType kU350{"U350", 410, 5.0};
constexpr UnitType kU400{"U400", 470, 6.0};
constexpr UnitType kSyncCond{"SC", 200, 2.5};
constexpr UnitType kRes{"RES", 25, 1.0};

struct GenRow {
  int bus;
  const UnitType* type;
  double pg;  // MW dispatch
};

constexpr std::array<GenRow, 38> kGens{{
    {1, &kU20, 10},    {1, &kU20, 10},    {1, &kU76, 76},    {1, &kU76, 76},
    {2, &kU20, 10},    {2, &kU20, 10},    {2, &kU76, 76},    {2, &kU76, 76},
    {7, &kU100, 80},   {7, &kU100, 80},   {7, &kU100, 80},   {13, &kU197, 95.1},
    {13, &kU197, 95.1}, {13, &kU197, 95.1}, {14, &kSyncCond, 0}, {15, &kU12, 12},
    {15, &kU12, 12},   {15, &kU12, 12},   {15, &kU12, 12},   {15, &kU12, 12},
    {15, &kU155, 155}, {16, &kU155, 155}, {18, &kU400, 400}, {21, &kU400, 400},
    {22, &kU50, 50},   {22, &kU50, 50},   {22, &kU50, 50},   {22, &kU50, 50},
    {22, &kU50, 50},   {22, &kU50, 50},   {23, &kU155, 155}, {23, &kU155, 155},
    {23, &kU350, 350}, {1, &kRes, 20},    {2, &kRes, 20},    {7, &kRes, 20},
    {15, &kRes, 20},   {23, &kRes, 20},
}};

}  // namespace

PowerSystem build_ieee24(const Ieee24Options& opts) {
  PowerSystem sys;
  sys.name = "ieee24";
  sys.f_nominal = 60.0;

  double s_total = 0.0;
  for (const auto& g : kGens) s_total += g.type->s_rated;
  sys.s_base = s_total;
  const double z_scale = s_total / 100.0;

  for (const auto& b : kBuses)
    sys.buses.push_back({b.id, b.base_kv, b.pd / s_total, b.qd / s_total, false});
  for (const auto& br : kBranches)
    sys.branches.push_back(
        {br.from - 1, br.to - 1, br.r * z_scale, br.x * z_scale, br.b / z_scale});
  for (const auto& g : kGens) {
    sys.generators.push_back(
        {g.bus - 1, g.type->s_rated, g.type->h, opts.damping, opts.xd_transient, g.pg / s_total});
    sys.buses[g.bus - 1].has_generator = true;
  }
  return sys;
}

}  // namespace inertia::grid
