#include "inertia/common/feature.hpp"

#include <algorithm>

#include "inertia/common/error.hpp"

namespace inertia {

std::string_view feature_name(FeatureId f) {
  switch (f) {
    case FeatureId::kDeltaOmega: return "domega";
    case FeatureId::kRocof: return "rocof";
    case FeatureId::kVoltMag: return "v";
  }
  return "?";
}

FeatureId parse_feature(std::string_view s) {
  if (s == "domega" || s == "dw" || s == "delta_omega") return FeatureId::kDeltaOmega;
  if (s == "rocof" || s == "dwdt") return FeatureId::kRocof;
  if (s == "v" || s == "vmag" || s == "volt") return FeatureId::kVoltMag;
  throw InvalidArgument("unknown feature '" + std::string(s) + "'");
}

std::vector<FeatureId> parse_feature_list(std::string_view s) {
  std::vector<FeatureId> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto tok = s.substr(0, comma);
    if (!tok.empty()) out.push_back(parse_feature(tok));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  require(!out.empty(), "empty feature list");
  return out;
}

std::string feature_list_string(const std::vector<FeatureId>& fs) {
  std::string out;
  for (auto f : fs) {
    if (!out.empty()) out += ',';
    out += feature_name(f);
  }
  return out;
}

}  // namespace inertia
