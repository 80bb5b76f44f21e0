#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace inertia {

/// Candidate measurement channels per bus.
enum class FeatureId : int { kDeltaOmega = 0, kRocof = 1, kVoltMag = 2 };

inline constexpr std::array<FeatureId, 3> kAllFeatures{FeatureId::kDeltaOmega, FeatureId::kRocof,
                                                       FeatureId::kVoltMag};

std::string_view feature_name(FeatureId f);

/// Accepts "domega", "rocof", "v" (and a few aliases). Throws on anything else.
FeatureId parse_feature(std::string_view s);

/// Comma-separated list, e.g. "domega,rocof". Result is in enum order, unique.
std::vector<FeatureId> parse_feature_list(std::string_view s);

std::string feature_list_string(const std::vector<FeatureId>& fs);

}  // namespace inertia
