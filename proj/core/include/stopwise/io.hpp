#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "stopwise/belief.hpp"
#include "stopwise/house_selling.hpp"
#include "stopwise/oracle.hpp"
#include "stopwise/stopping.hpp"
#include "stopwise/utility.hpp"

namespace stopwise {

using json = nlohmann::json;

// Parsing throws InvalidArgument with a message naming the offending field.

json to_json(const Utility& u);
Utility utility_from_json(const json& j);

json to_json(const DiscreteDist& d);
DiscreteDist dist_from_json(const json& j);

json to_json(const OfferFamily& family);
OfferFamily offer_family_from_json(const json& j);

/// Discrete beliefs carry their likelihood unless `with_likelihood` is false.
json to_json(const Belief& belief, bool with_likelihood = true);
/// `family` supplies the likelihood of discrete beliefs that omit it.
Belief belief_from_json(const json& j, const std::optional<OfferFamily>& family = std::nullopt);

json to_json(const HouseModel& model);
HouseModel house_model_from_json(const json& j);

/// A finite model plus the utility stored alongside it, if any.
struct PomdpFile {
  PartiallyObservableModel model;
  std::optional<Utility> utility;
};

json to_json(const PartiallyObservableModel& model, const std::optional<Utility>& utility = std::nullopt);
PomdpFile pomdp_from_json(const json& j);

using ModelFile = std::variant<PomdpFile, HouseModel>;

/// Dispatches on "kind": "pomdp" | "house".
ModelFile model_from_json(const json& j);
ModelFile load_model_file(const std::string& path);

/// FNV-1a hash of the canonical JSON dump, as 16 hex digits.
std::string model_hash(const json& model);

json to_json(const ValueReport& report);
json to_json(const PolicyTree& policy);
json to_json(const HTable& table);
json to_json(const ReservationTable& table);
json to_json(const BruteForceReport& report);
json to_json(const McEstimate& estimate);
json to_json(const InfiniteLevel& level);
json to_json(const Figure1Result& result);
json to_json(const LowerBoundReport& report);

json to_json(const AdviceStep& step);
/// Summary of the advisor's current position.
json advisor_summary(const AdvisorState& state);

/// Finite numbers as JSON numbers; infinities and NaN as null.
json number_or_null(double v);

// CSV: '.' decimal separator, 12 significant digits, header row first.

std::string format_number(double v);
std::string to_csv(const PolicyTree& policy);
std::string to_csv(const ReservationTable& table);
std::string to_csv(const Figure1Result& result);

}  // namespace stopwise
