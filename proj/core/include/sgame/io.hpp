#pragma once

#include <string>

#include <json.hpp>

#include "sgame/estimator.hpp"
#include "sgame/types.hpp"

namespace sgame {

/// CSV with header x1,...,xp,y1,...,yq, one observation per row, doubles
/// at full precision (17 significant digits).
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& csv);

/// JSON with keys gating / experts / bounds; matrices row-major. Round
/// trips are lossless (shortest exact double representation).
nlohmann::json params_to_json(const SgameParams& psi);
SgameParams params_from_json(const nlohmann::json& j);

nlohmann::json fit_result_to_json(const FitResult& fit);
FitResult fit_result_from_json(const nlohmann::json& j);

nlohmann::json bounds_to_json(const ParameterBounds& bounds);
ParameterBounds bounds_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace sgame
