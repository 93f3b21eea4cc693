#pragma once

#include <cstdint>
#include <string>
#include <vector>

// vendored single-header nlohmann/json
#include "json.hpp"

#include "ssm/disintegration.hpp"
#include "ssm/measure.hpp"
#include "ssm/model.hpp"

namespace ssm {

// CSV rows "re,im,weight" with weights as exact fractions; doubles are
// printed with 17 significant digits so the round trip is bit-exact.
std::string measure_to_csv(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_csv(const std::string& text);

// Compact binary: "SSMM", u64 count, then per atom little-endian f64 re,
// f64 im, u64 numerator, u64 denominator. Weights must fit in u64/u64.
std::vector<std::uint8_t> measure_to_binary(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_binary(const std::vector<std::uint8_t>& bytes);

Ifs ifs_from_json(const nlohmann::json& j);
nlohmann::json ifs_to_json(const Ifs& ifs);

Model model_from_json(const nlohmann::json& j);
DisintegrationPlan plan_from_json(const nlohmann::json& j);

// Optional "lambda": [re, im] field used by the disintegration tools.
bool json_has_lambda(const nlohmann::json& j);
Complex json_lambda(const nlohmann::json& j);

// Minimal structural validation of a CLI summary line against the
// published schema (docs/summary.schema.json).
bool validate_summary(const nlohmann::json& summary, std::string* error = nullptr);

void write_file(const std::string& path, const std::string& text);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::string read_file(const std::string& path);

}  // namespace ssm
