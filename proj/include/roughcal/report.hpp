#pragma once

#include "roughcal/calibration.hpp"
#include "roughcal/separators.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace roughcal {

// State file: {"eps_mm": [...], "h_N_m": [[set 1 ...], [set 2 ...], ...]}.
Vec parse_state(const nlohmann::json& doc, const Problem& pb);
Vec load_state(const std::filesystem::path& path, const Problem& pb);
nlohmann::json state_json(const Problem& pb, const Vec& x);

// Roughness at 1% of the diameter, heads at the middle of their bounds.
Vec default_x0(const Problem& pb);

std::string method_name(Method m);

nlohmann::json campaign_report(const Problem& pb, const CampaignConfig& cfg, const CalibrationState& x0,
                               const CampaignResult& cr);
std::string campaign_table(const Problem& pb, const CampaignResult& cr);

nlohmann::json root_diagnostic_json(const RootDiagnostic& rd);

}  // namespace roughcal
