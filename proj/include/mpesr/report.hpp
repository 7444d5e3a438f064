#pragma once

#include <span>

#include <json.hpp>

#include "mpesr/analysis.hpp"
#include "mpesr/floquet.hpp"

namespace mpesr {

const char* to_string(Polarity p);
const char* to_string(AverageMethod m);
Polarity parse_polarity(const std::string& text);

nlohmann::json to_json(const PeakEstimate& p);
nlohmann::json to_json(const ShiftRecord& r);
nlohmann::json to_json(const RatioReport& r);
nlohmann::json to_json(const AngularFit& f);
nlohmann::json to_json(const ResonanceFix& f);
nlohmann::json to_json(const FieldCalibration& c);

PeakEstimate peak_from_json(const nlohmann::json& j);
ShiftRecord shift_from_json(const nlohmann::json& j);

}  // namespace mpesr
