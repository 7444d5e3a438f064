#include "mpesr/report.hpp"

#include <fmt/format.h>

#include "mpesr/errors.hpp"

namespace mpesr {

using nlohmann::json;

const char* to_string(Polarity p) { return p == Polarity::Maximum ? "maximum" : "minimum"; }

const char* to_string(AverageMethod m) { return m == AverageMethod::Weighted ? "weighted" : "scatter"; }

Polarity parse_polarity(const std::string& text)
{
    if (text == "maximum" || text == "max") {
        return Polarity::Maximum;
    }
    if (text == "minimum" || text == "min") {
        return Polarity::Minimum;
    }
    throw ValidationError(fmt::format("unknown polarity '{}'", text));
}

json to_json(const PeakEstimate& p)
{
    return {{"center_mT", p.center_mT},
            {"uncertainty_mT", p.uncertainty_mT},
            {"extrema_mT", p.extrema_mT},
            {"polarity", to_string(p.polarity)},
            {"height", p.height}};
}

json to_json(const ShiftRecord& r)
{
    return {{"n", r.n},
            {"drive_proxy", r.drive_proxy},
            {"center_mT", r.center_mT},
            {"shift_mT", r.shift_mT},
            {"uncertainty_mT", r.uncertainty_mT}};
}

json to_json(const RatioReport& r)
{
    return {{"n", r.n},
            {"m", r.m},
            {"slope", r.slope},
            {"slope_uncertainty", r.slope_uncertainty},
            {"predicted",
             {{"numerator", r.predicted.exact.numerator()},
              {"denominator", r.predicted.exact.denominator()},
              {"value", r.predicted.value()}}},
            {"point_count", r.point_count},
            {"reduced_chi2", r.reduced_chi2}};
}

json to_json(const AngularFit& f)
{
    return {{"a", f.a},
            {"b", f.b},
            {"a_uncertainty", f.a_uncertainty},
            {"b_uncertainty", f.b_uncertainty},
            {"goodness", f.goodness},
            {"point_count", f.point_count}};
}

json to_json(const ResonanceFix& f)
{
    return {{"n", f.n},
            {"center_mT", f.center_mT},
            {"gap", f.gap},
            {"window_mT", {f.window.lo, f.window.hi}},
            {"transition", f.transition}};
}

json to_json(const FieldCalibration& c)
{
    return {{"scale", c.scale}, {"offset_mT", c.offset_mT}};
}

PeakEstimate peak_from_json(const json& j)
{
    try {
        PeakEstimate p;
        p.center_mT = j.at("center_mT").get<double>();
        p.uncertainty_mT = j.at("uncertainty_mT").get<double>();
        p.extrema_mT = j.at("extrema_mT").get<std::vector<double>>();
        p.polarity = parse_polarity(j.at("polarity").get<std::string>());
        p.height = j.value("height", 0.0);
        return p;
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("bad peak record: {}", e.what()));
    }
}

ShiftRecord shift_from_json(const json& j)
{
    try {
        ShiftRecord r;
        r.n = j.at("n").get<int>();
        r.drive_proxy = j.at("drive_proxy").get<double>();
        r.center_mT = j.at("center_mT").get<double>();
        r.shift_mT = j.at("shift_mT").get<double>();
        r.uncertainty_mT = j.at("uncertainty_mT").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("bad shift record: {}", e.what()));
    }
}

}  // namespace mpesr
