#include "mpesr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "mpesr/errors.hpp"

namespace mpesr {

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_var = 0.0;
    double intercept_var = 0.0;
    double ss_res = 0.0;
    double ss_tot = 0.0;
};

// Ordinary least squares y = slope x + intercept, centered for stability.
LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        f.ss_res += r * r;
    }
    f.ss_tot = syy;
    if (x.size() > 2) {
        const double s2 = f.ss_res / (n - 2.0);
        f.slope_var = s2 / sxx;
        f.intercept_var = s2 * (1.0 / n + mx * mx / sxx);
    }
    return f;
}

bool excluded(double b, const std::vector<FieldInterval>& windows)
{
    return std::any_of(windows.begin(), windows.end(),
                       [b](const FieldInterval& w) { return w.contains(b); });
}

double signed_value(double y, Polarity p) { return p == Polarity::Maximum ? y : -y; }

}  // namespace

LinearBaseline fit_baseline(const Spectrum& s, const std::vector<FieldInterval>& exclusions,
                            std::size_t min_points)
{
    s.validate();
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.valid_point(i) && !excluded(s.field_mT[i], exclusions)) {
            x.push_back(s.field_mT[i]);
            y.push_back(s.signal[i]);
        }
    }
    if (x.size() < std::max<std::size_t>(min_points, 2)) {
        throw ValidationError(fmt::format(
            "only {} baseline points outside the exclusion windows (need {})", x.size(),
            min_points));
    }
    const LineFit f = fit_line(x, y);
    return {f.intercept, f.slope};
}

Spectrum baseline_correct(const Spectrum& s, const std::vector<FieldInterval>& exclusions,
                          std::size_t min_points)
{
    const LinearBaseline line = fit_baseline(s, exclusions, min_points);
    Spectrum out = s;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.signal[i] -= line.at(out.field_mT[i]);
    }
    return out;
}

std::vector<double> moving_average(std::span<const double> y, int width)
{
    if (width < 1) {
        throw ValidationError(fmt::format("smoothing width must be >= 1, got {}", width));
    }
    const auto n = static_cast<long>(y.size());
    const long half = width / 2;
    std::vector<double> out(y.size());
    for (long i = 0; i < n; ++i) {
        if (!std::isfinite(y[i])) {
            out[i] = y[i];
            continue;
        }
        double sum = 0.0;
        int count = 0;
        for (long j = std::max(0L, i - half); j <= std::min(n - 1, i + half); ++j) {
            if (std::isfinite(y[j])) {
                sum += y[j];
                ++count;
            }
        }
        out[i] = sum / count;
    }
    return out;
}

PeakEstimate extract_peak_center(const Spectrum& s, FieldInterval window, Polarity polarity,
                                 const PeakOptions& options)
{
    s.validate();
    if (s.size() < 3) {
        throw ValidationError("spectrum too short for peak search");
    }
    if (!(window.hi > window.lo) || window.lo < s.field_mT.front() ||
        window.hi > s.field_mT.back()) {
        throw ValidationError(fmt::format("peak window [{}, {}] mT not inside grid [{}, {}]",
                                          window.lo, window.hi, s.field_mT.front(),
                                          s.field_mT.back()));
    }
    if (options.max_extrema < 1) {
        throw ValidationError("max_extrema must be >= 1");
    }
    if (!(options.relative_threshold >= 0.0 && options.relative_threshold <= 1.0)) {
        throw ValidationError("relative_threshold must lie in [0, 1]");
    }

    const std::vector<double> smooth = moving_average(s.signal, options.smoothing_width);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (!window.contains(s.field_mT[i])) {
            continue;
        }
        const double c = signed_value(smooth[i], polarity);
        const double l = signed_value(smooth[i - 1], polarity);
        const double r = signed_value(smooth[i + 1], polarity);
        if (std::isfinite(c) && std::isfinite(l) && std::isfinite(r) && c > l && c >= r) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        throw SolverError(fmt::format("no local {} in [{}, {}] mT",
                                      polarity == Polarity::Maximum ? "maximum" : "minimum",
                                      window.lo, window.hi));
    }
    // Ties keep the lower field first.
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return signed_value(smooth[a], polarity) > signed_value(smooth[b], polarity);
    });
    const double strongest = signed_value(smooth[candidates.front()], polarity);
    const double cut = options.relative_threshold * strongest;
    std::size_t k = 1;
    while (k < candidates.size() && k < static_cast<std::size_t>(options.max_extrema) &&
           signed_value(smooth[candidates[k]], polarity) >= cut) {
        ++k;
    }

    PeakEstimate p;
    p.polarity = polarity;
    p.height = smooth[candidates.front()];
    for (std::size_t j = 0; j < k; ++j) {
        p.extrema_mT.push_back(s.field_mT[candidates[j]]);
    }
    const double kd = static_cast<double>(k);
    p.center_mT = std::accumulate(p.extrema_mT.begin(), p.extrema_mT.end(), 0.0) / kd;

    double sem2 = 0.0;
    if (k > 1) {
        double ss = 0.0;
        for (double b : p.extrema_mT) {
            ss += (b - p.center_mT) * (b - p.center_mT);
        }
        sem2 = ss / (kd - 1.0) / kd;
    }
    const double floor = options.field_floor_mT >= 0.0 ? options.field_floor_mT
                                                       : s.meta.field_floor_mT;
    const double spacing = s.spacing();
    double sigma = std::sqrt(floor * floor + spacing * spacing + sem2);
    if (k < static_cast<std::size_t>(options.max_extrema)) {
        sigma *= std::sqrt(options.max_extrema / kd);
    }
    p.uncertainty_mT = sigma;
    return p;
}

FieldCalibration calibrate_field_axis(const Spectrum& low_drive, const DriveParams& drive,
                                      const CalibrationOptions& options)
{
    drive.validate();
    const double ref = drive.reference_field();
    const double hw = options.half_window_mT;
    const FieldInterval pos{ref - hw, ref + hw};
    const FieldInterval neg{-ref - hw, -ref + hw};
    for (const FieldInterval& w : {pos, neg}) {
        if (w.lo < low_drive.field_mT.front() || w.hi > low_drive.field_mT.back()) {
            throw ValidationError(fmt::format(
                "calibration spectrum lacks the one-photon line near {} mT", w.mid()));
        }
    }
    double centres[2];
    int idx = 0;
    for (const FieldInterval& w : {pos, neg}) {
        try {
            centres[idx++] =
                extract_peak_center(low_drive, w, options.polarity, options.peak).center_mT;
        } catch (const SolverError&) {
            throw ValidationError(fmt::format(
                "calibration spectrum has no one-photon peak near {} mT", w.mid()));
        }
    }
    const double span = centres[0] - centres[1];
    if (!(span > 0.0)) {
        throw ValidationError("one-photon calibration peaks are not ordered +/-");
    }
    FieldCalibration cal;
    cal.scale = 2.0 * ref / span;
    cal.offset_mT = ref - cal.scale * centres[0];
    return cal;
}

Spectrum apply_calibration(const Spectrum& s, const FieldCalibration& cal)
{
    if (!(cal.scale > 0.0)) {
        throw ValidationError(fmt::format("calibration scale must be > 0, got {}", cal.scale));
    }
    Spectrum out = s;
    for (double& b : out.field_mT) {
        b = cal.apply(b);
    }
    const FieldCalibration prior = s.meta.calibration.value_or(FieldCalibration{});
    out.meta.calibration =
        FieldCalibration{cal.scale * prior.scale, cal.scale * prior.offset_mT + cal.offset_mT};
    return out;
}

ConsistentAverage consistency_average(std::span<const Measurement> values)
{
    if (values.empty()) {
        throw ValidationError("cannot average an empty set");
    }
    for (const Measurement& m : values) {
        if (!(m.uncertainty > 0.0)) {
            throw ValidationError(fmt::format("uncertainties must be > 0, got {}", m.uncertainty));
        }
    }
    bool consistent = true;
    for (std::size_t i = 0; i < values.size() && consistent; ++i) {
        for (std::size_t j = i + 1; j < values.size(); ++j) {
            const double limit = 2.0 * std::max(values[i].uncertainty, values[j].uncertainty);
            if (std::abs(values[i].value - values[j].value) > limit) {
                consistent = false;
                break;
            }
        }
    }

    ConsistentAverage out;
    if (consistent) {
        double sw = 0.0;
        double swv = 0.0;
        for (const Measurement& m : values) {
            const double w = 1.0 / (m.uncertainty * m.uncertainty);
            sw += w;
            swv += w * m.value;
        }
        out.mean = swv / sw;
        out.uncertainty = 1.0 / std::sqrt(sw);
        out.method = AverageMethod::Weighted;
        return out;
    }
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (const Measurement& m : values) {
        sum += m.value;
    }
    out.mean = sum / n;
    double ss = 0.0;
    for (const Measurement& m : values) {
        ss += (m.value - out.mean) * (m.value - out.mean);
    }
    out.uncertainty = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    out.method = AverageMethod::Scatter;
    return out;
}

std::vector<ShiftRecord> compute_shifts(std::span<const TaggedCenter> centers,
                                        const DriveParams& drive)
{
    drive.validate();
    std::vector<ShiftRecord> out;
    out.reserve(centers.size());
    for (const TaggedCenter& c : centers) {
        if (c.n < 1) {
            throw ValidationError(fmt::format("photon order must be >= 1, got {}", c.n));
        }
        if (!(c.uncertainty_mT >= 0.0)) {
            throw ValidationError("center uncertainty must be >= 0");
        }
        ShiftRecord r;
        r.n = c.n;
        r.drive_proxy = c.drive_proxy;
        r.center_mT = c.center_mT;
        r.shift_mT = c.n * drive.reference_field() - std::abs(c.center_mT);
        r.uncertainty_mT = c.uncertainty_mT;
        out.push_back(r);
    }
    return out;
}

namespace {

int common_order(std::span<const ShiftRecord> records, const char* which)
{
    if (records.empty()) {
        throw ValidationError(fmt::format("no {} shift records", which));
    }
    const int n = records.front().n;
    for (const ShiftRecord& r : records) {
        if (r.n != n) {
            throw ValidationError(fmt::format("mixed photon orders among {} records", which));
        }
    }
    return n;
}

std::map<double, const ShiftRecord*> index_by_proxy(std::span<const ShiftRecord> records,
                                                    double min_proxy, const char* which)
{
    std::map<double, const ShiftRecord*> idx;
    for (const ShiftRecord& r : records) {
        if (r.drive_proxy < min_proxy) {
            continue;
        }
        if (!idx.emplace(r.drive_proxy, &r).second) {
            throw ValidationError(fmt::format("duplicate drive proxy {} among {} records",
                                              r.drive_proxy, which));
        }
    }
    return idx;
}

}  // namespace

RatioReport fit_ratio_through_origin(std::span<const ShiftRecord> x,
                                     std::span<const ShiftRecord> y,
                                     const RatioFitOptions& options)
{
    const int m = common_order(x, "x");
    const int n = common_order(y, "y");
    const auto xs = index_by_proxy(x, options.min_drive_proxy, "x");
    const auto ys = index_by_proxy(y, options.min_drive_proxy, "y");

    std::vector<std::pair<const ShiftRecord*, const ShiftRecord*>> pairs;
    for (const auto& [proxy, rx] : xs) {
        auto it = ys.find(proxy);
        if (it == ys.end()) {
            throw ValidationError(fmt::format("drive proxy {} has no order-{} partner", proxy, n));
        }
        pairs.emplace_back(rx, it->second);
    }
    if (ys.size() != xs.size()) {
        throw ValidationError(fmt::format("order-{} records have unpaired drive proxies", n));
    }
    if (pairs.size() < 2) {
        throw ValidationError(fmt::format("need >= 2 paired shifts, got {}", pairs.size()));
    }

    RatioReport rep;
    rep.n = n;
    rep.m = m;
    rep.predicted = shift_ratio(n, m);
    rep.point_count = pairs.size();

    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [a, b] : pairs) {
        sxy += a->shift_mT * b->shift_mT;
        sxx += a->shift_mT * a->shift_mT;
    }
    if (!(sxx > 0.0)) {
        throw ValidationError("all x shifts are zero");
    }
    double slope = sxy / sxx;

    const bool weighted = std::all_of(pairs.begin(), pairs.end(), [](const auto& p) {
        return p.first->uncertainty_mT > 0.0 || p.second->uncertainty_mT > 0.0;
    });
    const double dof = static_cast<double>(pairs.size()) - 1.0;
    if (!weighted) {
        double ss = 0.0;
        for (const auto& [a, b] : pairs) {
            const double r = b->shift_mT - slope * a->shift_mT;
            ss += r * r;
        }
        rep.slope = slope;
        rep.slope_uncertainty = std::sqrt(ss / dof / sxx);
        return rep;
    }

    auto weight = [&](const ShiftRecord* a, const ShiftRecord* b, double s) {
        return 1.0 / (b->uncertainty_mT * b->uncertainty_mT +
                      s * s * a->uncertainty_mT * a->uncertainty_mT);
    };
    double swxx = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        double swxy = 0.0;
        swxx = 0.0;
        for (const auto& [a, b] : pairs) {
            const double w = weight(a, b, slope);
            swxy += w * a->shift_mT * b->shift_mT;
            swxx += w * a->shift_mT * a->shift_mT;
        }
        const double next = swxy / swxx;
        const bool done = std::abs(next - slope) <= 1e-14 * std::abs(next);
        slope = next;
        if (done) {
            break;
        }
    }
    double chi2 = 0.0;
    swxx = 0.0;
    for (const auto& [a, b] : pairs) {
        const double w = weight(a, b, slope);
        const double r = b->shift_mT - slope * a->shift_mT;
        chi2 += w * r * r;
        swxx += w * a->shift_mT * a->shift_mT;
    }
    rep.slope = slope;
    rep.slope_uncertainty = 1.0 / std::sqrt(swxx);
    rep.reduced_chi2 = chi2 / dof;
    return rep;
}

AngularFit fit_angular_law(std::span<const AngularSample> points)
{
    if (points.size() < 3) {
        throw ValidationError(fmt::format("angular fit needs >= 3 angles, got {}", points.size()));
    }
    std::vector<double> x;
    std::vector<double> y;
    for (const AngularSample& p : points) {
        if (!(p.theta_deg >= 0.0 && p.theta_deg <= 90.0)) {
            throw ValidationError(fmt::format("angle {} deg outside [0, 90]", p.theta_deg));
        }
        x.push_back(angular_factor(p.theta_deg));
        y.push_back(p.intensity);
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*hi - *lo < 1e-12) {
        throw ValidationError("angular factor does not vary across the supplied angles");
    }
    const LineFit f = fit_line(x, y);
    AngularFit out;
    out.a = f.slope;
    out.b = f.intercept;
    out.a_uncertainty = std::sqrt(f.slope_var);
    out.b_uncertainty = std::sqrt(f.intercept_var);
    out.goodness = f.ss_tot > 0.0 ? 1.0 - f.ss_res / f.ss_tot : (f.ss_res == 0.0 ? 1.0 : 0.0);
    out.point_count = points.size();
    return out;
}

}  // namespace mpesr
