#pragma once

#include <limits>
#include <span>
#include <vector>

#include "mpesr/analytic.hpp"
#include "mpesr/field_interval.hpp"
#include "mpesr/spectrum.hpp"
#include "mpesr/synthesis.hpp"

namespace mpesr {

// ---- baseline -------------------------------------------------------------

/// Least-squares line through the valid points outside every exclusion
/// window. Throws ValidationError when fewer than min_points remain.
LinearBaseline fit_baseline(const Spectrum& s, const std::vector<FieldInterval>& exclusions,
                            std::size_t min_points = 10);

/// s minus the fitted line, over the full grid.
Spectrum baseline_correct(const Spectrum& s, const std::vector<FieldInterval>& exclusions,
                          std::size_t min_points = 10);

// ---- peak centers ---------------------------------------------------------

enum class Polarity { Maximum, Minimum };

struct PeakOptions {
    int smoothing_width = 5;  ///< moving-average points; 1 disables smoothing
    int max_extrema = 3;
    /// Extrema weaker than this fraction of the strongest one (polarity
    /// signed) are treated as baseline noise and ignored.
    double relative_threshold = 0.5;
    /// Systematic field-scale floor (mT). Negative means take it from the
    /// spectrum's metadata.
    double field_floor_mT = -1.0;
};

struct PeakEstimate {
    double center_mT = 0.0;
    double uncertainty_mT = 0.0;
    std::vector<double> extrema_mT;  ///< fields averaged into center, by rank
    Polarity polarity = Polarity::Maximum;
    double height = 0.0;             ///< smoothed signal at the strongest extremum
};

/// Centered moving average; edges use the points available, NaNs are skipped.
std::vector<double> moving_average(std::span<const double> y, int width);

/// Mean field of the (up to) max_extrema strongest local extrema of the
/// requested polarity inside window, after smoothing. The uncertainty adds in
/// quadrature the field floor, the grid spacing and the standard error of the
/// extremum positions. It is scaled by sqrt(max_extrema / found) when fewer
/// extrema exist. Throws SolverError when no extremum exists in window.
PeakEstimate extract_peak_center(const Spectrum& s, FieldInterval window, Polarity polarity,
                                 const PeakOptions& options = {});

// ---- field calibration ----------------------------------------------------

struct CalibrationOptions {
    double half_window_mT = 0.3;
    Polarity polarity = Polarity::Maximum;
    PeakOptions peak;
};

/// Affine map sending the measured +/- one-photon centers of a low-drive
/// spectrum onto +/- w/g.
FieldCalibration calibrate_field_axis(const Spectrum& low_drive, const DriveParams& drive,
                                      const CalibrationOptions& options = {});

/// Field axis mapped through cal; the composite correction is kept in meta.
Spectrum apply_calibration(const Spectrum& s, const FieldCalibration& cal);

// ---- averaging ------------------------------------------------------------

struct Measurement {
    double value = 0.0;
    double uncertainty = 0.0;
};

enum class AverageMethod { Weighted, Scatter };

struct ConsistentAverage {
    double mean = 0.0;
    double uncertainty = 0.0;
    AverageMethod method = AverageMethod::Weighted;
};

/// Inverse-variance weighted mean when every pair agrees within two standard
/// deviations (|v_i - v_j| <= 2 max(s_i, s_j)); otherwise the plain mean with
/// the standard error of the sample.
ConsistentAverage consistency_average(std::span<const Measurement> values);

// ---- shifts and ratios ----------------------------------------------------

struct TaggedCenter {
    int n = 1;
    double drive_proxy = 0.0;
    double center_mT = 0.0;
    double uncertainty_mT = 0.0;

    static TaggedCenter from_peak(int n, double drive_proxy, const PeakEstimate& p)
    {
        return {n, drive_proxy, p.center_mT, p.uncertainty_mT};
    }
};

struct ShiftRecord {
    int n = 1;
    double drive_proxy = 0.0;
    double center_mT = 0.0;
    double shift_mT = 0.0;        ///< n w/g - |center|
    double uncertainty_mT = 0.0;
};

/// Lines at negative B0 enter through |center|.
std::vector<ShiftRecord> compute_shifts(std::span<const TaggedCenter> centers,
                                        const DriveParams& drive);

struct RatioFitOptions {
    /// Strong-drive cut: records with drive_proxy below this are dropped
    /// before pairing.
    double min_drive_proxy = -std::numeric_limits<double>::infinity();
};

struct RatioReport {
    int n = 0;                    ///< numerator order (y)
    int m = 0;                    ///< denominator order (x)
    double slope = 0.0;
    double slope_uncertainty = 0.0;
    ShiftRatio predicted;
    std::size_t point_count = 0;
    double reduced_chi2 = 0.0;
};

/// Weighted least-squares slope through the origin of y-shifts (order n)
/// against x-shifts (order m), paired on identical drive_proxy. Weights use
/// the effective variance s_y^2 + slope^2 s_x^2, iterated to a fixed point.
/// Throws ValidationError with < 2 pairs or any unpaired proxy.
RatioReport fit_ratio_through_origin(std::span<const ShiftRecord> x,
                                     std::span<const ShiftRecord> y,
                                     const RatioFitOptions& options = {});

// ---- angular law ----------------------------------------------------------

struct AngularSample {
    double theta_deg = 0.0;
    double intensity = 0.0;
};

struct AngularFit {
    double a = 0.0;               ///< slope against |sin - (9/8) sin^3|
    double b = 0.0;               ///< intercept
    double a_uncertainty = 0.0;
    double b_uncertainty = 0.0;
    double goodness = 0.0;        ///< coefficient of determination
    std::size_t point_count = 0;
};

/// Ordinary least squares of intensity against angular_factor(theta).
AngularFit fit_angular_law(std::span<const AngularSample> points);

}  // namespace mpesr
