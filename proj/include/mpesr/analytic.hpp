#pragma once

#include <cstdint>

#include <boost/rational.hpp>

#include "mpesr/drive.hpp"

namespace mpesr {

/// Perturbative n-photon resonance center B_n (mT).
///   n = 1: w/g - g B1^2 sin^2(theta) / (16 w)
///   n > 1: n w/g - (g B1^2 sin^2(theta) / (4 w)) * n / (n^2 - 1)
double analytic_center(int n, const DriveParams& drive);

/// Drive-induced shift n w/g - B_n (mT); non-negative.
double analytic_shift(int n, const DriveParams& drive);

struct ShiftRatio {
    boost::rational<std::int64_t> exact;
    double value() const { return boost::rational_cast<double>(exact); }
};

/// Exact ratio of the n-photon to the m-photon drive-induced shift. It is
/// independent of B1 and theta.
ShiftRatio shift_ratio(int n, int m);

/// |sin(theta) - (9/8) sin^3(theta)|; theta in degrees.
double angular_factor(double theta_deg);

/// Signed version, used for locating the zero and interior maximum.
double angular_factor_signed(double theta_deg);

struct ThreePhotonAmplitude {
    double u_rad_per_us;  ///< g^3 B1^3 / (32 w^2) * angular_factor(theta)
    double u_mT;          ///< u / g
};

ThreePhotonAmplitude three_photon_amplitude(const DriveParams& drive);

}  // namespace mpesr
