#pragma once

#include <numbers>

namespace mpesr {

/// Gyromagnetic ratio (MHz/mT) implied by an unshifted three-photon line at
/// 10.705 mT under 100 MHz drive, i.e. 3 * 100 MHz / 10.705 mT.
constexpr double default_gamma() { return 300.0 / 10.705; }

/// Linearly polarized cw drive of a spin-1/2 in a static field B0 along z.
///
/// Fields are in mT and frequencies are linear (MHz). Angular quantities
/// (rad/us) come from the accessors. theta is the angle between B1 and B0,
/// so theta = 90 deg is the usual perpendicular geometry.
struct DriveParams {
    double b1_mT = 0.0;
    double freq_MHz = 100.0;
    double theta_deg = 90.0;
    double gamma_MHz_per_mT = default_gamma();

    /// Throws ValidationError on b1 < 0, freq <= 0, gamma <= 0, or theta
    /// outside [0, 90].
    void validate() const;

    double omega() const { return 2.0 * std::numbers::pi * freq_MHz; }
    double gamma_angular() const { return 2.0 * std::numbers::pi * gamma_MHz_per_mT; }
    /// One-photon field omega/gamma (mT).
    double reference_field() const { return freq_MHz / gamma_MHz_per_mT; }
    double theta_rad() const { return theta_deg * std::numbers::pi / 180.0; }

    DriveParams with_b1(double b1) const
    {
        DriveParams d = *this;
        d.b1_mT = b1;
        return d;
    }
    DriveParams with_theta(double theta) const
    {
        DriveParams d = *this;
        d.theta_deg = theta;
        return d;
    }
};

}  // namespace mpesr
