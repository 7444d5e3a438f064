#include "mpesr/analytic.hpp"

#include <cmath>
#include <string>

#include "mpesr/errors.hpp"

namespace mpesr {

namespace {

using Rational = boost::rational<std::int64_t>;

void check_order(int n)
{
    if (n < 1) {
        throw ValidationError("photon order must be >= 1, got " + std::to_string(n));
    }
}

// Shift coefficient c(n) such that shift_n = c(n) * B1^2 sin^2(theta) / (w/g).
Rational shift_coefficient(int n)
{
    if (n == 1) {
        return Rational(1, 16);
    }
    const std::int64_t nn = n;
    return Rational(nn, 4 * (nn * nn - 1));
}

}  // namespace

double analytic_shift(int n, const DriveParams& drive)
{
    check_order(n);
    drive.validate();
    const double s = std::sin(drive.theta_rad());
    const double drive_term = drive.b1_mT * drive.b1_mT * s * s / drive.reference_field();
    return boost::rational_cast<double>(shift_coefficient(n)) * drive_term;
}

double analytic_center(int n, const DriveParams& drive)
{
    return n * drive.reference_field() - analytic_shift(n, drive);
}

ShiftRatio shift_ratio(int n, int m)
{
    check_order(n);
    check_order(m);
    if (n == m) {
        throw ValidationError("shift_ratio needs distinct photon orders");
    }
    return ShiftRatio{shift_coefficient(n) / shift_coefficient(m)};
}

double angular_factor_signed(double theta_deg)
{
    const double s = std::sin(theta_deg * std::numbers::pi / 180.0);
    return s - 9.0 / 8.0 * s * s * s;
}

double angular_factor(double theta_deg)
{
    return std::abs(angular_factor_signed(theta_deg));
}

ThreePhotonAmplitude three_photon_amplitude(const DriveParams& drive)
{
    drive.validate();
    const double gb1 = drive.gamma_angular() * drive.b1_mT;
    const double w = drive.omega();
    const double u = gb1 * gb1 * gb1 / (32.0 * w * w) * angular_factor(drive.theta_deg);
    return {u, u / drive.gamma_angular()};
}

}  // namespace mpesr
