#include <doctest.h>

#include <cmath>

#include "mpesr/analytic.hpp"
#include "mpesr/errors.hpp"

using namespace mpesr;

TEST_SUITE("analytic")
{
    TEST_CASE("default gamma anchors the three-photon field")
    {
        CHECK(default_gamma() == doctest::Approx(28.0243).epsilon(1e-6));
        DriveParams d;
        CHECK(d.reference_field() == doctest::Approx(3.5683).epsilon(2e-5));
        CHECK(3 * d.reference_field() == doctest::Approx(10.705).epsilon(1e-12));
    }

    TEST_CASE("drive validation")
    {
        DriveParams d;
        CHECK_NOTHROW(d.validate());
        CHECK_THROWS_AS(d.with_b1(-1).validate(), ValidationError);
        CHECK_THROWS_AS(d.with_theta(91).validate(), ValidationError);
        CHECK_THROWS_AS(d.with_theta(-1).validate(), ValidationError);
        DriveParams f = d;
        f.freq_MHz = 0;
        CHECK_THROWS_AS(f.validate(), ValidationError);
        DriveParams g = d;
        g.gamma_MHz_per_mT = -1;
        CHECK_THROWS_AS(g.validate(), ValidationError);
    }

    TEST_CASE("center at zero drive")
    {
        DriveParams d;
        CHECK(std::round(analytic_center(3, d) * 1e4) / 1e4 == 10.705);
        for (double theta : {0.0, 30.0, 90.0}) {
            CHECK(analytic_center(1, d.with_theta(theta)) == doctest::Approx(3.5683).epsilon(2e-5));
        }
        CHECK(analytic_shift(1, d) == 0.0);
        CHECK_THROWS_AS(analytic_center(0, d), ValidationError);
        CHECK_THROWS_AS(analytic_shift(0, d), ValidationError);
    }

    TEST_CASE("hand-evaluated centers and shifts at B1 = 4 mT")
    {
        const DriveParams d = DriveParams{}.with_b1(4.0);
        const double ref = 100.0 / (300.0 / 10.705);
        CHECK(analytic_center(1, d) == doctest::Approx(ref - 16.0 / (16.0 * ref)).epsilon(1e-12));
        CHECK(analytic_center(1, d) == doctest::Approx(3.2880).epsilon(3e-5));
        CHECK(analytic_shift(1, d) == doctest::Approx(0.2803).epsilon(2e-4));
        CHECK(analytic_shift(2, d) == doctest::Approx(16.0 / (4 * ref) * 2.0 / 3.0).epsilon(1e-12));
        CHECK(analytic_shift(2, d) == doctest::Approx(0.7474).epsilon(1e-4));
        CHECK(analytic_center(3, d) == doctest::Approx(10.2846).epsilon(1e-5));
    }

    TEST_CASE("shift scales as sin^2 theta")
    {
        const DriveParams d = DriveParams{}.with_b1(2.0);
        for (int n : {1, 2, 3, 4}) {
            const double s90 = analytic_shift(n, d);
            for (double theta : {0.0, 20.0, 45.0, 70.0}) {
                const double s = std::sin(theta * std::numbers::pi / 180);
                CHECK(analytic_shift(n, d.with_theta(theta)) ==
                      doctest::Approx(s90 * s * s).epsilon(1e-12));
            }
            CHECK(analytic_shift(n, d) >= 0.0);
        }
    }

    TEST_CASE("exact shift ratios")
    {
        using R = boost::rational<std::int64_t>;
        CHECK(shift_ratio(2, 1).exact == R(8, 3));
        CHECK(shift_ratio(3, 2).exact == R(9, 16));
        CHECK(shift_ratio(3, 1).exact == R(3, 2));
        CHECK(shift_ratio(3, 2).value() == 0.5625);
        CHECK(shift_ratio(2, 1).value() == doctest::Approx(2.67).epsilon(2e-3));
        CHECK_THROWS_AS(shift_ratio(2, 2), ValidationError);
        CHECK_THROWS_AS(shift_ratio(0, 1), ValidationError);
        CHECK_THROWS_AS(shift_ratio(1, -1), ValidationError);
    }

    TEST_CASE("shift ratios compose")
    {
        for (int n = 2; n <= 7; ++n) {
            for (int m = 2; m <= 7; ++m) {
                if (m == n) {
                    continue;
                }
                CHECK(shift_ratio(n, 1).exact * shift_ratio(m, n).exact == shift_ratio(m, 1).exact);
                CHECK(shift_ratio(n, m).exact * shift_ratio(m, n).exact == boost::rational<std::int64_t>(1));
            }
        }
    }

    TEST_CASE("shift ratio matches the drive-dependent shifts")
    {
        const DriveParams d = DriveParams{}.with_b1(1.3).with_theta(55);
        for (int n = 1; n <= 4; ++n) {
            for (int m = 1; m <= 4; ++m) {
                if (n != m) {
                    CHECK(analytic_shift(n, d) / analytic_shift(m, d) ==
                          doctest::Approx(shift_ratio(n, m).value()).epsilon(1e-12));
                }
            }
        }
    }

    TEST_CASE("angular factor zeros and interior maximum")
    {
        CHECK(angular_factor(0.0) == 0.0);
        const double zero = std::asin(std::sqrt(8.0 / 9.0)) * 180 / std::numbers::pi;
        CHECK(zero == doctest::Approx(70.5288).epsilon(1e-6));
        CHECK(angular_factor(zero) < 1e-12);
        CHECK(angular_factor(90.0) == doctest::Approx(0.125).epsilon(1e-12));
        // d/dx (x - 9/8 x^3) = 0 at sin = sqrt(8/27)
        const double peak = std::asin(std::sqrt(8.0 / 27.0)) * 180 / std::numbers::pi;
        CHECK(peak == doctest::Approx(32.98).epsilon(1e-4));
        CHECK(angular_factor(peak) > angular_factor(peak - 0.5));
        CHECK(angular_factor(peak) > angular_factor(peak + 0.5));
        CHECK(angular_factor_signed(80.0) < 0.0);
        CHECK(angular_factor_signed(40.0) > 0.0);
    }

    TEST_CASE("three-photon amplitude")
    {
        const DriveParams d = DriveParams{}.with_b1(4.0);
        const double ref = d.reference_field();
        const ThreePhotonAmplitude u = three_photon_amplitude(d);
        CHECK(u.u_mT == doctest::Approx(64 * 0.125 / (32 * ref * ref)).epsilon(1e-12));
        CHECK(u.u_mT == doctest::Approx(0.01963).epsilon(2e-4));
        CHECK(u.u_rad_per_us == doctest::Approx(u.u_mT * d.gamma_angular()).epsilon(1e-12));
        CHECK(three_photon_amplitude(d.with_theta(0)).u_rad_per_us == 0.0);
        const double zero = std::asin(std::sqrt(8.0 / 9.0)) * 180 / std::numbers::pi;
        CHECK(three_photon_amplitude(d.with_theta(zero)).u_mT < 1e-10);
        const double ratio = three_photon_amplitude(d).u_mT /
                             three_photon_amplitude(d.with_theta(69)).u_mT;
        CHECK(ratio == doctest::Approx(6.87).epsilon(1e-3));
    }
}
