#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "mpesr/errors.hpp"
#include "mpesr/spectrum.hpp"
#include "mpesr/synthesis.hpp"

using namespace mpesr;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Spectrum round_trip(const Spectrum& s)
{
    std::stringstream ss;
    write_spectrum_csv(ss, s);
    return read_spectrum_csv(ss);
}

Spectrum read_text(const std::string& text)
{
    std::istringstream is(text);
    return read_spectrum_csv(is, "test");
}

}  // namespace

TEST_SUITE("spectrum_io")
{
    TEST_CASE("shortest decimal text round-trips every double")
    {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<std::uint64_t> bits;
        int checked = 0;
        while (checked < 5000) {
            const std::uint64_t b = bits(rng);
            double v;
            std::memcpy(&v, &b, sizeof v);
            if (!std::isfinite(v)) {
                continue;
            }
            CHECK(same_bits(parse_double(format_double(v)), v));
            ++checked;
        }
        CHECK(format_double(0.1) == "0.1");
        CHECK(std::isnan(parse_double("nan")));
        CHECK(parse_double(" +2.5 ") == 2.5);
        CHECK_THROWS_AS(parse_double("1.5x"), ValidationError);
        CHECK_THROWS_AS(parse_double(""), ValidationError);
    }

    TEST_CASE("CSV round trip is bit exact with metadata")
    {
        Spectrum s;
        std::mt19937_64 rng(3);
        std::normal_distribution<double> n(0.0, 1e-3);
        for (int i = 0; i < 500; ++i) {
            s.field_mT.push_back(-3.0 + i * 0.0137);
            s.signal.push_back(n(rng));
        }
        s.signal[17] = std::nan("");
        s.meta.drive = DriveParams{}.with_b1(1.75).with_theta(69);
        s.meta.relax = RelaxationParams{};
        s.meta.seed = 18446744073709551615ULL;
        s.meta.synthesized = true;
        s.meta.noise_sigma = 1e-5;
        s.meta.baseline_intercept = 0.5;
        s.meta.baseline_slope = 0.02;
        s.meta.drive_proxy = 12.5;
        s.meta.field_floor_mT = 0.15;
        s.meta.calibration = FieldCalibration{0.999527, -0.029986};
        s.meta.extra["device"] = "oled-7";

        const Spectrum r = round_trip(s);
        REQUIRE(r.size() == s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(same_bits(r.field_mT[i], s.field_mT[i]));
            if (i == 17) {
                CHECK(std::isnan(r.signal[i]));
                CHECK_FALSE(r.valid_point(i));
            } else {
                CHECK(same_bits(r.signal[i], s.signal[i]));
            }
        }
        REQUIRE(r.meta.drive);
        CHECK(r.meta.drive->b1_mT == 1.75);
        CHECK(r.meta.drive->theta_deg == 69);
        CHECK(r.meta.drive->gamma_MHz_per_mT == default_gamma());
        REQUIRE(r.meta.relax);
        CHECK(r.meta.relax->t2_us == 1.0);
        CHECK(r.meta.seed == s.meta.seed);
        CHECK(r.meta.synthesized);
        CHECK(r.meta.noise_sigma == 1e-5);
        CHECK(r.meta.baseline_slope == 0.02);
        CHECK(r.meta.drive_proxy == 12.5);
        CHECK(r.meta.field_floor_mT == 0.15);
        REQUIRE(r.meta.calibration);
        CHECK(r.meta.calibration->offset_mT == -0.029986);
        CHECK(r.meta.extra.at("device") == "oled-7");

        std::stringstream a;
        std::stringstream b;
        write_spectrum_csv(a, s);
        write_spectrum_csv(b, r);
        CHECK(a.str() == b.str());
    }

    TEST_CASE("drive proxy falls back to B1")
    {
        SpectrumMeta m;
        CHECK_FALSE(m.effective_drive_proxy());
        m.drive = DriveParams{}.with_b1(2.0);
        CHECK(m.effective_drive_proxy() == 2.0);
        m.drive_proxy = 7.0;
        CHECK(m.effective_drive_proxy() == 7.0);
    }

    TEST_CASE("malformed input is reported with its location")
    {
        CHECK_THROWS_AS(read_text("1,2\n"), IoError);
        CHECK_THROWS_AS(read_text("b0_mT,signal\n1,2,3\n"), IoError);
        CHECK_THROWS_AS(read_text("b0_mT,signal\n1,abc\n"), IoError);
        CHECK_THROWS_AS(read_text("b0_mT,signal\n2,0\n1,0\n"), IoError);
        CHECK_THROWS_AS(read_text(""), IoError);
        CHECK_THROWS_AS(read_text("# seed = x\nb0_mT,signal\n1,0\n"), IoError);
        try {
            read_text("# source = ingested\nb0_mT,signal\n1,0\n2,oops\n");
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("test:4") != std::string::npos);
        }
        CHECK_THROWS_AS(read_spectrum_csv(std::filesystem::path("/nonexistent/x.csv")), IoError);
        const Spectrum ok = read_text("b0_mT,signal\n1,0.5\n2,0.25\n");
        CHECK(ok.size() == 2);
        CHECK_FALSE(ok.meta.synthesized);
    }

    TEST_CASE("validation of grids")
    {
        Spectrum s;
        s.field_mT = {1, 2, 3};
        s.signal = {0, 0};
        CHECK_THROWS_AS(s.validate(), ValidationError);
        s.signal = {0, 0, 0};
        CHECK_NOTHROW(s.validate());
        s.field_mT = {1, 1, 2};
        CHECK_THROWS_AS(s.validate(), ValidationError);
        CHECK_THROWS_AS((FieldGrid{1, 0, 0.1}.validate()), ValidationError);
        CHECK_THROWS_AS((FieldGrid{0, 1, 0}.validate()), ValidationError);
        CHECK(FieldGrid{0, 1, 0.25}.points().size() == 5);
    }

    TEST_CASE("synthesis is reproducible from the seed alone")
    {
        const DriveParams d = DriveParams{}.with_b1(1.0);
        const FieldGrid grid{3.3, 3.7, 0.01};
        SynthesisOptions o;
        o.noise_sigma = 1e-5;
        o.seed = 99;
        const Spectrum a = synthesize_spectrum(d, RelaxationParams{}, grid, o);
        o.threads = 3;
        const Spectrum b = synthesize_spectrum(d, RelaxationParams{}, grid, o);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(same_bits(a.signal[i], b.signal[i]));
        }
        o.seed = 100;
        const Spectrum c = synthesize_spectrum(d, RelaxationParams{}, grid, o);
        CHECK(c.signal != a.signal);
        CHECK(a.meta.seed == 99);
        CHECK(a.meta.synthesized);
        REQUIRE(a.meta.drive);
        CHECK(a.meta.drive->b1_mT == 1.0);
    }

    TEST_CASE("noise-free synthesis is symmetric under field reversal")
    {
        const DriveParams d = DriveParams{}.with_b1(1.5);
        const Spectrum s = synthesize_spectrum(d, RelaxationParams{}, FieldGrid{-11, 11, 0.25}, {});
        REQUIRE(s.size() == 89);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::size_t j = s.size() - 1 - i;
            CHECK(s.field_mT[i] == -s.field_mT[j]);
            CHECK(s.signal[i] == doctest::Approx(s.signal[j]).epsilon(1e-9).scale(1e-12));
        }
    }

    TEST_CASE("baseline and noise are added as configured")
    {
        SynthesisOptions o;
        o.baseline = {0.5, 0.02};
        const Spectrum s = synthesize_spectrum(DriveParams{}, RelaxationParams{}, FieldGrid{-1, 1, 0.5}, o);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s.signal[i] == doctest::Approx(0.5 + 0.02 * s.field_mT[i]).epsilon(1e-15));
        }
        o.noise_sigma = -1;
        CHECK_THROWS_AS(synthesize_spectrum(DriveParams{}, RelaxationParams{}, FieldGrid{-1, 1, 0.5}, o),
                        ValidationError);
    }

    TEST_CASE("solver failures become gaps rather than aborting")
    {
        SynthesisOptions o;
        o.solver.periodicity_tol = 0.0;
        o.solver.max_periods = 2;
        const Spectrum s =
            synthesize_spectrum(DriveParams{}.with_b1(1.0), RelaxationParams{}, FieldGrid{3, 4, 0.5}, o);
        REQUIRE(s.size() == 3);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK_FALSE(s.valid_point(i));
        }
    }

    TEST_CASE("Lorentzian line spectrum")
    {
        const Spectrum s = synthesize_line_spectrum({{1.0, 0.1, 2.0}}, FieldGrid{0, 2, 0.05}, {});
        CHECK(s.signal[20] == doctest::Approx(2.0));
        CHECK(s.signal[22] == doctest::Approx(1.0));
        CHECK_THROWS_AS(synthesize_line_spectrum({{1.0, 0.0, 1.0}}, FieldGrid{0, 2, 0.05}, {}),
                        ValidationError);
    }
}
