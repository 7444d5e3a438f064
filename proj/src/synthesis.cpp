#include "mpesr/synthesis.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "mpesr/errors.hpp"
#include "mpesr/parallel.hpp"

namespace mpesr {

void FieldGrid::validate() const
{
    if (!(step_mT > 0.0) || !(stop_mT > start_mT) || !std::isfinite(start_mT) ||
        !std::isfinite(stop_mT)) {
        throw ValidationError(fmt::format("invalid field grid {}..{} step {} mT", start_mT,
                                          stop_mT, step_mT));
    }
}

std::vector<double> FieldGrid::points() const
{
    validate();
    const auto count =
        static_cast<std::size_t>(std::floor((stop_mT - start_mT) / step_mT + 1e-9)) + 1;
    std::vector<double> pts(count);
    for (std::size_t i = 0; i < count; ++i) {
        pts[i] = start_mT + static_cast<double>(i) * step_mT;
    }
    return pts;
}

namespace {

void check_noise(double sigma)
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ValidationError(fmt::format("noise sigma must be >= 0, got {}", sigma));
    }
}

// Adds baseline and noise in grid order.
void finish(Spectrum& s, const SynthesisOptions& options)
{
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double n = options.noise_sigma * noise(rng);
        s.signal[i] += options.baseline.at(s.field_mT[i]) + n;
    }
    s.meta.synthesized = true;
    s.meta.seed = options.seed;
    s.meta.noise_sigma = options.noise_sigma;
    s.meta.baseline_intercept = options.baseline.intercept;
    s.meta.baseline_slope = options.baseline.slope;
    s.meta.field_floor_mT = options.field_floor_mT;
}

}  // namespace

Spectrum synthesize_spectrum(const DriveParams& drive, const RelaxationParams& relax,
                             const FieldGrid& grid, const SynthesisOptions& options)
{
    drive.validate();
    relax.validate();
    check_noise(options.noise_sigma);

    Spectrum s;
    s.field_mT = grid.points();
    s.signal.assign(s.size(), 0.0);
    parallel_for(s.size(), options.threads, [&](std::size_t i) {
        try {
            s.signal[i] = steady_state_signal(drive, s.field_mT[i], relax, options.solver);
        } catch (const SolverError&) {
            s.signal[i] = std::nan("");
        }
    });
    s.meta.drive = drive;
    s.meta.relax = relax;
    finish(s, options);
    return s;
}

Spectrum synthesize_line_spectrum(const std::vector<LineShape>& lines, const FieldGrid& grid,
                                  const SynthesisOptions& options)
{
    check_noise(options.noise_sigma);
    for (const LineShape& l : lines) {
        if (!(l.hwhm_mT > 0.0)) {
            throw ValidationError(fmt::format("line width must be > 0, got {}", l.hwhm_mT));
        }
    }
    Spectrum s;
    s.field_mT = grid.points();
    s.signal.assign(s.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (const LineShape& l : lines) {
            const double x = (s.field_mT[i] - l.center_mT) / l.hwhm_mT;
            s.signal[i] += l.amplitude / (1.0 + x * x);
        }
    }
    finish(s, options);
    return s;
}

}  // namespace mpesr
