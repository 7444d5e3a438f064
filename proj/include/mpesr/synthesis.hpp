#pragma once

#include <cstdint>
#include <vector>

#include "mpesr/drive.hpp"
#include "mpesr/liouville.hpp"
#include "mpesr/spectrum.hpp"

namespace mpesr {

/// Uniform field grid start, start + step, ..., not exceeding stop.
struct FieldGrid {
    double start_mT = -20.0;
    double stop_mT = 20.0;
    double step_mT = 0.005;

    void validate() const;
    std::vector<double> points() const;
};

struct LinearBaseline {
    double intercept = 0.0;
    double slope = 0.0;  ///< per mT

    double at(double b0) const { return intercept + slope * b0; }
};

struct SynthesisOptions {
    double noise_sigma = 0.0;
    LinearBaseline baseline;
    std::uint64_t seed = 0;
    int threads = 1;
    double field_floor_mT = 0.020;
    SteadyStateOptions solver;
};

/// Steady-state signal on every grid point plus baseline and white Gaussian
/// noise. The noise stream depends only on the seed and the grid, never on
/// the thread count. Points where the solver fails are stored as NaN.
Spectrum synthesize_spectrum(const DriveParams& drive, const RelaxationParams& relax,
                             const FieldGrid& grid, const SynthesisOptions& options);

/// Lorentzian line with half width at half maximum hwhm.
struct LineShape {
    double center_mT = 0.0;
    double hwhm_mT = 0.02;
    double amplitude = 1.0;
};

/// Sum of Lorentzian lines plus baseline and noise; a test bed with known
/// centers for the analysis pipeline.
Spectrum synthesize_line_spectrum(const std::vector<LineShape>& lines, const FieldGrid& grid,
                                  const SynthesisOptions& options);

}  // namespace mpesr
