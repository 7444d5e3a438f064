#include "mpesr/drive.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mpesr/errors.hpp"

namespace mpesr {

void DriveParams::validate() const
{
    if (!(b1_mT >= 0.0) || !std::isfinite(b1_mT)) {
        throw ValidationError(fmt::format("b1 must be finite and >= 0 mT, got {}", b1_mT));
    }
    if (!(freq_MHz > 0.0) || !std::isfinite(freq_MHz)) {
        throw ValidationError(fmt::format("drive frequency must be > 0 MHz, got {}", freq_MHz));
    }
    if (!(gamma_MHz_per_mT > 0.0) || !std::isfinite(gamma_MHz_per_mT)) {
        throw ValidationError(fmt::format("gamma must be > 0 MHz/mT, got {}", gamma_MHz_per_mT));
    }
    if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
        throw ValidationError(fmt::format("theta must lie in [0, 90] deg, got {}", theta_deg));
    }
}

}  // namespace mpesr
