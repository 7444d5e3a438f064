#pragma once

#include <vector>

namespace mpesr {

/// Closed field interval [lo, hi] in mT.
struct FieldInterval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double b) const { return b >= lo && b <= hi; }
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
};

/// start, start + step, ... up to stop; stop itself is appended when the last
/// regular step falls short of it by more than a rounding error.
std::vector<double> inclusive_grid(double start, double stop, double step);

}  // namespace mpesr
