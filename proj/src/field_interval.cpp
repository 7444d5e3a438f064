#include "mpesr/field_interval.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mpesr/errors.hpp"

namespace mpesr {

std::vector<double> inclusive_grid(double start, double stop, double step)
{
    if (!(step > 0.0) || !(stop >= start)) {
        throw ValidationError(fmt::format("invalid grid {}..{} step {}", start, stop, step));
    }
    std::vector<double> grid;
    const double slack = 1e-9 * std::max(std::abs(step), 1.0);
    for (long i = 0;; ++i) {
        const double v = start + static_cast<double>(i) * step;
        if (v > stop + slack) {
            break;
        }
        grid.push_back(std::min(v, stop));
    }
    if (stop - grid.back() > slack) {
        grid.push_back(stop);
    }
    return grid;
}

}  // namespace mpesr
