#pragma once

#include <cmath>

namespace mpesr {

struct ScalarMinimum {
    double x;
    double fx;
    double lo;  ///< final bracket
    double hi;
};

/// Golden-section search for the minimum of a unimodal f on [lo, hi],
/// stopping once the bracket is narrower than tol.
template <class F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double tol)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x), a, b};
}

}  // namespace mpesr
