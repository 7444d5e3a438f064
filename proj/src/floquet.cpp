#include "mpesr/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mpesr/analytic.hpp"
#include "mpesr/errors.hpp"
#include "mpesr/golden_section.hpp"
#include "mpesr/parallel.hpp"

namespace mpesr {

FloquetOperator build_floquet_matrix(const DriveParams& drive, double b0_mT, int truncation)
{
    drive.validate();
    if (truncation < 1) {
        throw ValidationError(fmt::format("Floquet truncation must be >= 1, got {}", truncation));
    }
    const int blocks = 2 * truncation + 1;
    const int dim = 2 * blocks;
    const double w = drive.omega();
    const double g = drive.gamma_angular();
    const double zeeman = 0.5 * g * b0_mT;

    // (g B1 / 2)(S_x sin + S_z cos) with S = sigma / 2
    const double half_drive = 0.25 * g * drive.b1_mT;
    const double vx = half_drive * std::sin(drive.theta_rad());
    const double vz = half_drive * std::cos(drive.theta_rad());

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int b = 0; b < blocks; ++b) {
        const int k = b - truncation;
        const int r = 2 * b;
        h(r, r) = zeeman + k * w;
        h(r + 1, r + 1) = -zeeman + k * w;
        if (b + 1 < blocks) {
            const int c = r + 2;
            h(r, c) = vz;
            h(r + 1, c + 1) = -vz;
            h(r, c + 1) = vx;
            h(r + 1, c) = vx;
            h.block(c, r, 2, 2) = h.block(r, c, 2, 2).adjoint();
        }
    }
    return FloquetOperator{truncation, b0_mT, drive, std::move(h)};
}

double fold_quasienergy(double eps, double omega)
{
    double f = eps - omega * std::floor((eps + 0.5 * omega) / omega);
    if (f >= 0.5 * omega) {
        f -= omega;
    }
    return f;
}

double modular_distance(double a, double b, double omega)
{
    double d = std::fmod(std::abs(a - b), omega);
    return std::min(d, omega - d);
}

namespace {

struct RawPair {
    double a;
    double b;
};

// Largest |<w | shift_m v>|^2 over all Fourier shifts m. Distinct Floquet
// states are orthogonal at every time, i.e. to every shifted copy.
double max_shift_overlap(const Eigen::VectorXcd& w, const Eigen::VectorXcd& v, int blocks)
{
    double best = 0.0;
    for (int m = -(blocks - 1); m <= blocks - 1; ++m) {
        const int first = std::max(0, -m);
        const int last = std::min(blocks, blocks - m);
        if (last <= first) {
            continue;
        }
        const int len = 2 * (last - first);
        const std::complex<double> s =
            w.segment(2 * (first + m), len).dot(v.segment(2 * first, len));
        best = std::max(best, std::norm(s));
    }
    return best;
}

RawPair physical_pair(const FloquetOperator& op)
{
    const int n = op.truncation;
    const int blocks = 2 * n + 1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(op.matrix);
    if (solver.info() != Eigen::Success) {
        throw SolverError("Floquet diagonalization failed");
    }
    const auto& vecs = solver.eigenvectors();
    const auto& vals = solver.eigenvalues();
    const int dim = op.dimension();

    std::vector<double> centre_weight(dim);
    for (int j = 0; j < dim; ++j) {
        centre_weight[j] = vecs.col(j).segment(2 * n, 2).squaredNorm();
    }
    std::vector<int> order(dim);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return centre_weight[x] > centre_weight[y]; });

    const int first = order.front();
    const Eigen::VectorXcd v1 = vecs.col(first);
    for (std::size_t idx = 1; idx < order.size(); ++idx) {
        const int j = order[idx];
        if (max_shift_overlap(vecs.col(j), v1, blocks) < 0.5) {
            const double w = op.drive.omega();
            return {fold_quasienergy(vals[first], w), fold_quasienergy(vals[j], w)};
        }
    }
    throw SolverError("could not separate the two Floquet state classes");
}

QuasienergyPair make_pair(const RawPair& p, double omega, int truncation)
{
    QuasienergyPair q;
    q.eps_plus = std::max(p.a, p.b);
    q.eps_minus = std::min(p.a, p.b);
    q.gap = modular_distance(p.a, p.b, omega);
    q.truncation = truncation;
    return q;
}

}  // namespace

QuasienergyPair quasienergies(const FloquetOperator& op, double tol)
{
    const double w = op.drive.omega();
    const RawPair coarse = physical_pair(op);
    const FloquetOperator doubled = build_floquet_matrix(op.drive, op.b0_mT, 2 * op.truncation);
    const RawPair fine = physical_pair(doubled);

    const double same = std::max(modular_distance(coarse.a, fine.a, w),
                                 modular_distance(coarse.b, fine.b, w));
    const double swapped = std::max(modular_distance(coarse.a, fine.b, w),
                                    modular_distance(coarse.b, fine.a, w));
    QuasienergyPair q = make_pair(fine, w, doubled.truncation);
    q.converged = std::min(same, swapped) < tol;
    return q;
}

QuasienergyPair converged_quasienergies(const DriveParams& drive, double b0_mT, int n_max,
                                        const FloquetOptions& options)
{
    int truncation = options.truncation > 0 ? options.truncation : 2 * n_max + 3;
    QuasienergyPair q;
    while (true) {
        q = quasienergies(build_floquet_matrix(drive, b0_mT, truncation), options.convergence_tol);
        if (q.converged || 2 * truncation > options.max_truncation) {
            return q;
        }
        truncation *= 2;
    }
}

FieldInterval default_resonance_window(int n, const DriveParams& drive, int polarity)
{
    const double ref = drive.reference_field();
    const double centre = analytic_center(n, drive);
    const double half =
        std::min(std::max(3.0 * analytic_shift(n, drive), 0.05 * ref), 0.45 * ref);
    FieldInterval w{centre - half, centre + half};
    if (polarity < 0) {
        w = FieldInterval{-w.hi, -w.lo};
    }
    return w;
}

ResonanceFix locate_resonance(int n, const DriveParams& drive, FieldInterval window,
                              const FloquetOptions& options)
{
    drive.validate();
    if (n < 1) {
        throw ValidationError(fmt::format("photon order must be >= 1, got {}", n));
    }
    if (!(window.hi > window.lo)) {
        throw ValidationError(fmt::format("empty search window [{}, {}]", window.lo, window.hi));
    }

    ResonanceFix fix;
    fix.n = n;
    fix.window = window;

    if (std::sin(drive.theta_rad()) == 0.0) {
        // Drive along B0 commutes with the static Hamiltonian.
        fix.transition = false;
        fix.gap = 0.0;
        fix.center_mT = (window.mid() < 0 ? -1.0 : 1.0) * n * drive.reference_field();
        return fix;
    }

    FloquetOptions working = options;
    if (working.truncation <= 0) {
        working.truncation = 2 * n + 3;
    }
    auto gap_at = [&](double b0) {
        QuasienergyPair q = converged_quasienergies(drive, b0, n, working);
        if (!q.converged) {
            throw SolverError(fmt::format(
                "quasienergies did not converge at B0 = {} mT (truncation {})", b0, q.truncation));
        }
        // Reuse the truncation that worked for the next evaluation.
        working.truncation = q.truncation / 2;
        return q.gap;
    };

    const ScalarMinimum m = golden_section_minimize(gap_at, window.lo, window.hi,
                                                    options.field_tol_mT);
    if (m.lo <= window.lo || m.hi >= window.hi) {
        throw SolverError(fmt::format(
            "gap function is monotone over [{}, {}] mT: no {}-photon crossing bracketed",
            window.lo, window.hi, n));
    }

    double centre = m.x;
    double gap = m.fx;
    if (options.refine) {
        // gap^2 is quadratic in B0 through an isolated (avoided) crossing.
        const double h = options.field_tol_mT;
        const double y0 = std::pow(gap_at(centre - h), 2);
        const double y1 = gap * gap;
        const double y2 = std::pow(gap_at(centre + h), 2);
        const double curvature = y0 - 2.0 * y1 + y2;
        if (curvature > 0.0) {
            const double step = 0.5 * h * (y0 - y2) / curvature;
            if (std::abs(step) <= h) {
                const double polished = gap_at(centre + step);
                if (polished <= gap) {
                    centre += step;
                    gap = polished;
                }
            }
        }
    }
    fix.center_mT = centre;
    fix.gap = gap;
    return fix;
}

std::vector<AngularPoint> angular_scan(int n, const DriveParams& drive,
                                       const std::vector<double>& theta_grid,
                                       const FloquetOptions& options, double gap_floor,
                                       int threads)
{
    for (double t : theta_grid) {
        if (!(t >= 0.0 && t <= 90.0)) {
            throw ValidationError(fmt::format("angle {} deg outside [0, 90]", t));
        }
    }
    std::vector<AngularPoint> out(theta_grid.size());
    parallel_for(theta_grid.size(), threads, [&](std::size_t i) {
        AngularPoint& p = out[i];
        p.theta_deg = theta_grid[i];
        const DriveParams d = drive.with_theta(theta_grid[i]);
        try {
            const ResonanceFix fix = locate_resonance(n, d, options);
            p.center_mT = fix.center_mT;
            p.gap = fix.gap;
            p.flagged = !fix.transition || fix.gap < gap_floor;
        } catch (const SolverError&) {
            p.center_mT = std::nan("");
            p.gap = std::nan("");
            p.flagged = true;
        }
    });
    return out;
}

}  // namespace mpesr
