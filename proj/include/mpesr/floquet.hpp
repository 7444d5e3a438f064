#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mpesr/drive.hpp"
#include "mpesr/field_interval.hpp"

namespace mpesr {

/// Truncated Floquet Hamiltonian of
///   H(t) = g B0 S_z + g B1 cos(w t) (S_x sin(theta) + S_z cos(theta))
/// in the basis |spin, k>, k in [-N, N]. Row index 2 (k + N) + s, with s = 0
/// for spin up and s = 1 for spin down. Entries in rad/us.
struct FloquetOperator {
    int truncation = 0;
    double b0_mT = 0.0;
    DriveParams drive;
    Eigen::MatrixXcd matrix;

    int dimension() const { return static_cast<int>(matrix.rows()); }
};

FloquetOperator build_floquet_matrix(const DriveParams& drive, double b0_mT, int truncation);

/// The two physical quasienergies, folded into [-w/2, w/2), with
/// eps_plus >= eps_minus.
struct QuasienergyPair {
    double eps_plus = 0.0;
    double eps_minus = 0.0;
    double gap = 0.0;         ///< |eps_plus - eps_minus| measured modulo w, in [0, w/2]
    bool converged = false;   ///< stable to tol when the truncation is doubled
    int truncation = 0;       ///< truncation the reported values come from
};

double fold_quasienergy(double eps, double omega);
/// Distance of a - b from the nearest multiple of omega.
double modular_distance(double a, double b, double omega);

/// Diagonalizes op, then again at twice its truncation; converged is set only
/// when both quasienergies moved by less than tol (rad/us). The returned
/// values come from the larger truncation.
QuasienergyPair quasienergies(const FloquetOperator& op, double tol = 1e-9);

struct FloquetOptions {
    int truncation = 0;            ///< 0 selects 2 n_max + 3
    int max_truncation = 192;
    double convergence_tol = 1e-9; ///< rad/us
    double field_tol_mT = 1e-5;    ///< golden-section bracket width
    bool refine = true;            ///< parabolic polish of the gap^2 minimum
};

/// Quasienergies at (drive, b0), doubling the truncation until converged or
/// until it exceeds max_truncation (then converged = false).
QuasienergyPair converged_quasienergies(const DriveParams& drive, double b0_mT, int n_max,
                                        const FloquetOptions& options = {});

struct ResonanceFix {
    int n = 0;
    double center_mT = 0.0;
    double gap = 0.0;         ///< minimal quasienergy gap, rad/us
    FieldInterval window;
    bool transition = true;   ///< false when the drive cannot couple the levels (theta = 0)
};

/// Analytic center +/- max(3 * analytic shift, 0.05 w/g), capped at
/// 0.45 w/g so neighbouring orders stay outside. polarity < 0 mirrors the
/// window to negative B0.
FieldInterval default_resonance_window(int n, const DriveParams& drive, int polarity = +1);

/// B0 of minimal quasienergy gap inside window. Throws SolverError when the
/// minimum sits on the window edge (no crossing bracketed) or the
/// quasienergies fail to converge.
ResonanceFix locate_resonance(int n, const DriveParams& drive, FieldInterval window,
                              const FloquetOptions& options = {});

inline ResonanceFix locate_resonance(int n, const DriveParams& drive,
                                     const FloquetOptions& options = {})
{
    return locate_resonance(n, drive, default_resonance_window(n, drive), options);
}

struct AngularPoint {
    double theta_deg = 0.0;
    double center_mT = 0.0;
    double gap = 0.0;
    bool flagged = false;     ///< excluded from fits: below resolution or not located
};

/// locate_resonance at each angle with B1 held fixed. Points with
/// gap < gap_floor (rad/us) or failed location are flagged.
std::vector<AngularPoint> angular_scan(int n, const DriveParams& drive,
                                       const std::vector<double>& theta_grid,
                                       const FloquetOptions& options = {},
                                       double gap_floor = 1e-7, int threads = 1);

}  // namespace mpesr
