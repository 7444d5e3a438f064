#pragma once

#include <limits>

#include <Eigen/Dense>

#include "mpesr/drive.hpp"

namespace mpesr {

/// Two-level relaxation: T1 toward polarization p0 along B0, T2 dephasing of
/// the transverse components. Infinite times disable the channel.
struct RelaxationParams {
    double t1_us = 10.0;
    double t2_us = 1.0;
    double p0 = 1e-3;

    /// t1 > 0, t2 > 0, t2 <= 2 t1, |p0| <= 1.
    void validate() const;

    static RelaxationParams none()
    {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {inf, inf, 0.0};
    }
};

/// 2x2 spin density matrix in the {up, down} basis.
struct DensityState {
    Eigen::Matrix2cd rho = Eigen::Matrix2cd::Identity() * 0.5;

    static DensityState from_bloch(const Eigen::Vector3d& r);
    Eigen::Vector3d bloch() const;
    double trace() const { return rho.trace().real(); }
    double purity() const { return (rho * rho).trace().real(); }
    /// Largest |rho - rho^dagger| entry.
    double hermiticity_defect() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }
};

/// Thermal state: polarization p0 along the direction of B0 (B0 >= 0 counts
/// as +z).
DensityState equilibrium_state(const RelaxationParams& relax, double b0_mT);

/// Minimum integrator steps per drive period.
constexpr int kMinStepsPerPeriod = 100;

/// Advances rho by one drive period 2 pi / w starting at drive phase 0.
/// Each step is exact T1/T2 relaxation for h/2, an exact rotation by the
/// fourth-order Magnus vector, and relaxation for h/2 again. Trace and
/// hermiticity hold by construction.
DensityState propagate_period(const DensityState& state, const DriveParams& drive, double b0_mT,
                              const RelaxationParams& relax, int steps);

struct SteadyStateOptions {
    int steps_per_period = 200;
    int max_periods = 10000;
    double periodicity_tol = 1e-8;  ///< Frobenius norm between period starts
};

struct SteadyState {
    double signal = 0.0;          ///< time-averaged polarization deficit
    double mean_polarization = 0.0;
    DensityState start;           ///< state at drive phase 0
    int periods = 0;              ///< periods stepped to confirm periodicity
};

/// Periodic steady state of drho/dt = -i[H(t), rho] + R(rho). The fixed
/// point of the one-period affine map seeds the iteration, which continues
/// until successive period starts agree to periodicity_tol. Throws
/// SolverError past max_periods.
SteadyState solve_steady_state(const DriveParams& drive, double b0_mT,
                               const RelaxationParams& relax,
                               const SteadyStateOptions& options = {});

/// Signal proxy S = p0 - <P>, where P is the polarization along B0 averaged
/// over one period of the steady state (sign flipped for p0 < 0 so S >= 0).
/// The lock-in on/off difference reduces to S because the off state is
/// thermal.
inline double steady_state_signal(const DriveParams& drive, double b0_mT,
                                  const RelaxationParams& relax,
                                  const SteadyStateOptions& options = {})
{
    return solve_steady_state(drive, b0_mT, relax, options).signal;
}

}  // namespace mpesr
