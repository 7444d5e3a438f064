#include "mpesr/liouville.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "mpesr/errors.hpp"

namespace mpesr {

void RelaxationParams::validate() const
{
    if (!(t1_us > 0.0) || !(t2_us > 0.0)) {
        throw ValidationError(fmt::format("relaxation times must be > 0 (t1 = {}, t2 = {})",
                                          t1_us, t2_us));
    }
    if (!(t2_us <= 2.0 * t1_us)) {
        throw ValidationError(fmt::format("t2 = {} us exceeds 2 t1 = {} us", t2_us, 2 * t1_us));
    }
    if (!(std::abs(p0) <= 1.0)) {
        throw ValidationError(fmt::format("p0 must lie in [-1, 1], got {}", p0));
    }
}

DensityState DensityState::from_bloch(const Eigen::Vector3d& r)
{
    using C = std::complex<double>;
    DensityState s;
    s.rho(0, 0) = 0.5 * (1.0 + r.z());
    s.rho(1, 1) = 0.5 * (1.0 - r.z());
    s.rho(0, 1) = 0.5 * C(r.x(), -r.y());
    s.rho(1, 0) = 0.5 * C(r.x(), r.y());
    return s;
}

Eigen::Vector3d DensityState::bloch() const
{
    const std::complex<double> c = rho(0, 1) + std::conj(rho(1, 0));
    return {c.real(), -c.imag(), (rho(0, 0) - rho(1, 1)).real()};
}

namespace {

double field_sign(double b0) { return b0 < 0.0 ? -1.0 : 1.0; }

using Affine = Eigen::Matrix4d;  // acts on (r_x, r_y, r_z, 1)

Eigen::Matrix3d rotation(const Eigen::Vector3d& phi)
{
    const double angle = phi.norm();
    if (angle == 0.0) {
        return Eigen::Matrix3d::Identity();
    }
    return Eigen::AngleAxisd(angle, phi / angle).toRotationMatrix();
}

Affine half_relaxation(double h, const RelaxationParams& relax, double b0)
{
    const double e2 = std::exp(-0.5 * h / relax.t2_us);
    const double e1 = std::exp(-0.5 * h / relax.t1_us);
    Affine a = Affine::Identity();
    a(0, 0) = e2;
    a(1, 1) = e2;
    a(2, 2) = e1;
    a(2, 3) = field_sign(b0) * relax.p0 * (1.0 - e1);
    return a;
}

// One affine map per integrator step across a full period.
std::vector<Affine> step_maps(const DriveParams& drive, double b0, const RelaxationParams& relax,
                              int steps)
{
    const double w = drive.omega();
    const double g = drive.gamma_angular();
    const double h = 2.0 * std::numbers::pi / w / steps;
    const double sx = std::sin(drive.theta_rad());
    const double cz = std::cos(drive.theta_rad());
    const Affine relax_half = half_relaxation(h, relax, b0);

    // Gauss-Legendre nodes for the fourth-order Magnus expansion.
    const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
    const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
    auto field_vector = [&](double t) {
        const double drive_t = g * drive.b1_mT * std::cos(w * t);
        return Eigen::Vector3d(drive_t * sx, 0.0, g * b0 + drive_t * cz);
    };

    std::vector<Affine> maps;
    maps.reserve(steps);
    for (int s = 0; s < steps; ++s) {
        const double t0 = s * h;
        const Eigen::Vector3d o1 = field_vector(t0 + c1 * h);
        const Eigen::Vector3d o2 = field_vector(t0 + c2 * h);
        const Eigen::Vector3d phi =
            0.5 * h * (o1 + o2) + std::sqrt(3.0) / 12.0 * h * h * o2.cross(o1);
        Affine rot = Affine::Identity();
        rot.topLeftCorner<3, 3>() = rotation(phi);
        maps.push_back(relax_half * rot * relax_half);
    }
    return maps;
}

Eigen::Vector4d augmented(const Eigen::Vector3d& r) { return {r.x(), r.y(), r.z(), 1.0}; }

}  // namespace

DensityState equilibrium_state(const RelaxationParams& relax, double b0_mT)
{
    return DensityState::from_bloch({0.0, 0.0, field_sign(b0_mT) * relax.p0});
}

DensityState propagate_period(const DensityState& state, const DriveParams& drive, double b0_mT,
                              const RelaxationParams& relax, int steps)
{
    drive.validate();
    relax.validate();
    if (steps < kMinStepsPerPeriod) {
        throw ValidationError(fmt::format("need >= {} steps per period, got {}",
                                          kMinStepsPerPeriod, steps));
    }
    Eigen::Vector4d r = augmented(state.bloch());
    for (const Affine& m : step_maps(drive, b0_mT, relax, steps)) {
        r = m * r;
    }
    // Carry the trace of the input (1 for a physical state) through unchanged.
    DensityState out = DensityState::from_bloch(r.head<3>());
    out.rho *= state.trace();
    return out;
}

SteadyState solve_steady_state(const DriveParams& drive, double b0_mT,
                               const RelaxationParams& relax, const SteadyStateOptions& options)
{
    drive.validate();
    relax.validate();
    if (options.steps_per_period < kMinStepsPerPeriod) {
        throw ValidationError(fmt::format("need >= {} steps per period, got {}",
                                          kMinStepsPerPeriod, options.steps_per_period));
    }
    const double sign = field_sign(b0_mT);
    SteadyState result;

    if (drive.b1_mT == 0.0) {
        // Undriven: the thermal state is stationary.
        result.start = equilibrium_state(relax, b0_mT);
        result.mean_polarization = relax.p0;
        result.signal = 0.0;
        return result;
    }

    const std::vector<Affine> maps = step_maps(drive, b0_mT, relax, options.steps_per_period);
    Affine period = Affine::Identity();
    for (const Affine& m : maps) {
        period = m * period;
    }

    // Fixed point of r -> M r + c.
    Eigen::Vector3d r = equilibrium_state(relax, b0_mT).bloch();
    const Eigen::Matrix3d lhs = Eigen::Matrix3d::Identity() - period.topLeftCorner<3, 3>();
    Eigen::FullPivLU<Eigen::Matrix3d> lu(lhs);
    if (lu.isInvertible()) {
        const Eigen::Vector3d fixed = lu.solve(period.topRightCorner<3, 1>());
        if (fixed.allFinite()) {
            r = fixed;
        }
    }

    // Frobenius norm of rho_a - rho_b is |r_a - r_b| / sqrt(2).
    const double tol = options.periodicity_tol * std::sqrt(2.0);
    int periods = 0;
    while (true) {
        const Eigen::Vector3d next = (period * augmented(r)).head<3>();
        ++periods;
        const bool periodic = (next - r).norm() < tol;
        r = next;
        if (periodic) {
            break;
        }
        if (periods >= options.max_periods) {
            throw SolverError(fmt::format(
                "no periodic steady state within {} periods at B0 = {} mT", options.max_periods,
                b0_mT));
        }
    }

    // Trapezoid rule over a periodic trajectory = mean of the step samples.
    Eigen::Vector4d x = augmented(r);
    double sum = 0.0;
    for (const Affine& m : maps) {
        sum += x.z();
        x = m * x;
    }
    const double mean_p = sign * sum / static_cast<double>(maps.size());

    result.start = DensityState::from_bloch(r);
    result.mean_polarization = mean_p;
    result.periods = periods;
    result.signal = relax.p0 >= 0.0 ? relax.p0 - mean_p : mean_p - relax.p0;
    return result;
}

}  // namespace mpesr
