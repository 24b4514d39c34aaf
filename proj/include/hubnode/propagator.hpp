#pragma once

// Trapped ground state and quench evolution. The sector dimension is small
// (400 at six sites, half filling), so propagation uses the full dense
// eigendecomposition: psi(t) = sum_n e^{-i E_n t} <n|psi0> |n>, exact up to
// the eigensolver and free of time-step error.

#include <cmath>
#include <functional>

#include "hubnode/model.hpp"

namespace hubnode {

struct EvolutionSpec {
    double dt = 0.01;     // snapshot step, units 1/J
    double t_end = 70.0;  // final time, units 1/J
    int stride = 1;       // snapshots every stride*dt

    int num_snapshots() const {
        if (dt <= 0.0 || t_end < 0.0 || stride < 1)
            throw ParameterError("evolution spec requires dt > 0, t_end >= 0, stride >= 1");
        return static_cast<int>(std::floor(t_end / (dt * stride) + 1e-9)) + 1;
    }
};

struct GroundState {
    VectorXc psi;
    double energy = 0.0;
    // Gap to the next eigenvalue fell below tolerance; the returned vector is
    // the deterministic tie-break (lowest index in basis order).
    bool degenerate = false;
};

struct WaveTrajectory {
    std::vector<double> times;
    std::vector<VectorXc> states;
};

namespace detail {

// Deterministic global phase: the largest-magnitude amplitude is made real
// positive (ties by lowest index).
inline void fix_phase(VectorXc& v) {
    int best = 0;
    double mag = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > mag + 1e-15) {
            mag = a;
            best = i;
        }
    }
    if (mag == 0.0) return;
    v *= std::conj(v[best]) / mag;
}

}  // namespace detail

inline GroundState ground_state(const SparseHamiltonian& h, double degeneracy_tol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<MatrixXr> es(h.dense());
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed");
    GroundState gs;
    gs.energy = es.eigenvalues()[0];
    gs.psi = es.eigenvectors().col(0).cast<Complex>();
    detail::fix_phase(gs.psi);
    gs.psi.normalize();
    if (h.dim() > 1 && es.eigenvalues()[1] - es.eigenvalues()[0] <= degeneracy_tol)
        gs.degenerate = true;
    return gs;
}

// Spectral propagator context; state_at(t) is valid for any real t.
class Propagator {
public:
    Propagator(const SparseHamiltonian& h, const VectorXc& psi0) {
        Eigen::SelfAdjointEigenSolver<MatrixXr> es(h.dense());
        if (es.info() != Eigen::Success)
            throw NumericalError("eigendecomposition failed");
        evals_ = es.eigenvalues();
        evecs_ = es.eigenvectors();
        coeffs_ = evecs_.transpose() * psi0;
    }

    VectorXc state_at(double t) const {
        VectorXc phased(coeffs_.size());
        for (int n = 0; n < coeffs_.size(); ++n)
            phased[n] = std::exp(Complex(0.0, -evals_[n] * t)) * coeffs_[n];
        return evecs_ * phased;
    }

    const VectorXr& eigenvalues() const { return evals_; }

private:
    VectorXr evals_;
    MatrixXr evecs_;
    VectorXc coeffs_;
};

// Streams snapshots psi(t_k), t_k = k * dt * stride, to the callback in time
// order. Norm drift beyond tolerance is a hard failure.
inline void evolve_foreach(const VectorXc& psi0, const SparseHamiltonian& h,
                           const EvolutionSpec& spec,
                           const std::function<void(int, double, const VectorXc&)>& sink,
                           double norm_tol = 1e-10) {
    if (std::abs(psi0.norm() - 1.0) > 1e-8)
        throw StateError("evolve requires a normalized initial state");
    const Propagator prop(h, psi0);
    const int n = spec.num_snapshots();
    for (int k = 0; k < n; ++k) {
        const double t = k * spec.dt * spec.stride;
        VectorXc psi = prop.state_at(t);
        if (std::abs(psi.norm() - 1.0) > norm_tol)
            throw NumericalError("norm drift beyond tolerance during evolution");
        sink(k, t, psi);
    }
}

inline WaveTrajectory evolve(const VectorXc& psi0, const SparseHamiltonian& h,
                             const EvolutionSpec& spec) {
    WaveTrajectory traj;
    traj.times.reserve(spec.num_snapshots());
    traj.states.reserve(spec.num_snapshots());
    evolve_foreach(psi0, h, spec, [&](int, double t, const VectorXc& psi) {
        traj.times.push_back(t);
        traj.states.push_back(psi);
    });
    return traj;
}

}  // namespace hubnode
