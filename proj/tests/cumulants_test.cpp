#include <gtest/gtest.h>

#include <random>

#include "hubnode/cumulants.hpp"
#include "hubnode/propagator.hpp"
#include "oracles.hpp"

using namespace hubnode;

namespace {

struct Evolved {
    SectorSpace space{6};
    const FockBasis& basis;
    Propagator prop;

    Evolved(double u, double v)
        : basis(space.basis(3, 3)),
          prop(build_untrapped(u, v),
               ground_state(build_trapped(u, v)).psi) {}

    SparseHamiltonian build_trapped(double u, double v) {
        ModelParams p;
        p.m_sites = 6;
        p.interaction = u;
        p.trap_strength = v;
        return build_hamiltonian(space, basis, p, true);
    }
    SparseHamiltonian build_untrapped(double u, double v) {
        ModelParams p;
        p.m_sites = 6;
        p.interaction = u;
        p.trap_strength = v;
        return build_hamiltonian(space, basis, p, false);
    }
};

}  // namespace

// All cumulants vanish on Slater-determinant trajectories (U = 0), across a
// grid of quench strengths and snapshots.
TEST(Cumulants, SlaterNullity) {
    for (double v : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        Evolved ev(0.0, v);
        for (int k = 0; k < 20; ++k) {
            const double t = 0.35 * k;
            const CumulantSnapshot snap = cumulant_snapshot(ev.space, ev.basis,
                                                            ev.prop.state_at(t));
            EXPECT_LE(snap.norms.d12_updown, 1e-10) << "V=" << v << " t=" << t;
            EXPECT_LE(snap.norms.d12_upup, 1e-10);
            EXPECT_LE(snap.norms.d123, 1e-10);
            EXPECT_LE(snap.norms.d123_kernel, 1e-10);
        }
    }
}

TEST(Cumulants, MixedDeltaTraceIsZero) {
    Evolved ev(1.4, 1.1);
    const VectorXc psi = ev.prop.state_at(3.3);
    const OneRdm d1 = one_rdm(ev.space, ev.basis, psi);
    const MatrixXc d12 = two_rdm_updown(ev.space, ev.basis, psi);
    const MatrixXc delta = delta12_updown(d12, d1);
    EXPECT_NEAR(std::abs(delta.trace()), 0.0, 1e-10);
    EXPECT_NEAR((delta - delta.adjoint()).cwiseAbs().maxCoeff(), 0.0, 1e-13);
}

// Reassembling the cumulant decomposition must reproduce the directly
// extracted three-body block; this pins the sign pattern of the expansion.
TEST(Cumulants, ReconstructionClosure) {
    for (auto [u, v] : {std::pair{1.0, 1.0}, std::pair{3.1, 1.0}, std::pair{4.0, 2.0}}) {
        Evolved ev(u, v);
        for (double t : {0.0, 1.7, 4.9}) {
            const VectorXc psi = ev.prop.state_at(t);
            const OneRdm d1 = one_rdm(ev.space, ev.basis, psi);
            const MatrixXc d12 = two_rdm_updown(ev.space, ev.basis, psi);
            const MatrixXc duu = two_rdm_upup(ev.space, ev.basis, psi);
            const MatrixXc d123 = three_rdm_uud(ev.space, ev.basis, psi);
            const MatrixXc delta_uu = delta12_upup(duu, d1);
            const MatrixXc delta_ud = delta12_updown(d12, d1);
            const MatrixXc delta3 = delta123_uud(d123, d1, delta_uu, delta_ud);
            const MatrixXc rebuilt = reconstruct_three_rdm(d1, delta_uu, delta_ud, delta3);
            EXPECT_LE((rebuilt - d123).cwiseAbs().maxCoeff(), 1e-10)
                << "U=" << u << " V=" << v << " t=" << t;
            // Term-by-term symmetries survive the subtraction.
            EXPECT_NEAR((delta3 - delta3.adjoint()).cwiseAbs().maxCoeff(), 0.0, 1e-12);
            for (int j1 = 0; j1 < 6 && j1 < 3; ++j1)
                for (int j2 = 0; j2 < 6; ++j2)
                    for (int j3 = 0; j3 < 6; ++j3) {
                        const int r = (j1 * 6 + j2) * 6 + j3;
                        const int rs = (j2 * 6 + j1) * 6 + j3;
                        EXPECT_NEAR((delta3.row(r) + delta3.row(rs)).cwiseAbs().maxCoeff(),
                                    0.0, 1e-12);
                    }
        }
    }
}

TEST(KernelComponent, TraceFreeInAllSlots) {
    Evolved ev(2.2, 1.0);
    const VectorXc psi = ev.prop.state_at(2.1);
    const CumulantSnapshot snap = cumulant_snapshot(ev.space, ev.basis, psi);
    EXPECT_LE(ptrace_slot1(snap.delta123_kernel, 6).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(ptrace_slot2(snap.delta123_kernel, 6).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(ptrace_slot3(snap.delta123_kernel, 6).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(snap.norms.d123_kernel, snap.norms.d123 + 1e-14);
}

TEST(KernelComponent, IdempotentOnTraceFreeInput) {
    Evolved ev(2.2, 1.0);
    const CumulantSnapshot snap = cumulant_snapshot(ev.space, ev.basis,
                                                    ev.prop.state_at(1.4));
    const MatrixXc again = kernel_component(snap.delta123_kernel, 6);
    EXPECT_LE((again - snap.delta123_kernel).cwiseAbs().maxCoeff(), 1e-12);
}

// The projection annihilates anything built purely from trace completions.
TEST(KernelComponent, AnnihilatesCompletions) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist;
    auto rand_herm = [&](int n) {
        MatrixXc a(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) a(r, c) = Complex(dist(rng), dist(rng));
        return MatrixXc(0.5 * (a + a.adjoint()));
    };
    detail::TraceTriple x{rand_herm(36), rand_herm(36), rand_herm(36)};
    const MatrixXc completion = detail::trace_map_adjoint(x, 6);
    const MatrixXc projected = kernel_component(completion, 6);
    EXPECT_LE(projected.cwiseAbs().maxCoeff(), 1e-10 * completion.cwiseAbs().maxCoeff());
}

TEST(KernelComponent, ProjectionIsContraction) {
    Evolved ev(3.1, 1.0);
    for (double t : {0.4, 2.0, 6.5}) {
        const CumulantSnapshot snap = cumulant_snapshot(ev.space, ev.basis,
                                                        ev.prop.state_at(t));
        EXPECT_LE(snap.norms.d123_kernel, snap.norms.d123 + 1e-14);
    }
}

// Reduced density matrices are invariant under a global phase of the state.
TEST(Cumulants, PhaseInvariance) {
    Evolved ev(1.0, 1.0);
    const VectorXc psi = ev.prop.state_at(0.9);
    const VectorXc rotated = std::exp(Complex(0.0, 1.234)) * psi;
    const CumulantSnapshot a = cumulant_snapshot(ev.space, ev.basis, psi);
    const CumulantSnapshot b = cumulant_snapshot(ev.space, ev.basis, rotated);
    EXPECT_NEAR(a.norms.d12_updown, b.norms.d12_updown, 1e-12);
    EXPECT_NEAR(a.norms.d12_upup, b.norms.d12_upup, 1e-12);
    EXPECT_NEAR(a.norms.d123, b.norms.d123, 1e-12);
    EXPECT_NEAR(a.norms.d123_kernel, b.norms.d123_kernel, 1e-12);
}
