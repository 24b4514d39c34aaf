#pragma once

// Two- and three-particle cumulants: connected parts left after removing the
// antisymmetrized products of lower-order blocks. The convention gives every
// topologically distinct product term coefficient +-1. The kernel component
// of the three-particle cumulant is its orthogonal (Frobenius) projection
// onto the subspace with vanishing partial trace over each particle slot.

#include "hubnode/rdm.hpp"

namespace hubnode {

inline MatrixXc delta12_updown(const MatrixXc& d12, const OneRdm& d1) {
    const int m = static_cast<int>(d1.up.rows());
    MatrixXc out = d12;
    for (int j1 = 0; j1 < m; ++j1)
        for (int j2 = 0; j2 < m; ++j2)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i2 = 0; i2 < m; ++i2)
                    out(j1 * m + j2, i1 * m + i2) -= d1.up(j1, i1) * d1.down(j2, i2);
    return out;
}

inline MatrixXc delta12_upup(const MatrixXc& d12_uu, const OneRdm& d1) {
    const int m = static_cast<int>(d1.up.rows());
    MatrixXc out = d12_uu;
    for (int j1 = 0; j1 < m; ++j1)
        for (int j2 = 0; j2 < m; ++j2)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i2 = 0; i2 < m; ++i2)
                    out(j1 * m + j2, i1 * m + i2) -=
                        d1.up(j1, i1) * d1.up(j2, i2) - d1.up(j1, i2) * d1.up(j2, i1);
    return out;
}

namespace detail {

// Sum of the disconnected contributions to the up-up-down three-particle
// block: antisymmetrized 1RDM product plus all pair-cumulant x 1RDM terms.
inline MatrixXc three_rdm_disconnected(const OneRdm& d1, const MatrixXc& delta_uu,
                                       const MatrixXc& delta_ud) {
    const int m = static_cast<int>(d1.up.rows());
    MatrixXc out(m * m * m, m * m * m);
    for (int j1 = 0; j1 < m; ++j1)
        for (int j2 = 0; j2 < m; ++j2)
            for (int j3 = 0; j3 < m; ++j3) {
                const int row = (j1 * m + j2) * m + j3;
                for (int i1 = 0; i1 < m; ++i1)
                    for (int i2 = 0; i2 < m; ++i2)
                        for (int i3 = 0; i3 < m; ++i3) {
                            const int col = (i1 * m + i2) * m + i3;
                            Complex v =
                                (d1.up(j1, i1) * d1.up(j2, i2) -
                                 d1.up(j1, i2) * d1.up(j2, i1)) *
                                d1.down(j3, i3);
                            v += delta_uu(j1 * m + j2, i1 * m + i2) * d1.down(j3, i3);
                            v += delta_ud(j1 * m + j3, i1 * m + i3) * d1.up(j2, i2);
                            v -= delta_ud(j1 * m + j3, i2 * m + i3) * d1.up(j2, i1);
                            v -= delta_ud(j2 * m + j3, i1 * m + i3) * d1.up(j1, i2);
                            v += delta_ud(j2 * m + j3, i2 * m + i3) * d1.up(j1, i1);
                            out(row, col) = v;
                        }
            }
    return out;
}

}  // namespace detail

inline MatrixXc delta123_uud(const MatrixXc& d123, const OneRdm& d1,
                             const MatrixXc& delta_uu, const MatrixXc& delta_ud) {
    return d123 - detail::three_rdm_disconnected(d1, delta_uu, delta_ud);
}

// Reassembles the three-particle block from its cumulant decomposition; the
// closure test against the directly extracted block pins the sign pattern.
inline MatrixXc reconstruct_three_rdm(const OneRdm& d1, const MatrixXc& delta_uu,
                                      const MatrixXc& delta_ud,
                                      const MatrixXc& delta123) {
    return detail::three_rdm_disconnected(d1, delta_uu, delta_ud) + delta123;
}

// Partial traces of an (up, up, down) three-slot tensor stored over composite
// indices (p1*m + p2)*m + p3. Slot numbering: 1, 2 = up slots, 3 = down slot.
inline MatrixXc ptrace_slot1(const MatrixXc& t, int m) {
    MatrixXc s = MatrixXc::Zero(m * m, m * m);
    for (int j2 = 0; j2 < m; ++j2)
        for (int j3 = 0; j3 < m; ++j3)
            for (int i2 = 0; i2 < m; ++i2)
                for (int i3 = 0; i3 < m; ++i3) {
                    Complex acc = 0.0;
                    for (int k = 0; k < m; ++k)
                        acc += t((k * m + j2) * m + j3, (k * m + i2) * m + i3);
                    s(j2 * m + j3, i2 * m + i3) = acc;
                }
    return s;
}

inline MatrixXc ptrace_slot2(const MatrixXc& t, int m) {
    MatrixXc s = MatrixXc::Zero(m * m, m * m);
    for (int j1 = 0; j1 < m; ++j1)
        for (int j3 = 0; j3 < m; ++j3)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i3 = 0; i3 < m; ++i3) {
                    Complex acc = 0.0;
                    for (int k = 0; k < m; ++k)
                        acc += t((j1 * m + k) * m + j3, (i1 * m + k) * m + i3);
                    s(j1 * m + j3, i1 * m + i3) = acc;
                }
    return s;
}

inline MatrixXc ptrace_slot3(const MatrixXc& t, int m) {
    MatrixXc s = MatrixXc::Zero(m * m, m * m);
    for (int j1 = 0; j1 < m; ++j1)
        for (int j2 = 0; j2 < m; ++j2)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i2 = 0; i2 < m; ++i2) {
                    Complex acc = 0.0;
                    for (int k = 0; k < m; ++k)
                        acc += t((j1 * m + j2) * m + k, (i1 * m + i2) * m + k);
                    s(j1 * m + j2, i1 * m + i2) = acc;
                }
    return s;
}

namespace detail {

struct TraceTriple {
    MatrixXc s1, s2, s3;

    TraceTriple operator+(const TraceTriple& o) const { return {s1 + o.s1, s2 + o.s2, s3 + o.s3}; }
    TraceTriple operator-(const TraceTriple& o) const { return {s1 - o.s1, s2 - o.s2, s3 - o.s3}; }
    TraceTriple operator*(double a) const { return {a * s1, a * s2, a * s3}; }
    void axpy(const Complex& a, const TraceTriple& o) {
        s1 += a * o.s1;
        s2 += a * o.s2;
        s3 += a * o.s3;
    }
    Complex dot(const TraceTriple& o) const {
        return (s1.conjugate().cwiseProduct(o.s1)).sum() +
               (s2.conjugate().cwiseProduct(o.s2)).sum() +
               (s3.conjugate().cwiseProduct(o.s3)).sum();
    }
    double norm() const { return std::sqrt(std::abs(dot(*this))); }
};

inline TraceTriple trace_map(const MatrixXc& t, int m) {
    return {ptrace_slot1(t, m), ptrace_slot2(t, m), ptrace_slot3(t, m)};
}

// Adjoint of trace_map: embeds each two-slot matrix back with an identity on
// the traced slot.
inline MatrixXc trace_map_adjoint(const TraceTriple& x, int m) {
    MatrixXc t = MatrixXc::Zero(m * m * m, m * m * m);
    for (int k = 0; k < m; ++k) {
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                for (int c = 0; c < m; ++c)
                    for (int d = 0; d < m; ++d) {
                        t((k * m + a) * m + b, (k * m + c) * m + d) += x.s1(a * m + b, c * m + d);
                        t((a * m + k) * m + b, (c * m + k) * m + d) += x.s2(a * m + b, c * m + d);
                        t((a * m + b) * m + k, (c * m + d) * m + k) += x.s3(a * m + b, c * m + d);
                    }
    }
    return t;
}

}  // namespace detail

// Orthogonal projection onto the subspace of tensors whose partial trace over
// every slot vanishes. Solves (P P*) x = P t by conjugate gradients (the
// system is consistent; CG from zero yields the minimum-norm solution) and
// returns t - P* x.
inline MatrixXc kernel_component(const MatrixXc& delta123, int m,
                                 double rel_tol = 1e-13, int max_iter = 2000) {
    using detail::TraceTriple;
    const TraceTriple rhs = detail::trace_map(delta123, m);
    const double rhs_norm = rhs.norm();
    const double input_scale = std::max(1.0, delta123.norm());
    // Already trace-free within tolerance: the correction would be noise.
    if (rhs_norm <= 1e-12 * input_scale) return delta123;

    auto normal_op = [&](const TraceTriple& x) {
        return detail::trace_map(detail::trace_map_adjoint(x, m), m);
    };

    TraceTriple x{MatrixXc::Zero(m * m, m * m), MatrixXc::Zero(m * m, m * m),
                  MatrixXc::Zero(m * m, m * m)};
    TraceTriple r = rhs;
    TraceTriple p = r;
    double rr = std::abs(r.dot(r).real());
    const double target = std::max(rel_tol * rhs_norm, 1e-16 * input_scale);
    for (int it = 0; it < max_iter; ++it) {
        if (std::sqrt(rr) <= target) break;
        TraceTriple ap = normal_op(p);
        const double pap = p.dot(ap).real();
        if (pap <= 0.0)
            throw NumericalError("trace projection CG breakdown");
        const double alpha = rr / pap;
        x.axpy(alpha, p);
        r.axpy(-alpha, ap);
        const double rr_new = std::abs(r.dot(r).real());
        if (std::sqrt(rr_new) <= target) {
            rr = rr_new;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        TraceTriple pn = r;
        pn.axpy(beta, p);
        p = pn;
    }
    if (std::sqrt(rr) > 10.0 * rel_tol * rhs_norm && std::sqrt(rr) > 1e-12 * input_scale)
        throw NumericalError("trace projection did not converge");
    return delta123 - detail::trace_map_adjoint(x, m);
}

struct CumulantNorms {
    double d12_upup = 0.0;
    double d12_updown = 0.0;
    double d123 = 0.0;
    double d123_kernel = 0.0;
};

struct CumulantSnapshot {
    MatrixXc delta12_updown;
    MatrixXc delta12_upup;
    MatrixXc delta123;
    MatrixXc delta123_kernel;
    CumulantNorms norms;
};

// All cumulant blocks of one wavefunction snapshot.
inline CumulantSnapshot cumulant_snapshot(const SectorSpace& space, const FockBasis& basis,
                                          const VectorXc& psi) {
    CumulantSnapshot s;
    const OneRdm d1 = one_rdm(space, basis, psi);
    const MatrixXc d12_ud = two_rdm_updown(space, basis, psi);
    const MatrixXc d12_uu = two_rdm_upup(space, basis, psi);
    const MatrixXc d123 = three_rdm_uud(space, basis, psi);
    s.delta12_updown = delta12_updown(d12_ud, d1);
    s.delta12_upup = delta12_upup(d12_uu, d1);
    s.delta123 = delta123_uud(d123, d1, s.delta12_upup, s.delta12_updown);
    s.delta123_kernel = kernel_component(s.delta123, space.m_sites());
    s.norms.d12_updown = s.delta12_updown.norm();
    s.norms.d12_upup = s.delta12_upup.norm();
    s.norms.d123 = s.delta123.norm();
    s.norms.d123_kernel = s.delta123_kernel.norm();
    return s;
}

struct CumulantSeries {
    std::vector<double> times;
    std::vector<CumulantNorms> norms;
};

}  // namespace hubnode
