#pragma once

// Reduced density matrices of a sector state, extracted by applying
// annihilation strings to psi and forming the Gram matrix of the resulting
// vectors. This costs O(dim * M_s^2) per block instead of elementwise
// operator expectations and makes positive semi-definiteness structural.
//
// Composite index layout: p = first * M_s + second (0-based), rows carry the
// bra-side (j) indices. For the mixed-spin block the first index is the up
// site, the second the down site.

#include "hubnode/hilbert.hpp"

namespace hubnode {

struct OneRdm {
    MatrixXc up;    // up(j,i)   = <a+_{i,up} a_{j,up}>
    MatrixXc down;  // down(j,i) = <a+_{i,down} a_{j,down}>
};

enum class HoleOrdering {
    psd,      // <a_{j1 up} a_{j2 dn} a+_{i2 dn} a+_{i1 up}>, positive semi-definite
    literal,  // printed operator order under full anticommutation; equals -psd
};

namespace detail {

// Columns u_q = (annihilation string q) psi; returns D with
// D(p,q) = <u_q, u_p>, i.e. the transposed Gram matrix.
inline MatrixXc gram_transposed(const MatrixXc& columns) {
    MatrixXc g = columns.adjoint() * columns;
    return g.transpose();
}

}  // namespace detail

inline OneRdm one_rdm(const SectorSpace& space, const FockBasis& basis,
                      const VectorXc& psi) {
    const int m = space.m_sites();
    OneRdm out;
    for (Spin s : {Spin::Up, Spin::Down}) {
        const FockBasis* sector = nullptr;
        MatrixXc cols;
        for (int i = 0; i < m; ++i) {
            VectorXc v;
            apply_ladder(space, basis, annihilator(i, s), psi, &sector, &v);
            if (cols.size() == 0) cols.resize(v.size(), m);
            cols.col(i) = v;
        }
        (s == Spin::Up ? out.up : out.down) = detail::gram_transposed(cols);
    }
    return out;
}

// Mixed-spin block D[(j1,j2),(i1,i2)] = <a+_{i1 up} a+_{i2 dn} a_{j2 dn} a_{j1 up}>.
inline MatrixXc two_rdm_updown(const SectorSpace& space, const FockBasis& basis,
                               const VectorXc& psi) {
    const int m = space.m_sites();
    MatrixXc cols;
    const FockBasis* s1 = nullptr;
    const FockBasis* s2 = nullptr;
    for (int a = 0; a < m; ++a) {
        VectorXc w;
        apply_ladder(space, basis, annihilator(a, Spin::Up), psi, &s1, &w);
        for (int b = 0; b < m; ++b) {
            VectorXc u;
            apply_ladder(space, *s1, annihilator(b, Spin::Down), w, &s2, &u);
            if (cols.size() == 0) cols.resize(u.size(), m * m);
            cols.col(a * m + b) = u;
        }
    }
    return detail::gram_transposed(cols);
}

// Same-spin block D[(j1,j2),(i1,i2)] = <a+_{i1 up} a+_{i2 up} a_{j2 up} a_{j1 up}>.
inline MatrixXc two_rdm_upup(const SectorSpace& space, const FockBasis& basis,
                             const VectorXc& psi) {
    const int m = space.m_sites();
    MatrixXc cols;
    const FockBasis* s1 = nullptr;
    const FockBasis* s2 = nullptr;
    for (int a = 0; a < m; ++a) {
        VectorXc w;
        apply_ladder(space, basis, annihilator(a, Spin::Up), psi, &s1, &w);
        for (int b = 0; b < m; ++b) {
            VectorXc u;
            apply_ladder(space, *s1, annihilator(b, Spin::Up), w, &s2, &u);
            if (cols.size() == 0) cols.resize(u.size(), m * m);
            cols.col(a * m + b) = u;
        }
    }
    return detail::gram_transposed(cols);
}

// Up-up-down block, composite index (j1*M + j2)*M + j3 with j1, j2 up sites
// and j3 the down site:
// T[(j1,j2,j3),(i1,i2,i3)] = <a+_{i1 up} a+_{i2 up} a+_{i3 dn} a_{j3 dn} a_{j2 up} a_{j1 up}>.
inline MatrixXc three_rdm_uud(const SectorSpace& space, const FockBasis& basis,
                              const VectorXc& psi) {
    const int m = space.m_sites();
    MatrixXc cols;
    const FockBasis* s1 = nullptr;
    const FockBasis* s2 = nullptr;
    const FockBasis* s3 = nullptr;
    for (int a = 0; a < m; ++a) {
        VectorXc w1;
        apply_ladder(space, basis, annihilator(a, Spin::Up), psi, &s1, &w1);
        for (int b = 0; b < m; ++b) {
            VectorXc w2;
            apply_ladder(space, *s1, annihilator(b, Spin::Up), w1, &s2, &w2);
            for (int c = 0; c < m; ++c) {
                VectorXc u;
                apply_ladder(space, *s2, annihilator(c, Spin::Down), w2, &s3, &u);
                if (cols.size() == 0) cols.resize(u.size(), m * m * m);
                cols.col((a * m + b) * m + c) = u;
            }
        }
    }
    return detail::gram_transposed(cols);
}

// Two-hole matrix from the closed form
//   Q[(j1,j2),(i1,i2)] = d_{j1 i1} d_{j2 i2} - d_{j1 i1} D1dn[j2,i2]
//                        - d_{j2 i2} D1up[j1,i1] + D12[(j1,j2),(i1,i2)].
inline MatrixXc two_hole_rdm(const MatrixXc& d12_updown, const OneRdm& d1,
                             HoleOrdering ordering = HoleOrdering::psd) {
    const int m = static_cast<int>(d1.up.rows());
    MatrixXc q = d12_updown;
    for (int j1 = 0; j1 < m; ++j1)
        for (int j2 = 0; j2 < m; ++j2)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i2 = 0; i2 < m; ++i2) {
                    Complex v = 0.0;
                    if (j1 == i1 && j2 == i2) v += 1.0;
                    if (j1 == i1) v -= d1.down(j2, i2);
                    if (j2 == i2) v -= d1.up(j1, i1);
                    q(j1 * m + j2, i1 * m + i2) += v;
                }
    if (ordering == HoleOrdering::literal) q = -q;
    return q;
}

// Dual route for the two-hole matrix: Gram construction from creation
// strings, Q[p,q] = <w_p, w_q> with w_{(m1,m2)} = a+_{m2 dn} a+_{m1 up} psi.
inline MatrixXc two_hole_rdm_direct(const SectorSpace& space, const FockBasis& basis,
                                    const VectorXc& psi) {
    const int m = space.m_sites();
    MatrixXc cols;
    const FockBasis* s1 = nullptr;
    const FockBasis* s2 = nullptr;
    for (int a = 0; a < m; ++a) {
        VectorXc w;
        apply_ladder(space, basis, creator(a, Spin::Up), psi, &s1, &w);
        for (int b = 0; b < m; ++b) {
            VectorXc u;
            apply_ladder(space, *s1, creator(b, Spin::Down), w, &s2, &u);
            if (cols.size() == 0) cols.resize(u.size(), m * m);
            cols.col(a * m + b) = u;
        }
    }
    return cols.adjoint() * cols;
}

// 1RDM recovered from the mixed-spin block by contraction over the partner
// spin; valid on fixed-particle-number states.
inline OneRdm one_rdm_from_two(const MatrixXc& d12_updown, int m_sites, int n_up,
                               int n_down) {
    OneRdm out;
    out.up = MatrixXc::Zero(m_sites, m_sites);
    out.down = MatrixXc::Zero(m_sites, m_sites);
    for (int j = 0; j < m_sites; ++j)
        for (int i = 0; i < m_sites; ++i) {
            Complex su = 0.0, sd = 0.0;
            for (int t = 0; t < m_sites; ++t) {
                su += d12_updown(j * m_sites + t, i * m_sites + t);
                sd += d12_updown(t * m_sites + j, t * m_sites + i);
            }
            out.up(j, i) = su / double(n_down);
            out.down(j, i) = sd / double(n_up);
        }
    return out;
}

struct SiteOccupations {
    VectorXr up;       // n_{i,up}
    VectorXr down;     // n_{i,down}
    VectorXr total;    // n_i
    VectorXr doublon;  // d_i
};

inline SiteOccupations occupations(const MatrixXc& d12_updown, const OneRdm& d1) {
    const int m = static_cast<int>(d1.up.rows());
    SiteOccupations occ;
    occ.up.resize(m);
    occ.down.resize(m);
    occ.total.resize(m);
    occ.doublon.resize(m);
    for (int i = 0; i < m; ++i) {
        occ.up[i] = d1.up(i, i).real();
        occ.down[i] = d1.down(i, i).real();
        occ.total[i] = occ.up[i] + occ.down[i];
        occ.doublon[i] = d12_updown(i * m + i, i * m + i).real();
    }
    return occ;
}

}  // namespace hubnode
