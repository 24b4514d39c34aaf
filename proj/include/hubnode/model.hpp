#pragma once

// Fermi-Hubbard chain Hamiltonian over a FockBasis sector:
//   H = -J sum_<i,j>,s a+_is a_js + U sum_i n_up,i n_down,i
//       [+ trap: sum_i,s V_i n_is]
// Open ends (no hop past the chain boundary), nearest neighbours both
// directions. All matrix elements are real.

#include <algorithm>
#include <cmath>

#include "hubnode/hilbert.hpp"

namespace hubnode {

struct ModelParams {
    double hopping = 1.0;  // J, the unit of energy; 1/J is the unit of time
    double interaction = 0.0;  // U in units of J
    double trap_strength = 0.0;  // V in units of J
    int m_sites = 6;
};

// Pre-quench on-site energy (V^2/2)(i - (M_s+1)/2)^2 at 1-based site i.
inline double trap_profile(const ModelParams& p, int site_1based) {
    if (site_1based < 1 || site_1based > p.m_sites)
        throw ParameterError("trap site index out of range");
    const double x = site_1based - 0.5 * (p.m_sites + 1);
    return 0.5 * p.trap_strength * p.trap_strength * x * x;
}

// Real symmetric sparse matrix in CSR layout with deterministic (row, col)
// iteration order.
class SparseHamiltonian {
public:
    SparseHamiltonian(int dim, std::vector<std::tuple<int, int, double>> triplets,
                      bool trapped)
        : dim_(dim), trapped_(trapped) {
        std::sort(triplets.begin(), triplets.end());
        row_ptr_.assign(dim + 1, 0);
        int last_row = -1, last_col = -1;
        for (const auto& [r, c, v] : triplets) {
            if (r == last_row && c == last_col) {
                vals_.back() += v;
                continue;
            }
            cols_.push_back(c);
            vals_.push_back(v);
            ++row_ptr_[r + 1];
            last_row = r;
            last_col = c;
        }
        for (int r = 0; r < dim; ++r) row_ptr_[r + 1] += row_ptr_[r];
    }

    int dim() const { return dim_; }
    bool trapped() const { return trapped_; }

    VectorXc apply(const VectorXc& x) const {
        VectorXc y = VectorXc::Zero(dim_);
        for (int r = 0; r < dim_; ++r)
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                y[r] += vals_[k] * x[cols_[k]];
        return y;
    }

    MatrixXr dense() const {
        MatrixXr m = MatrixXr::Zero(dim_, dim_);
        for (int r = 0; r < dim_; ++r)
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                m(r, cols_[k]) += vals_[k];
        return m;
    }

private:
    int dim_;
    bool trapped_;
    std::vector<int> row_ptr_;
    std::vector<int> cols_;
    std::vector<double> vals_;
};

// Assembles H by walking every basis config. Hopping terms go through the
// ladder-operator machinery so sector conservation and signs are structural.
inline SparseHamiltonian build_hamiltonian(const SectorSpace& space,
                                           const FockBasis& basis,
                                           const ModelParams& p, bool trapped) {
    if (basis.m_sites() != p.m_sites)
        throw ParameterError("basis and params disagree on site count");
    std::vector<std::tuple<int, int, double>> trip;
    trip.reserve(basis.dim() * (4 * p.m_sites));

    for (int i = 0; i < basis.dim(); ++i) {
        const FockConfig& c = basis.config(i);
        double diag = p.interaction * std::popcount(c.up_bits & c.down_bits);
        if (trapped) {
            for (int s = 0; s < p.m_sites; ++s) {
                const std::uint32_t m = 1u << s;
                const int occ = ((c.up_bits & m) ? 1 : 0) + ((c.down_bits & m) ? 1 : 0);
                if (occ) diag += occ * trap_profile(p, s + 1);
            }
        }
        if (diag != 0.0) trip.emplace_back(i, i, diag);
    }

    VectorXc unit;
    for (int i = 0; i < basis.dim(); ++i) {
        unit = VectorXc::Zero(basis.dim());
        unit[i] = 1.0;
        for (Spin s : {Spin::Up, Spin::Down}) {
            for (int a = 0; a + 1 < p.m_sites; ++a) {
                for (auto [from, to] : {std::pair{a, a + 1}, std::pair{a + 1, a}}) {
                    VectorXc v = apply_pair(space, basis,
                                            {creator(to, s), annihilator(from, s)}, unit);
                    for (int r = 0; r < basis.dim(); ++r) {
                        if (v[r] != Complex(0.0, 0.0))
                            trip.emplace_back(r, i, -p.hopping * v[r].real());
                    }
                }
            }
        }
    }
    return SparseHamiltonian(basis.dim(), std::move(trip), trapped);
}

// Real part of <psi|H|psi> for a normalized state.
inline double expectation(const SparseHamiltonian& h, const VectorXc& psi,
                          double norm_tol = 1e-8) {
    const double n = psi.norm();
    if (std::abs(n - 1.0) > norm_tol)
        throw StateError("expectation requires a normalized state");
    const Complex e = psi.dot(h.apply(psi));
    if (std::abs(e.imag()) > 1e-12)
        throw NumericalError("energy expectation has a non-real part");
    return e.real();
}

}  // namespace hubnode
