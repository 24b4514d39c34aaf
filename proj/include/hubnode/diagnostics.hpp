#pragma once

// Regime indicators over the U-V plane: time-averaged buildup of the
// three-particle kernel norm, correlation-energy ratio, Pearson
// cross-correlation of cumulant norm series, and a finite-difference residual
// of the two-particle equation of motion used as a trajectory validator.

#include <cmath>
#include <limits>

#include "hubnode/cumulants.hpp"
#include "hubnode/model.hpp"

namespace hubnode {

namespace detail {

inline double grid_step(const std::vector<double>& times) {
    if (times.size() < 2) throw ParameterError("series needs at least two samples");
    return times[1] - times[0];
}

inline int grid_index(const std::vector<double>& times, double t) {
    const double h = grid_step(times);
    const int k = static_cast<int>(std::llround((t - times.front()) / h));
    if (k < 0 || k >= static_cast<int>(times.size()) ||
        std::abs(times.front() + k * h - t) > 0.5 * h)
        throw ParameterError("requested time is not on the series grid");
    return k;
}

}  // namespace detail

// (1/T) integral_0^T (f(t) - f(0)) dt by composite trapezoid.
inline double correlation_buildup(const std::vector<double>& times,
                                  const std::vector<double>& kernel_norms,
                                  double horizon) {
    if (times.size() != kernel_norms.size())
        throw ParameterError("times and series lengths differ");
    const int k_end = detail::grid_index(times, times.front() + horizon);
    const double h = detail::grid_step(times);
    std::vector<double> f(k_end + 1);
    for (int k = 0; k <= k_end; ++k) f[k] = kernel_norms[k] - kernel_norms[0];
    return trapezoid(f, h) / horizon;
}

// U * sum_j Delta[(j,j),(j,j)], the on-site reduction of Tr W Delta.
inline double correlation_energy(const MatrixXc& delta12_updown, double interaction,
                                 int m_sites) {
    Complex acc = 0.0;
    for (int j = 0; j < m_sites; ++j)
        acc += delta12_updown(j * m_sites + j, j * m_sites + j);
    if (std::abs(acc.imag()) > 1e-10)
        throw NumericalError("correlation energy has a non-real part");
    return interaction * acc.real();
}

// Same quantity through the generic two-body route Tr(W12 Delta12) with the
// on-site interaction matrix assembled explicitly.
inline double correlation_energy_generic(const MatrixXc& delta12_updown,
                                         double interaction, int m_sites) {
    MatrixXc w = MatrixXc::Zero(m_sites * m_sites, m_sites * m_sites);
    for (int j = 0; j < m_sites; ++j)
        w(j * m_sites + j, j * m_sites + j) = interaction;
    return (w * delta12_updown).trace().real();
}

// Initial potential energy sum_{i,sigma} V_i n_{i,sigma} of the quenched state.
inline double e_pot0(const OneRdm& d1, const ModelParams& params) {
    double acc = 0.0;
    for (int i = 0; i < params.m_sites; ++i)
        acc += trap_profile(params, i + 1) * (d1.up(i, i).real() + d1.down(i, i).real());
    return acc;
}

struct PearsonResult {
    double value = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;  // false when either series has (numerically) zero variance
};

// Normalized covariance of two series over [t0, t_end], trapezoidal integrals.
inline PearsonResult pearson(const std::vector<double>& times,
                             const std::vector<double>& f, const std::vector<double>& g,
                             double t0, double t_end) {
    if (times.size() != f.size() || times.size() != g.size())
        throw ParameterError("times and series lengths differ");
    const int k0 = detail::grid_index(times, t0);
    const int k1 = detail::grid_index(times, t_end);
    if (k1 - k0 < 2) throw ParameterError("pearson window too short");
    const double h = detail::grid_step(times);
    const double span = t_end - t0;
    const int n = k1 - k0 + 1;

    std::vector<double> buf(n);
    auto integral = [&](auto&& fn) {
        for (int k = 0; k < n; ++k) buf[k] = fn(k0 + k);
        return trapezoid(buf, h);
    };

    const double fbar = integral([&](int k) { return f[k]; }) / span;
    const double gbar = integral([&](int k) { return g[k]; }) / span;
    const double cov =
        integral([&](int k) { return (f[k] - fbar) * (g[k] - gbar); }) / span;
    const double varf =
        integral([&](int k) { return (f[k] - fbar) * (f[k] - fbar); }) / span;
    const double varg =
        integral([&](int k) { return (g[k] - gbar) * (g[k] - gbar); }) / span;

    PearsonResult r;
    const double scale = std::max({std::abs(fbar), std::abs(gbar), 1.0});
    if (varf <= 1e-28 * scale * scale || varg <= 1e-28 * scale * scale) return r;
    r.value = cov / (std::sqrt(varf) * std::sqrt(varg));
    r.valid = true;
    return r;
}

struct RegimeThresholds {
    double buildup = 0.65;
    double ratio = -0.1;
};

struct RegimeIndicators {
    double buildup = 0.0;
    double e_corr_avg = 0.0;
    double e_pot0 = 0.0;
    double ratio = 0.0;
    PearsonResult pearson_uu;
    PearsonResult pearson_ud;
    bool strong_buildup = false;  // buildup > threshold
    bool strong_ratio = false;    // ratio > threshold
};

// The cumulant norm series and the correlation-energy series may live on
// different uniform grids (the energy series is cheap and usually denser).
inline RegimeIndicators regime_indicators(const CumulantSeries& series,
                                          const std::vector<double>& e_corr_times,
                                          const std::vector<double>& e_corr_series,
                                          double initial_potential_energy,
                                          double diag_horizon, double pearson_t0,
                                          const RegimeThresholds& thr = {}) {
    RegimeIndicators ind;
    const std::size_t n = series.times.size();
    std::vector<double> nk(n), nuu(n), nud(n);
    for (std::size_t k = 0; k < n; ++k) {
        nk[k] = series.norms[k].d123_kernel;
        nuu[k] = series.norms[k].d12_upup;
        nud[k] = series.norms[k].d12_updown;
    }
    ind.buildup = correlation_buildup(series.times, nk, diag_horizon);
    const int k_end =
        detail::grid_index(e_corr_times, e_corr_times.front() + diag_horizon);
    ind.e_corr_avg =
        trapezoid(std::span(e_corr_series.data(), k_end + 1), detail::grid_step(e_corr_times)) /
        diag_horizon;
    ind.e_pot0 = initial_potential_energy;
    ind.ratio = initial_potential_energy != 0.0
                    ? ind.e_corr_avg / initial_potential_energy
                    : std::numeric_limits<double>::quiet_NaN();
    ind.pearson_uu = pearson(series.times, nuu, nk, pearson_t0,
                             series.times.front() + diag_horizon);
    ind.pearson_ud = pearson(series.times, nud, nk, pearson_t0,
                             series.times.front() + diag_horizon);
    ind.strong_buildup = ind.buildup > thr.buildup;
    ind.strong_ratio = ind.ratio > thr.ratio;
    return ind;
}

// Finite-difference residual of the two-particle equation of motion at one
// interior snapshot:
//   || i (D12(t+dt) - D12(t-dt)) / (2 dt) - [h1+h2+W12, D12(t)]
//      - Tr_3 [W13+W23, D123(t)] ||_F
// assembled in the mixed-spin site basis. The post-quench one-body term is
// hopping only; the collision term contracts the up-up-down block, using the
// spin-flip symmetry of the half-filled singlet state for the block where the
// traced particle is a down spin.
inline double bbgky_residual(const MatrixXc& d12_prev, const MatrixXc& d12_at_t,
                             const MatrixXc& d12_next, const MatrixXc& d123_uud,
                             const ModelParams& params, double dt) {
    const int m = params.m_sites;
    const int mm = m * m;
    if (d12_prev.rows() != mm || d12_next.rows() != mm || d12_at_t.rows() != mm)
        throw ParameterError("mixed-spin block has wrong dimension");

    MatrixXr h = MatrixXr::Zero(m, m);
    for (int a = 0; a + 1 < m; ++a) {
        h(a, a + 1) = -params.hopping;
        h(a + 1, a) = -params.hopping;
    }
    MatrixXc two_body = MatrixXc::Zero(mm, mm);
    for (int j1 = 0; j1 < m; ++j1)
        for (int j2 = 0; j2 < m; ++j2)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i2 = 0; i2 < m; ++i2) {
                    Complex v = 0.0;
                    if (j2 == i2) v += h(j1, i1);
                    if (j1 == i1) v += h(j2, i2);
                    if (j1 == i1 && j2 == i2 && j1 == j2) v += params.interaction;
                    two_body(j1 * m + j2, i1 * m + i2) = v;
                }

    const auto& t3 = d123_uud;
    MatrixXc coll = MatrixXc::Zero(mm, mm);
    const double u = params.interaction;
    for (int j1 = 0; j1 < m; ++j1)
        for (int j2 = 0; j2 < m; ++j2)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i2 = 0; i2 < m; ++i2) {
                    // Traced particle is a down spin (interacts with the up member).
                    Complex v = t3((j2 * m + j1) * m + j1, (i2 * m + j1) * m + i1) -
                                t3((j2 * m + i1) * m + j1, (i2 * m + i1) * m + i1);
                    // Traced particle is an up spin (interacts with the down member).
                    v += t3((j1 * m + j2) * m + j2, (i1 * m + j2) * m + i2) -
                         t3((j1 * m + i2) * m + j2, (i1 * m + i2) * m + i2);
                    coll(j1 * m + j2, i1 * m + i2) = u * v;
                }

    const MatrixXc lhs = Complex(0.0, 1.0) * (d12_next - d12_prev) / (2.0 * dt);
    const MatrixXc rhs = two_body * d12_at_t - d12_at_t * two_body + coll;
    return (lhs - rhs).norm();
}

}  // namespace hubnode
