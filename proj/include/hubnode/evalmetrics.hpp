#pragma once

// Scores predicted packed trajectories against exact ones: pooled Pearson
// over the packed representation, time-integrated relative deviations of
// site observables, and divergence-time detection.

#include <optional>

#include "hubnode/diagnostics.hpp"
#include "hubnode/node/loss.hpp"

namespace hubnode {

// Sample Pearson over all (time x feature) pairs of two aligned series.
inline PearsonResult prediction_pearson(const Eigen::Ref<const RowMatrixXr>& pred,
                                        const Eigen::Ref<const RowMatrixXr>& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw ParameterError("prediction and target shapes differ");
    const double n = double(pred.size());
    if (n < 2) throw ParameterError("pearson needs at least two samples");
    const double fbar = pred.mean();
    const double gbar = target.mean();
    const double cov = ((pred.array() - fbar) * (target.array() - gbar)).sum() / n;
    const double varf = (pred.array() - fbar).square().sum() / n;
    const double varg = (target.array() - gbar).square().sum() / n;
    PearsonResult r;
    const double scale = std::max({std::abs(fbar), std::abs(gbar), 1.0});
    if (varf <= 1e-28 * scale * scale || varg <= 1e-28 * scale * scale) return r;
    r.value = cov / std::sqrt(varf * varg);
    r.valid = true;
    return r;
}

// Integral |target - pred| dt / integral target dt over the full sample range.
inline double occupation_deviation(const std::vector<double>& times,
                                   const std::vector<double>& target,
                                   const std::vector<double>& pred) {
    if (times.size() != target.size() || times.size() != pred.size())
        throw ParameterError("deviation series lengths differ");
    const double h = detail::grid_step(times);
    std::vector<double> absdiff(times.size()), base(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        absdiff[k] = std::abs(target[k] - pred[k]);
        base[k] = target[k];
    }
    const double denom = trapezoid(base, h);
    if (std::abs(denom) < 1e-300) return std::numeric_limits<double>::quiet_NaN();
    return trapezoid(absdiff, h) / denom;
}

// First prediction time at which any normalized component leaves the guard
// band, or the integration-failure time; nullopt when stable throughout.
inline std::optional<double> divergence_time(const std::vector<double>& times,
                                             const Eigen::Ref<const RowMatrixXr>& normalized,
                                             double t0, double guard = 10.0,
                                             bool integration_failed = false,
                                             double fail_time = 0.0) {
    for (Eigen::Index k = 0; k < normalized.rows(); ++k) {
        if (normalized.row(k).cwiseAbs().maxCoeff() > guard)
            return times[static_cast<std::size_t>(k)] - t0;
    }
    if (integration_failed) return fail_time - t0;
    return std::nullopt;
}

// Site observables from one physical packed state.
inline void observables_from_packed(const Eigen::Ref<const VectorXr>& packed_phys,
                                    const node::SectorGeometry& geom, VectorXr* n_out,
                                    VectorXr* d_out) {
    const MatrixXc a = unpack_hermitian(packed_phys);
    const OneRdm d1 = one_rdm_from_two(a, geom.m_sites, geom.n_up, geom.n_down);
    const SiteOccupations occ = occupations(a, d1);
    if (n_out) *n_out = occ.total;
    if (d_out) *d_out = occ.doublon;
}

struct HorizonMetrics {
    double horizon = 0.0;             // prediction length, units 1/J
    PearsonResult pearson;            // pooled packed Pearson (normalized space)
    double delta_n1 = std::numeric_limits<double>::quiet_NaN();
    double delta_d1 = std::numeric_limits<double>::quiet_NaN();
    bool covered = false;             // prediction reached the full horizon
};

struct PredictionReport {
    double interaction = 0.0;
    double trap = 0.0;
    double t0 = 40.0;
    std::vector<HorizonMetrics> horizons;
    std::optional<double> divergence_tpred;
};

// Per-step curves over the prediction length for one variant: running pooled
// Pearson plus instantaneous loss terms.
struct PredictionCurveRow {
    double t_pred = 0.0;
    double pearson = std::numeric_limits<double>::quiet_NaN();
    double mse = 0.0;
    double psd_d = 0.0;
    double psd_q = 0.0;
    double tr_d = 0.0;
    double tr_q = 0.0;
};

inline std::vector<PredictionCurveRow> prediction_curves(
    const std::vector<double>& times, const Eigen::Ref<const RowMatrixXr>& pred_norm,
    const Eigen::Ref<const RowMatrixXr>& target_norm, const Normalizer& nz,
    const node::SectorGeometry& geom, double t0, int stride = 25) {
    std::vector<PredictionCurveRow> rows;
    const Eigen::Index n = pred_norm.rows();
    for (Eigen::Index k = 1; k < n; k += stride) {
        PredictionCurveRow row;
        row.t_pred = times[static_cast<std::size_t>(k)] - t0;
        row.pearson =
            prediction_pearson(pred_norm.topRows(k + 1), target_norm.topRows(k + 1)).value;
        const VectorXr diff = (pred_norm.row(k) - target_norm.row(k)).transpose();
        row.mse = diff.squaredNorm();
        const VectorXr phys = nz.invert(pred_norm.row(k).transpose());
        const node::ConstraintBreakdown c = node::constraint_terms(phys, geom, {});
        row.psd_d = c.psd_d;
        row.psd_q = c.psd_q;
        row.tr_d = c.tr_d;
        row.tr_q = c.tr_q;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hubnode
