#pragma once

// Training losses on packed, normalized states: integrated trajectory
// discrepancy plus optional physics penalties (trace conservation and
// negative-eigenvalue penalties for the two-particle and two-hole matrices).
// Constraint terms and their gradients are evaluated in double precision in
// the physical (denormalized, unpacked) space and chained back through the
// affine normalizer.

#include "hubnode/dataset.hpp"
#include "hubnode/node/mlp.hpp"
#include "hubnode/rdm.hpp"

namespace hubnode::node {

enum class ConstraintTarget { TwoRdm, TwoHole };

struct SectorGeometry {
    int m_sites = 6;
    int n_up = 3;
    int n_down = 3;

    double pair_trace_target() const { return double(n_up) * double(n_down); }
    double hole_trace_target() const {
        return double(m_sites - n_up) * double(m_sites - n_down);
    }
};

struct ConstraintWeights {
    double tr_d = 0.0;
    double tr_q = 0.0;
    double psd_d = 0.0;
    double psd_q = 0.0;

    bool any() const { return tr_d > 0 || tr_q > 0 || psd_d > 0 || psd_q > 0; }
};

namespace detail {

// Adjoint of the mixed-block -> two-hole map Q(A) = dd - d (x) D1dn(A)
// - D1up(A) (x) d + A with the 1RDMs obtained by contraction of A.
inline MatrixXc hole_map_adjoint(const MatrixXc& gq, const SectorGeometry& geom) {
    const int m = geom.m_sites;
    MatrixXc g = gq;
    for (int b = 0; b < m; ++b)
        for (int d = 0; d < m; ++d) {
            Complex t1 = 0.0, t2 = 0.0;
            for (int k = 0; k < m; ++k) {
                t1 += gq(k * m + b, k * m + d);
                t2 += gq(b * m + k, d * m + k);
            }
            for (int k = 0; k < m; ++k) {
                g(k * m + b, k * m + d) -= t1 / double(geom.n_up);
                g(b * m + k, d * m + k) -= t2 / double(geom.n_down);
            }
        }
    return g;
}

// Negative-eigenvalue penalty sum_j relu(-lambda_j)^2 of a Hermitian matrix
// and its matrix-space gradient sum_{lambda_j < -band} 2 lambda_j v_j v_j+.
inline double psd_penalty(const MatrixXc& h, MatrixXc* grad, double band = 1e-12) {
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed in psd penalty");
    double value = 0.0;
    if (grad) grad->setZero(h.rows(), h.cols());
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        const double lam = es.eigenvalues()[j];
        if (lam < -band) {
            value += lam * lam;
            if (grad) {
                const VectorXc v = es.eigenvectors().col(j);
                grad->noalias() += (2.0 * lam) * (v * v.adjoint());
            }
        }
    }
    return value;
}

// Adjoint of unpack: maps a Hermitian matrix-space gradient to the packed
// real parametrization.
inline VectorXr pack_adjoint(const MatrixXc& g) {
    const int n = static_cast<int>(g.rows());
    VectorXr out(n * n);
    for (int d = 0; d < n; ++d) out[d] = g(d, d).real();
    int k = n;
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) {
            out[k++] = 2.0 * g(p, q).real();
            out[k++] = 2.0 * g(p, q).imag();
        }
    return out;
}

}  // namespace detail

struct ConstraintBreakdown {
    double tr_d = 0.0;
    double tr_q = 0.0;
    double psd_d = 0.0;
    double psd_q = 0.0;

    double weighted(const ConstraintWeights& w) const {
        return w.tr_d * tr_d + w.tr_q * tr_q + w.psd_d * psd_d + w.psd_q * psd_q;
    }
};

// Constraint penalties of one physical packed state; when grad_out is given,
// the *weighted* gradient with respect to the packed physical values is
// accumulated there.
inline ConstraintBreakdown constraint_terms(const Eigen::Ref<const VectorXr>& packed_phys,
                                            const SectorGeometry& geom,
                                            const ConstraintWeights& w,
                                            VectorXr* grad_out = nullptr) {
    ConstraintBreakdown out;
    const MatrixXc a = unpack_hermitian(packed_phys);
    MatrixXc grad_a;
    const bool want_grad = grad_out != nullptr;
    if (want_grad) grad_a = MatrixXc::Zero(a.rows(), a.cols());

    const bool need_hole = w.tr_q > 0 || w.psd_q > 0 || !want_grad;
    MatrixXc q;
    if (need_hole) {
        const OneRdm d1 = one_rdm_from_two(a, geom.m_sites, geom.n_up, geom.n_down);
        q = two_hole_rdm(a, d1);
    }

    {
        const double tr = a.trace().real() - geom.pair_trace_target();
        out.tr_d = tr * tr;
        if (want_grad && w.tr_d > 0)
            grad_a += (w.tr_d * 2.0 * tr) * MatrixXc::Identity(a.rows(), a.cols());
    }
    if (need_hole) {
        const double tr = q.trace().real() - geom.hole_trace_target();
        out.tr_q = tr * tr;
        if (want_grad && w.tr_q > 0) {
            const MatrixXc gq =
                (w.tr_q * 2.0 * tr) * MatrixXc::Identity(q.rows(), q.cols());
            grad_a += detail::hole_map_adjoint(gq, geom);
        }
    }
    {
        MatrixXc g;
        out.psd_d = detail::psd_penalty(a, (want_grad && w.psd_d > 0) ? &g : nullptr);
        if (want_grad && w.psd_d > 0) grad_a += w.psd_d * g;
    }
    if (need_hole) {
        MatrixXc g;
        out.psd_q = detail::psd_penalty(q, (want_grad && w.psd_q > 0) ? &g : nullptr);
        if (want_grad && w.psd_q > 0) grad_a += detail::hole_map_adjoint(w.psd_q * g, geom);
    }
    if (want_grad) *grad_out = detail::pack_adjoint(grad_a);
    return out;
}

// Mean negative-eigenvalue penalty of a physical packed series (value only).
inline double loss_psd(const RowMatrixXr& packed_phys, const SectorGeometry& geom,
                       ConstraintTarget which) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < packed_phys.rows(); ++r) {
        MatrixXc mat = unpack_hermitian(packed_phys.row(r).transpose());
        if (which == ConstraintTarget::TwoHole) {
            const OneRdm d1 = one_rdm_from_two(mat, geom.m_sites, geom.n_up, geom.n_down);
            mat = two_hole_rdm(mat, d1);
        }
        acc += detail::psd_penalty(mat, nullptr);
    }
    return acc / double(packed_phys.rows());
}

// Mean squared trace deviation of a physical packed series (value only).
inline double loss_tr(const RowMatrixXr& packed_phys, const SectorGeometry& geom,
                      ConstraintTarget which) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < packed_phys.rows(); ++r) {
        MatrixXc mat = unpack_hermitian(packed_phys.row(r).transpose());
        double target = geom.pair_trace_target();
        if (which == ConstraintTarget::TwoHole) {
            const OneRdm d1 = one_rdm_from_two(mat, geom.m_sites, geom.n_up, geom.n_down);
            mat = two_hole_rdm(mat, d1);
            target = geom.hole_trace_target();
        }
        const double tr = mat.trace().real() - target;
        acc += tr * tr;
    }
    return acc / double(packed_phys.rows());
}

template <typename S>
struct WindowLoss {
    double mse = 0.0;
    ConstraintBreakdown constraints;
    double total = 0.0;
    std::vector<MatX<S>> state_grads;  // d(total)/d(state_k), one per predicted step
};

// Loss of a batched prediction window. pred[k] and target[k] hold the states
// at step k+1 (columns are batch members) in normalized packed coordinates.
// MSE follows the integrated-discrepancy form: mean over steps and batch of
// the squared packed-vector distance; constraint terms are means over steps
// and batch of the per-state penalties.
template <typename S>
WindowLoss<S> window_loss(const Mlp<S>&, const std::vector<MatX<S>>& pred,
                          const std::vector<MatX<S>>& target, const Normalizer& nz,
                          const SectorGeometry& geom, const ConstraintWeights& w) {
    if (pred.size() != target.size() || pred.empty())
        throw ParameterError("window loss needs matching, nonempty series");
    const int steps = static_cast<int>(pred.size());
    const int batch = static_cast<int>(pred.front().cols());
    const double denom = double(steps) * double(batch);

    WindowLoss<S> out;
    out.state_grads.resize(steps);
    const VectorXr scales = nz.scales();

    for (int k = 0; k < steps; ++k) {
        const MatX<S> diff = pred[k] - target[k];
        out.mse += double(diff.squaredNorm());
        out.state_grads[k] = (S(2.0) / S(denom)) * diff;

        if (w.any()) {
            for (int b = 0; b < batch; ++b) {
                const VectorXr xn = pred[k].col(b).template cast<double>();
                const VectorXr xp = nz.invert(xn);
                VectorXr g_phys;
                const ConstraintBreakdown c = constraint_terms(xp, geom, w, &g_phys);
                out.constraints.tr_d += c.tr_d;
                out.constraints.tr_q += c.tr_q;
                out.constraints.psd_d += c.psd_d;
                out.constraints.psd_q += c.psd_q;
                const VectorXr g_norm = g_phys.cwiseProduct(scales) / denom;
                out.state_grads[k].col(b) += g_norm.cast<S>();
            }
        }
    }
    out.mse /= denom;
    out.constraints.tr_d /= denom;
    out.constraints.tr_q /= denom;
    out.constraints.psd_d /= denom;
    out.constraints.psd_q /= denom;
    out.total = out.mse + out.constraints.weighted(w);
    return out;
}

}  // namespace hubnode::node
