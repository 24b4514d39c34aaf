#pragma once

// Gradient-based trajectory fitting: windows of contiguous steps are sampled
// from the training split, integrated with fixed-step RK4 (one step per data
// step), and differentiated in reverse through the unrolled solver
// (discretize-then-optimize). Checkpoint selection uses a full rollout over
// the validation split. Deterministic under a fixed seed in single-threaded
// mode.

#include <cmath>
#include <random>

#include "hubnode/node/loss.hpp"
#include "hubnode/node/ode.hpp"

namespace hubnode::node {

struct TrainConfig {
    int hidden = 512;
    int window = 40;   // steps integrated per training segment
    int batch = 16;    // windows per update
    int updates = 2000;
    double lr = 1e-4;
    double lr_min_frac = 0.1;  // cosine decay floor as a fraction of lr
    double grad_clip = 10.0;   // global-norm clip; <= 0 disables
    int val_every = 50;
    std::uint64_t seed = 1;
    ConstraintWeights weights;
    int threads = 1;  // >1 opts into parallel GEMM and relaxes bit-reproducibility
    double dt = 0.01;
    Activation activation = Activation::Tanh;
};

struct HistoryRow {
    int step = 0;
    double total = 0.0;
    double mse = 0.0;
    double psd_d = 0.0;
    double psd_q = 0.0;
    double tr_d = 0.0;
    double tr_q = 0.0;
    double val_mse = std::numeric_limits<double>::quiet_NaN();
};

template <typename S>
struct TrainResult {
    Mlp<S> best;   // parameters at the best validation MSE
    Mlp<S> last;   // parameters after the final update
    double best_val_mse = std::numeric_limits<double>::infinity();
    double final_train_loss = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
    std::vector<HistoryRow> history;
};

namespace detail {

template <typename S>
class Adam {
public:
    Adam(std::size_t n, double lr) : lr_(lr), m_(VectorXr::Zero(n)), v_(VectorXr::Zero(n)) {}

    void step(VecX<S>& params, const VecX<S>& grad, double lr_scale) {
        ++t_;
        const VectorXr g = grad.template cast<double>();
        m_ = beta1_ * m_ + (1.0 - beta1_) * g;
        v_ = beta2_ * v_ + (1.0 - beta2_) * g.cwiseProduct(g);
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        const VectorXr upd =
            (lr_ * lr_scale / bc1) *
            m_.cwiseQuotient((v_ / bc2).cwiseSqrt().array().matrix() +
                             VectorXr::Constant(m_.size(), eps_));
        params -= upd.cast<S>();
    }

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    VectorXr m_, v_;
};

// Rollout MSE over a contiguous normalized block: integrates from block row 0
// with fixed-step RK4 and scores against rows 1..end.
template <typename S>
double rollout_mse(const Mlp<S>& f, const RowMatrixXr& block, double dt) {
    const int steps = static_cast<int>(block.rows()) - 1;
    if (steps < 1) throw ParameterError("rollout block too short");
    MatX<S> x = block.row(0).transpose().template cast<S>();
    double acc = 0.0;
    for (int k = 0; k < steps; ++k) {
        x = rk4_step(f, x, static_cast<S>(dt));
        if (!x.allFinite()) return std::numeric_limits<double>::infinity();
        const VecX<S> target = block.row(k + 1).transpose().template cast<S>();
        acc += double((x.col(0) - target).squaredNorm());
    }
    return acc / double(steps);
}

}  // namespace detail

// train_norm / val_norm: contiguous normalized packed blocks (rows are time
// steps). The normalizer must be the one fitted on the training block.
template <typename S>
TrainResult<S> train(const RowMatrixXr& train_norm, const RowMatrixXr& val_norm,
                     const Normalizer& nz, const SectorGeometry& geom,
                     const TrainConfig& cfg) {
    if (cfg.window < 1 || cfg.batch < 1 || cfg.updates < 1)
        throw ParameterError("train config requires window, batch, updates >= 1");
    if (train_norm.rows() < cfg.window + 1)
        throw ParameterError("training block shorter than one window");

    Eigen::setNbThreads(cfg.threads);
    const int dim = static_cast<int>(train_norm.cols());
    Mlp<S> f = Mlp<S>::create({dim, cfg.hidden, cfg.hidden, dim}, cfg.seed, cfg.activation);

    TrainResult<S> result;
    result.best = f;
    detail::Adam<S> opt(f.num_params(), cfg.lr);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_int_distribution<int> start_dist(
        0, static_cast<int>(train_norm.rows()) - cfg.window - 1);

    const int S_steps = cfg.window;
    std::vector<MatX<S>> states(S_steps + 1), targets(S_steps);
    std::vector<Rk4StepCache<S>> caches(S_steps);

    for (int step = 1; step <= cfg.updates; ++step) {
        // Assemble batch.
        MatX<S> x0(dim, cfg.batch);
        for (int k = 0; k < S_steps; ++k) targets[k].resize(dim, cfg.batch);
        for (int b = 0; b < cfg.batch; ++b) {
            const int s0 = start_dist(rng);
            x0.col(b) = train_norm.row(s0).transpose().template cast<S>();
            for (int k = 0; k < S_steps; ++k)
                targets[k].col(b) = train_norm.row(s0 + k + 1).transpose().template cast<S>();
        }

        // Forward rollout.
        states[0] = x0;
        bool blew_up = false;
        for (int k = 0; k < S_steps; ++k) {
            try {
                states[k + 1] = rk4_step(f, states[k], static_cast<S>(cfg.dt), &caches[k]);
            } catch (const NumericalError&) {
                blew_up = true;
                break;
            }
            if (!states[k + 1].allFinite()) {
                blew_up = true;
                break;
            }
        }

        std::vector<MatX<S>> pred(states.begin() + 1, states.end());
        WindowLoss<S> loss;
        if (!blew_up) loss = window_loss(f, pred, targets, nz, geom, cfg.weights);
        if (blew_up || !std::isfinite(loss.total)) {
            result.diverged = true;
            break;  // keep the last good checkpoint
        }

        // Reverse sweep.
        MlpGrad<S> grad = MlpGrad<S>::zeros_like(f);
        MatX<S> g = loss.state_grads[S_steps - 1];
        for (int k = S_steps - 1; k >= 0; --k) {
            g = rk4_step_vjp(f, caches[k], static_cast<S>(cfg.dt), g, grad);
            if (k >= 1) g += loss.state_grads[k - 1];
        }

        VecX<S> flat_grad = grad.flatten();
        if (cfg.grad_clip > 0) {
            const double gn = double(flat_grad.norm());
            if (gn > cfg.grad_clip) flat_grad *= static_cast<S>(cfg.grad_clip / gn);
        }
        VecX<S> params = f.flatten();
        const double progress = double(step - 1) / double(std::max(1, cfg.updates - 1));
        const double lr_scale =
            cfg.lr_min_frac + (1.0 - cfg.lr_min_frac) * 0.5 * (1.0 + std::cos(M_PI * progress));
        opt.step(params, flat_grad, lr_scale);
        f.unflatten(params);

        HistoryRow row;
        row.step = step;
        row.total = loss.total;
        row.mse = loss.mse;
        row.psd_d = loss.constraints.psd_d;
        row.psd_q = loss.constraints.psd_q;
        row.tr_d = loss.constraints.tr_d;
        row.tr_q = loss.constraints.tr_q;
        result.final_train_loss = loss.total;

        if (step % cfg.val_every == 0 || step == cfg.updates) {
            row.val_mse = detail::rollout_mse(f, val_norm, cfg.dt);
            if (row.val_mse < result.best_val_mse) {
                result.best_val_mse = row.val_mse;
                result.best = f;
            }
        }
        result.history.push_back(row);
    }
    result.last = f;
    if (!std::isfinite(result.best_val_mse)) result.best = result.last;
    Eigen::setNbThreads(1);
    return result;
}

// One screening/final hyperparameter search: every candidate runs for
// screen_updates, the best validation MSE candidate is retrained with
// final_updates. Trial seeds derive from the candidate index so the search is
// reproducible.
template <typename S>
struct SearchResult {
    TrainResult<S> result;
    TrainConfig chosen;
    std::vector<std::pair<TrainConfig, double>> trials;  // config, screen val MSE
};

template <typename S>
SearchResult<S> hyper_search(const RowMatrixXr& train_norm, const RowMatrixXr& val_norm,
                             const Normalizer& nz, const SectorGeometry& geom,
                             std::vector<TrainConfig> candidates, int screen_updates,
                             int final_updates) {
    if (candidates.empty()) throw ParameterError("hyper search needs candidates");
    SearchResult<S> out;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        TrainConfig c = candidates[i];
        c.updates = screen_updates;
        c.seed = candidates[i].seed + i;
        double score = std::numeric_limits<double>::infinity();
        try {
            score = train<S>(train_norm, val_norm, nz, geom, c).best_val_mse;
        } catch (const ParameterError&) {
            // Candidate incompatible with this dataset (window too long).
        }
        out.trials.emplace_back(c, score);
        if (score < best) {
            best = score;
            best_idx = i;
        }
    }
    if (best_idx == candidates.size())
        throw NumericalError("every hyperparameter trial failed");
    TrainConfig final_cfg = candidates[best_idx];
    final_cfg.updates = final_updates;
    final_cfg.seed = candidates[best_idx].seed + best_idx;
    out.chosen = final_cfg;
    out.result = train<S>(train_norm, val_norm, nz, geom, final_cfg);
    return out;
}

// Default candidate grid around the base config (8 trials). Long windows are
// what make extended rollouts track, so the grid leans long; the batch scales
// inversely with the window to keep the per-update cost roughly constant.
inline std::vector<TrainConfig> default_candidates(const TrainConfig& base) {
    auto with = [&](double lr, int window) {
        TrainConfig c = base;
        c.lr = lr;
        c.window = window;
        c.batch = std::max(2, std::min(base.batch, 800 / window));
        return c;
    };
    std::vector<TrainConfig> out;
    for (double lr : {3e-4, 1e-3})
        for (int window : {50, 100, 200}) out.push_back(with(lr, window));
    out.push_back(with(3e-3, 100));
    out.push_back(with(1e-3, 400));
    return out;
}

}  // namespace hubnode::node
