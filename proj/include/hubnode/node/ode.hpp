#pragma once

// Integrators for the learned vector field: a fixed-step classical RK4 with
// cached evaluations for reverse-mode training, and an adaptive embedded
// Dormand-Prince 5(4) with dense output for inference.

#include "hubnode/node/mlp.hpp"

namespace hubnode::node {

enum class SolverMethod { AdaptiveRk45, FixedRk4 };

struct SolverConfig {
    SolverMethod method = SolverMethod::AdaptiveRk45;
    double rtol = 1e-6;
    double atol = 1e-8;
    long max_steps = 200000;
    double fixed_dt = 0.01;  // used by FixedRk4
};

struct IntegrationFailure : NumericalError {
    double t_reached;
    explicit IntegrationFailure(double t)
        : NumericalError("integration failed at t = " + std::to_string(t)),
          t_reached(t) {}
};

template <typename S>
struct IntegrationResult {
    std::vector<VecX<S>> states;  // states at the covered grid prefix
    bool failed = false;
    double t_reached = 0.0;  // meaningful when failed
};

// One classical RK4 step on a batch of states (columns).
template <typename S>
struct Rk4StepCache {
    MlpCache<S> c1, c2, c3, c4;
};

template <typename S>
MatX<S> rk4_step(const Mlp<S>& f, const MatX<S>& x, S h, Rk4StepCache<S>* cache = nullptr) {
    MlpCache<S> tmp1, tmp2, tmp3, tmp4;
    MlpCache<S>* p1 = cache ? &cache->c1 : &tmp1;
    MlpCache<S>* p2 = cache ? &cache->c2 : &tmp2;
    MlpCache<S>* p3 = cache ? &cache->c3 : &tmp3;
    MlpCache<S>* p4 = cache ? &cache->c4 : &tmp4;
    const MatX<S> k1 = mlp_forward(f, x, p1);
    const MatX<S> k2 = mlp_forward(f, MatX<S>(x + (h / S(2)) * k1), p2);
    const MatX<S> k3 = mlp_forward(f, MatX<S>(x + (h / S(2)) * k2), p3);
    const MatX<S> k4 = mlp_forward(f, MatX<S>(x + h * k3), p4);
    return x + (h / S(6)) * (k1 + S(2) * k2 + S(2) * k3 + k4);
}

// Reverse-mode through one RK4 step: returns dL/dx given dL/dx' and
// accumulates parameter gradients.
template <typename S>
MatX<S> rk4_step_vjp(const Mlp<S>& f, const Rk4StepCache<S>& cache, S h,
                     const MatX<S>& g_next, MlpGrad<S>& grad) {
    const S h6 = h / S(6);
    MatX<S> gk4 = h6 * g_next;
    const MatX<S> du4 = mlp_vjp(f, cache.c4, gk4, grad);
    MatX<S> gk3 = (S(2) * h6) * g_next + h * du4;
    const MatX<S> du3 = mlp_vjp(f, cache.c3, gk3, grad);
    MatX<S> gk2 = (S(2) * h6) * g_next + (h / S(2)) * du3;
    const MatX<S> du2 = mlp_vjp(f, cache.c2, gk2, grad);
    MatX<S> gk1 = h6 * g_next + (h / S(2)) * du2;
    const MatX<S> du1 = mlp_vjp(f, cache.c1, gk1, grad);
    return g_next + du1 + du2 + du3 + du4;
}

namespace detail {

// Dormand-Prince 5(4) with Hairer's 4th-order dense-output interpolant.
template <typename S>
class Dopri5 {
public:
    Dopri5(const Mlp<S>& f, const SolverConfig& cfg) : f_(f), cfg_(cfg) {}

    // Integrates from (t0, x0) and samples at ascending grid times (the first
    // grid entry must equal t0). On failure the covered prefix is kept.
    IntegrationResult<S> solve(const VecX<S>& x0, const std::vector<double>& grid) {
        IntegrationResult<S> result;
        auto& out = result.states;
        out.reserve(grid.size());
        out.push_back(x0);
        if (grid.size() == 1) return result;

        double t = grid.front();
        const double t_final = grid.back();
        VecX<S> y = x0;
        VecX<S> k1;
        try {
            k1 = mlp_forward(f_, MatX<S>(y)).col(0);
        } catch (const NumericalError&) {
            result.failed = true;
            result.t_reached = t;
            return result;
        }
        double h = initial_step(grid);
        std::size_t next = 1;
        long steps = 0;

        while (next < grid.size()) {
            if (++steps > cfg_.max_steps || h < 1e-14 * std::max(1.0, std::abs(t_final))) {
                result.failed = true;
                result.t_reached = t;
                return result;
            }
            h = std::min(h, t_final - t);

            VecX<S> k2, k3, k4, k5, k6, k7, y_new;
            const double err = attempt(y, k1, t, h, k2, k3, k4, k5, k6, k7, y_new);
            if (!std::isfinite(err)) {
                h *= 0.25;
                continue;
            }
            if (err > 1.0) {
                h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
                continue;
            }

            // Accepted: serve all grid points inside (t, t+h].
            const double serve_tol = 1e-9 * std::max(1.0, std::abs(t + h));
            while (next < grid.size() && grid[next] <= t + h + serve_tol) {
                const double theta = std::clamp((grid[next] - t) / h, 0.0, 1.0);
                out.push_back(dense(y, y_new, k1, k3, k4, k5, k6, k7, h, theta));
                ++next;
            }
            t += h;
            y = y_new;
            k1 = k7;  // FSAL
            h *= std::min(10.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        }
        return result;
    }

private:
    double initial_step(const std::vector<double>& grid) const {
        return std::min(0.01, (grid.back() - grid.front()) / 100.0);
    }

    double attempt(const VecX<S>& y, const VecX<S>& k1, double t, double h, VecX<S>& k2,
                   VecX<S>& k3, VecX<S>& k4, VecX<S>& k5, VecX<S>& k6, VecX<S>& k7,
                   VecX<S>& y_new) try {
        (void)t;
        const S hs = static_cast<S>(h);
        auto f = [&](const VecX<S>& v) { return mlp_forward(f_, MatX<S>(v)).col(0); };
        k2 = f(y + hs * S(1.0 / 5) * k1);
        k3 = f(y + hs * (S(3.0 / 40) * k1 + S(9.0 / 40) * k2));
        k4 = f(y + hs * (S(44.0 / 45) * k1 - S(56.0 / 15) * k2 + S(32.0 / 9) * k3));
        k5 = f(y + hs * (S(19372.0 / 6561) * k1 - S(25360.0 / 2187) * k2 +
                         S(64448.0 / 6561) * k3 - S(212.0 / 729) * k4));
        k6 = f(y + hs * (S(9017.0 / 3168) * k1 - S(355.0 / 33) * k2 +
                         S(46732.0 / 5247) * k3 + S(49.0 / 176) * k4 -
                         S(5103.0 / 18656) * k5));
        y_new = y + hs * (S(35.0 / 384) * k1 + S(500.0 / 1113) * k3 + S(125.0 / 192) * k4 -
                          S(2187.0 / 6784) * k5 + S(11.0 / 84) * k6);
        if (!y_new.allFinite()) return std::numeric_limits<double>::infinity();
        k7 = f(y_new);

        const VecX<S> err_vec =
            hs * (S(71.0 / 57600) * k1 - S(71.0 / 16695) * k3 + S(71.0 / 1920) * k4 -
                  S(17253.0 / 339200) * k5 + S(22.0 / 525) * k6 - S(1.0 / 40) * k7);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc =
                cfg_.atol + cfg_.rtol * std::max(std::abs(double(y[i])), std::abs(double(y_new[i])));
            const double q = double(err_vec[i]) / sc;
            acc += q * q;
        }
        return std::sqrt(acc / double(y.size()));
    } catch (const NumericalError&) {
        // Field blew up inside the trial step: reject and shrink.
        return std::numeric_limits<double>::infinity();
    }

    VecX<S> dense(const VecX<S>& y, const VecX<S>& y_new, const VecX<S>& k1,
                  const VecX<S>& k3, const VecX<S>& k4, const VecX<S>& k5,
                  const VecX<S>& k6, const VecX<S>& k7, double h, double theta) const {
        const S hs = static_cast<S>(h);
        const VecX<S> ydiff = y_new - y;
        const VecX<S> bspl = hs * k1 - ydiff;
        const VecX<S> r4 = ydiff - hs * k7 - bspl;
        const VecX<S> r5 =
            hs * (S(-12715105075.0 / 11282082432.0) * k1 +
                  S(87487479700.0 / 32700410799.0) * k3 +
                  S(-10690763975.0 / 1880347072.0) * k4 +
                  S(701980252875.0 / 199316789632.0) * k5 +
                  S(-1453857185.0 / 822651844.0) * k6 + S(69997945.0 / 29380423.0) * k7);
        const S th = static_cast<S>(theta);
        const S th1 = S(1) - th;
        return y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)));
    }

    const Mlp<S>& f_;
    SolverConfig cfg_;
};

}  // namespace detail

// Integrates the learned field from x0 (the state at grid.front()) and
// returns states at every covered grid time, keeping the prefix on failure.
// Identical inputs give bit-stable outputs; the adaptive path is sequential
// by construction.
template <typename S>
IntegrationResult<S> integrate_prefix(const Mlp<S>& f, const VecX<S>& x0,
                                      const std::vector<double>& grid,
                                      const SolverConfig& cfg) {
    if (grid.empty()) throw ParameterError("integration grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw ParameterError("integration grid must ascend");

    if (cfg.method == SolverMethod::AdaptiveRk45) {
        detail::Dopri5<S> solver(f, cfg);
        return solver.solve(x0, grid);
    }
    // Fixed-step RK4 marching exactly on the grid (grid must be uniform).
    IntegrationResult<S> result;
    result.states.reserve(grid.size());
    result.states.push_back(x0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const S h = static_cast<S>(grid[i] - grid[i - 1]);
        MatX<S> next;
        bool bad = false;
        try {
            next = rk4_step(f, MatX<S>(result.states.back()), h);
        } catch (const NumericalError&) {
            bad = true;
        }
        if (bad || !next.allFinite()) {
            result.failed = true;
            result.t_reached = grid[i - 1];
            return result;
        }
        result.states.push_back(next.col(0));
    }
    return result;
}

// Full-grid integration; fails loudly with the reached time.
template <typename S>
std::vector<VecX<S>> integrate(const Mlp<S>& f, const VecX<S>& x0,
                               const std::vector<double>& grid, const SolverConfig& cfg) {
    IntegrationResult<S> r = integrate_prefix(f, x0, grid, cfg);
    if (r.failed) throw IntegrationFailure(r.t_reached);
    return std::move(r.states);
}

}  // namespace hubnode::node
