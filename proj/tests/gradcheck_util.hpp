#pragma once

// Finite-difference validation of the reverse-mode gradients through an
// unrolled RK4 training window, shared by the unit and acceptance suites.
// Uses a two-site geometry (4 x 4 blocks, 16 packed values) so constraint
// terms are active while the check stays fast.

#include <random>

#include "hubnode/node/loss.hpp"
#include "hubnode/node/ode.hpp"

namespace gradcheck {

using namespace hubnode;
using namespace hubnode::node;

struct Problem {
    Mlp<double> field;
    MatX<double> x0;
    std::vector<MatX<double>> targets;
    Normalizer nz;
    SectorGeometry geom{2, 1, 1};
    double dt = 0.05;

    Problem() : field(make_field()), nz(make_nz()) {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> dist(0.1, 0.9);
        const int batch = 2, window = 5;
        x0.resize(16, batch);
        for (int r = 0; r < 16; ++r)
            for (int b = 0; b < batch; ++b) x0(r, b) = dist(rng);
        targets.resize(window);
        for (auto& t : targets) {
            t.resize(16, batch);
            for (int r = 0; r < 16; ++r)
                for (int b = 0; b < batch; ++b) t(r, b) = dist(rng);
        }
    }

    static Mlp<double> make_field() {
        Mlp<double> f = Mlp<double>::create({16, 16, 16, 16}, 21);
        std::mt19937_64 rng(77);
        std::normal_distribution<double> dist(0.0, 0.1);
        for (auto& w : f.weights) w *= 0.4;
        for (auto& b : f.biases)
            for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = dist(rng);
        return f;
    }

    static Normalizer make_nz() {
        std::mt19937_64 rng(41);
        std::normal_distribution<double> dist;
        RowMatrixXr rows(32, 16);
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 16; ++c) rows(r, c) = dist(rng);
        return Normalizer::fit(rows, 4, NormalizerMode::GlobalPerPart);
    }

    double loss_value(const ConstraintWeights& w) const {
        std::vector<MatX<double>> states(targets.size() + 1);
        states[0] = x0;
        for (std::size_t k = 0; k < targets.size(); ++k)
            states[k + 1] = rk4_step(field, states[k], dt);
        const std::vector<MatX<double>> pred(states.begin() + 1, states.end());
        return window_loss(field, pred, targets, nz, geom, w).total;
    }

    VecX<double> loss_grad(const ConstraintWeights& w) const {
        const int window = static_cast<int>(targets.size());
        std::vector<MatX<double>> states(window + 1);
        std::vector<Rk4StepCache<double>> caches(window);
        states[0] = x0;
        for (int k = 0; k < window; ++k)
            states[k + 1] = rk4_step(field, states[k], dt, &caches[k]);
        const std::vector<MatX<double>> pred(states.begin() + 1, states.end());
        const WindowLoss<double> loss = window_loss(field, pred, targets, nz, geom, w);
        MlpGrad<double> grad = MlpGrad<double>::zeros_like(field);
        MatX<double> g = loss.state_grads[window - 1];
        for (int k = window - 1; k >= 0; --k) {
            g = rk4_step_vjp(field, caches[k], dt, g, grad);
            if (k >= 1) g += loss.state_grads[k - 1];
        }
        return grad.flatten();
    }
};

// Worst relative error of the directional derivative over `directions`
// random unit directions (central differences, step 1e-6).
inline double max_relative_error(const ConstraintWeights& w, int directions) {
    Problem prob;
    const VecX<double> analytic = prob.loss_grad(w);
    const VecX<double> theta = prob.field.flatten();
    std::mt19937_64 rng(51);
    std::normal_distribution<double> dist;
    const double h = 1e-6;
    double worst = 0.0;
    for (int trial = 0; trial < directions; ++trial) {
        VecX<double> dir(analytic.size());
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = dist(rng);
        dir.normalize();
        Problem plus = prob;
        Problem minus = prob;
        plus.field.unflatten(theta + h * dir);
        minus.field.unflatten(theta - h * dir);
        const double fd = (plus.loss_value(w) - minus.loss_value(w)) / (2.0 * h);
        const double an = analytic.dot(dir);
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-8});
        worst = std::max(worst, std::abs(fd - an) / scale);
    }
    return worst;
}

}  // namespace gradcheck
