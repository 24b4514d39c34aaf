#pragma once

// Fully connected vector field with tanh hidden activations and a linear
// output layer, plus the reverse-mode machinery used to differentiate
// through unrolled solver steps. Templated on the scalar so heavy training
// can run in single precision while gradient checks run in double.

#include <random>

#include "hubnode/common.hpp"

namespace hubnode::node {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Activation { Tanh, Identity };

template <typename S>
struct Mlp {
    std::vector<MatX<S>> weights;
    std::vector<VecX<S>> biases;
    Activation activation = Activation::Tanh;

    int num_layers() const { return static_cast<int>(weights.size()); }
    int in_dim() const { return static_cast<int>(weights.front().cols()); }
    int out_dim() const { return static_cast<int>(weights.back().rows()); }

    std::vector<int> widths() const {
        std::vector<int> w{in_dim()};
        for (const auto& m : weights) w.push_back(static_cast<int>(m.rows()));
        return w;
    }

    static Mlp create(const std::vector<int>& widths, std::uint64_t seed,
                      Activation act = Activation::Tanh) {
        if (widths.size() < 2) throw ParameterError("mlp needs at least one layer");
        Mlp m;
        m.activation = act;
        std::mt19937_64 rng(seed);
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const int fan_in = widths[l], fan_out = widths[l + 1];
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-bound, bound);
            MatX<S> w(fan_out, fan_in);
            for (int r = 0; r < fan_out; ++r)
                for (int c = 0; c < fan_in; ++c) w(r, c) = static_cast<S>(dist(rng));
            m.weights.push_back(std::move(w));
            m.biases.push_back(VecX<S>::Zero(fan_out));
        }
        return m;
    }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (int l = 0; l < num_layers(); ++l)
            n += weights[l].size() + biases[l].size();
        return n;
    }

    VecX<S> flatten() const {
        VecX<S> out(num_params());
        Eigen::Index k = 0;
        for (int l = 0; l < num_layers(); ++l) {
            out.segment(k, weights[l].size()) =
                Eigen::Map<const VecX<S>>(weights[l].data(), weights[l].size());
            k += weights[l].size();
            out.segment(k, biases[l].size()) = biases[l];
            k += biases[l].size();
        }
        return out;
    }

    void unflatten(const VecX<S>& flat) {
        if (flat.size() != static_cast<Eigen::Index>(num_params()))
            throw ParameterError("parameter vector has wrong length");
        Eigen::Index k = 0;
        for (int l = 0; l < num_layers(); ++l) {
            Eigen::Map<VecX<S>>(weights[l].data(), weights[l].size()) =
                flat.segment(k, weights[l].size());
            k += weights[l].size();
            biases[l] = flat.segment(k, biases[l].size());
            k += biases[l].size();
        }
    }
};

// Activations of every layer for one batched forward pass; act[0] is the
// input, act[L] the output.
template <typename S>
struct MlpCache {
    std::vector<MatX<S>> act;
};

template <typename S>
MatX<S> mlp_forward(const Mlp<S>& m, const MatX<S>& x, MlpCache<S>* cache = nullptr) {
    if (x.rows() != m.in_dim()) throw ParameterError("mlp input width mismatch");
    MatX<S> a = x;
    if (cache) {
        cache->act.clear();
        cache->act.reserve(m.num_layers() + 1);
        cache->act.push_back(a);
    }
    for (int l = 0; l < m.num_layers(); ++l) {
        MatX<S> z = (m.weights[l] * a).colwise() + m.biases[l];
        if (l + 1 < m.num_layers() && m.activation == Activation::Tanh)
            a = z.array().tanh().matrix();
        else
            a = std::move(z);
        if (cache) cache->act.push_back(a);
    }
    if (!a.allFinite())
        throw NumericalError("vector field produced non-finite output (weight norm " +
                             std::to_string(double(m.weights.front().norm())) + ")");
    return a;
}

template <typename S>
struct MlpGrad {
    std::vector<MatX<S>> weights;
    std::vector<VecX<S>> biases;

    static MlpGrad zeros_like(const Mlp<S>& m) {
        MlpGrad g;
        for (int l = 0; l < m.num_layers(); ++l) {
            g.weights.push_back(MatX<S>::Zero(m.weights[l].rows(), m.weights[l].cols()));
            g.biases.push_back(VecX<S>::Zero(m.biases[l].size()));
        }
        return g;
    }

    VecX<S> flatten() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            n += weights[l].size() + biases[l].size();
        VecX<S> out(n);
        Eigen::Index k = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            out.segment(k, weights[l].size()) =
                Eigen::Map<const VecX<S>>(weights[l].data(), weights[l].size());
            k += weights[l].size();
            out.segment(k, biases[l].size()) = biases[l];
            k += biases[l].size();
        }
        return out;
    }
};

// Vector-Jacobian product: accumulates parameter gradients into `grad` and
// returns the cotangent of the input batch.
template <typename S>
MatX<S> mlp_vjp(const Mlp<S>& m, const MlpCache<S>& cache, const MatX<S>& g_out,
                MlpGrad<S>& grad) {
    MatX<S> g = g_out;
    for (int l = m.num_layers() - 1; l >= 0; --l) {
        MatX<S> dz;
        if (l + 1 < m.num_layers() && m.activation == Activation::Tanh) {
            const auto& a = cache.act[l + 1];
            dz = g.cwiseProduct((MatX<S>::Ones(a.rows(), a.cols()) - a.cwiseProduct(a)));
        } else {
            dz = std::move(g);
        }
        grad.weights[l].noalias() += dz * cache.act[l].transpose();
        grad.biases[l] += dz.rowwise().sum();
        g = m.weights[l].transpose() * dz;
    }
    return g;
}

}  // namespace hubnode::node
