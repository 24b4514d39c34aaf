#pragma once

// Persisted learned model: vector-field parameters, solver settings, the
// normalizer it was fitted with, and training provenance. Parameter blocks
// are stored as raw float64 in the same container style as datasets.

#include "hubnode/node/train.hpp"

namespace hubnode::node {

inline const char* kModelSchema = "hubnode-model-v1";

template <typename S>
struct NodeModel {
    Mlp<S> field;
    SolverConfig solver;
    Normalizer normalizer;
    SectorGeometry geometry;
    // Provenance
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string data_hash;
    double best_val_mse = std::numeric_limits<double>::quiet_NaN();
    double final_train_loss = std::numeric_limits<double>::quiet_NaN();
};

template <typename S>
void save_model(const std::filesystem::path& dir, const NodeModel<S>& m) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["schema"] = kModelSchema;
    j["widths"] = m.field.widths();
    j["activation"] = m.field.activation == Activation::Tanh ? "tanh" : "identity";
    j["solver"] = {{"method", m.solver.method == SolverMethod::AdaptiveRk45 ? "rk45" : "rk4"},
                   {"rtol", m.solver.rtol},
                   {"atol", m.solver.atol},
                   {"max_steps", m.solver.max_steps},
                   {"fixed_dt", m.solver.fixed_dt}};
    j["normalizer"] = m.normalizer.to_json();
    j["geometry"] = {{"m_sites", m.geometry.m_sites},
                     {"n_up", m.geometry.n_up},
                     {"n_down", m.geometry.n_down}};
    j["provenance"] = {{"seed", m.seed},
                       {"config_hash", m.config_hash},
                       {"data_hash", m.data_hash},
                       {"best_val_mse", m.best_val_mse},
                       {"final_train_loss", m.final_train_loss}};

    const VecX<S> flat = m.field.flatten();
    const VectorXr flat64 = flat.template cast<double>();
    nlohmann::json arrays;
    put_array(dir, arrays, "params", flat64.data(), flat64.size(), 1);
    j["arrays"] = arrays;
    write_json(dir / "manifest.json", j);
}

template <typename S>
NodeModel<S> load_model(const std::filesystem::path& dir) {
    const auto j = read_json(dir / "manifest.json");
    if (j.at("schema").get<std::string>() != kModelSchema)
        throw IoError("unsupported model schema in " + dir.string());
    NodeModel<S> m;
    const auto widths = j.at("widths").get<std::vector<int>>();
    const Activation act =
        j.at("activation").get<std::string>() == "tanh" ? Activation::Tanh : Activation::Identity;
    m.field = Mlp<S>::create(widths, 0, act);
    const auto& js = j.at("solver");
    m.solver.method = js.at("method").get<std::string>() == "rk45" ? SolverMethod::AdaptiveRk45
                                                                   : SolverMethod::FixedRk4;
    m.solver.rtol = js.at("rtol").get<double>();
    m.solver.atol = js.at("atol").get<double>();
    m.solver.max_steps = js.at("max_steps").get<long>();
    m.solver.fixed_dt = js.at("fixed_dt").get<double>();
    m.normalizer = Normalizer::from_json(j.at("normalizer"));
    m.geometry.m_sites = j.at("geometry").at("m_sites").get<int>();
    m.geometry.n_up = j.at("geometry").at("n_up").get<int>();
    m.geometry.n_down = j.at("geometry").at("n_down").get<int>();
    m.seed = j.at("provenance").at("seed").get<std::uint64_t>();
    m.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    m.data_hash = j.at("provenance").at("data_hash").get<std::string>();
    m.best_val_mse = j.at("provenance").at("best_val_mse").get<double>();
    m.final_train_loss = j.at("provenance").at("final_train_loss").get<double>();

    std::size_t rows = 0, cols = 0;
    auto v = get_array(dir, j.at("arrays"), "params", &rows, &cols);
    if (rows * cols != m.field.num_params())
        throw IoError("parameter block length disagrees with widths");
    VecX<S> flat(rows * cols);
    for (std::size_t i = 0; i < rows * cols; ++i) flat[i] = static_cast<S>(v[i]);
    m.field.unflatten(flat);
    return m;
}

struct Prediction {
    std::vector<double> times;  // absolute times actually covered
    RowMatrixXr normalized;     // covered steps x width, normalized coordinates
    bool failed = false;
    double fail_time = std::numeric_limits<double>::quiet_NaN();
};

// Integrates the learned field from a normalized state at t0 and samples the
// uniform data grid over the horizon. Integration always runs in double (the
// trained parameters are upcast): the adaptive error estimator needs more
// headroom than single precision offers. On failure the covered prefix is
// returned with the failure time.
template <typename S>
Prediction predict(const NodeModel<S>& m, const Eigen::Ref<const VectorXr>& x0_normalized,
                   double t0, double horizon, double dt) {
    const int steps = static_cast<int>(std::llround(horizon / dt));
    std::vector<double> grid(steps + 1);
    for (int k = 0; k <= steps; ++k) grid[k] = t0 + k * dt;

    Mlp<double> field64;
    field64.activation = m.field.activation;
    for (int l = 0; l < m.field.num_layers(); ++l) {
        field64.weights.push_back(m.field.weights[l].template cast<double>());
        field64.biases.push_back(m.field.biases[l].template cast<double>());
    }
    const IntegrationResult<double> r =
        integrate_prefix(field64, VecX<double>(x0_normalized), grid, m.solver);

    Prediction out;
    out.failed = r.failed;
    if (r.failed) out.fail_time = r.t_reached;
    out.times.assign(grid.begin(), grid.begin() + r.states.size());
    out.normalized.resize(r.states.size(), x0_normalized.size());
    for (std::size_t k = 0; k < r.states.size(); ++k)
        out.normalized.row(k) = r.states[k].transpose();
    return out;
}

inline void write_history_csv(const std::filesystem::path& path,
                              const std::vector<HistoryRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "step,total,mse,psd_D,psd_Q,tr_D,tr_Q,val_mse\n";
    for (const auto& r : rows) {
        out << r.step << ',' << r.total << ',' << r.mse << ',' << r.psd_d << ','
            << r.psd_q << ',' << r.tr_d << ',' << r.tr_q << ',';
        if (std::isfinite(r.val_mse)) out << r.val_mse;
        out << "\n";
    }
}

}  // namespace hubnode::node
