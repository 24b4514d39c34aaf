#pragma once

// Orchestration over a (U, V) grid: simulate datasets, diagnose regime
// indicators, train/predict/evaluate learned models, and emit figure-ready
// tables. Tasks are parallel across grid points, deterministic per task;
// aggregation is single-writer.

#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "hubnode/evalmetrics.hpp"
#include "hubnode/node/model.hpp"
#include "hubnode/propagator.hpp"
#include "hubnode/sweep_config.hpp"

namespace hubnode {

inline const char* kCodeVersion = "hubnode-0.1.0";

struct TaskSummary {
    std::vector<std::string> completed;
    std::vector<std::string> failed;  // "label: message"

    bool all_ok() const { return failed.empty(); }
};

namespace detail {

// Runs fn(i) for i in [0, n) on `workers` threads; per-task failures are
// isolated and collected.
inline TaskSummary run_parallel(int n, int workers,
                                const std::function<std::string(int)>& label,
                                const std::function<void(int)>& fn) {
    TaskSummary summary;
    std::mutex mu;
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
                std::lock_guard<std::mutex> lock(mu);
                summary.completed.push_back(label(i));
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                summary.failed.push_back(label(i) + ": " + e.what());
            }
        }
    };
    std::vector<std::thread> pool;
    const int w = std::max(1, std::min(workers, n));
    pool.reserve(w);
    for (int k = 0; k < w; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return summary;
}

inline std::string format_value(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simulation pipeline for one grid point.
// ---------------------------------------------------------------------------

inline TrajectoryData simulate_trajectory(const SweepConfig& cfg, double interaction,
                                          double trap) {
    ModelParams params;
    params.hopping = 1.0;
    params.interaction = interaction;
    params.trap_strength = trap;
    params.m_sites = cfg.m_sites;

    SectorSpace space(cfg.m_sites);
    const FockBasis& basis = space.basis(cfg.n_up, cfg.n_down);
    const SparseHamiltonian h_trapped = build_hamiltonian(space, basis, params, true);
    const SparseHamiltonian h_free = build_hamiltonian(space, basis, params, false);
    const GroundState gs = ground_state(h_trapped);

    EvolutionSpec spec;
    spec.dt = cfg.dt;
    spec.t_end = cfg.t_end;
    spec.stride = cfg.stride;
    const int steps = spec.num_snapshots();
    const int m = cfg.m_sites;

    TrajectoryData data;
    data.params = params;
    data.n_up = cfg.n_up;
    data.n_down = cfg.n_down;
    data.dt = cfg.dt;
    data.t_end = cfg.t_end;
    data.stride = cfg.stride;
    data.cumulant_stride = cfg.cumulant_stride;
    data.times.resize(steps);
    data.packed_2rdm.resize(steps, packed_width(m * m));
    data.occupations.resize(steps, m);
    data.doublons.resize(steps, m);
    data.conservation.resize(steps, 2);
    data.e_corr.resize(steps, 1);

    const int n_cum = (steps + cfg.cumulant_stride - 1) / cfg.cumulant_stride;
    data.cumulant_times.resize(n_cum);
    data.cumulant_norms.resize(n_cum, 4);

    const Propagator prop(h_free, gs.psi);
    int cum_row = 0;
    for (int k = 0; k < steps; ++k) {
        const double t = k * cfg.dt * cfg.stride;
        const VectorXc psi = prop.state_at(t);
        data.times[k] = t;
        data.conservation(k, 0) = psi.norm();
        data.conservation(k, 1) = expectation(h_free, psi);

        const OneRdm d1 = one_rdm(space, basis, psi);
        const MatrixXc d12 = two_rdm_updown(space, basis, psi);
        data.packed_2rdm.row(k) = pack_hermitian(d12).transpose();
        const SiteOccupations occ = occupations(d12, d1);
        data.occupations.row(k) = occ.total.transpose();
        data.doublons.row(k) = occ.doublon.transpose();
        const MatrixXc delta_ud = delta12_updown(d12, d1);
        data.e_corr(k, 0) = correlation_energy(delta_ud, interaction, m);
        if (k == 0) data.e_pot0 = e_pot0(d1, params);

        if (k % cfg.cumulant_stride == 0) {
            const MatrixXc d12_uu = two_rdm_upup(space, basis, psi);
            const MatrixXc d123 = three_rdm_uud(space, basis, psi);
            const MatrixXc delta_uu = delta12_upup(d12_uu, d1);
            const MatrixXc delta3 = delta123_uud(d123, d1, delta_uu, delta_ud);
            const MatrixXc kernel = kernel_component(delta3, m);
            data.cumulant_times[cum_row] = t;
            data.cumulant_norms(cum_row, 0) = delta_uu.norm();
            data.cumulant_norms(cum_row, 1) = delta_ud.norm();
            data.cumulant_norms(cum_row, 2) = delta3.norm();
            data.cumulant_norms(cum_row, 3) = kernel.norm();
            ++cum_row;
        }
    }

    // Normalizer fitted on the (available prefix of the) training split.
    const int fit_rows = std::min(cfg.train_steps, steps);
    if (fit_rows >= 2) {
        data.normalizer = Normalizer::fit(data.packed_2rdm.topRows(fit_rows), m * m,
                                          cfg.normalizer_mode());
    }
    return data;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

inline TaskSummary run_simulate(const SweepConfig& cfg) {
    const auto points = cfg.grid_points();
    return detail::run_parallel(
        static_cast<int>(points.size()), cfg.workers,
        [&](int i) { return point_label(points[i]); },
        [&](int i) {
            const auto [u, v] = points[i];
            TrajectoryData data = simulate_trajectory(cfg, u, v);
            write_trajectory(cfg.dataset_dir(points[i]), data, cfg.config_hash(),
                             kCodeVersion);
        });
}

struct IndicatorRow {
    double interaction = 0.0;
    double trap = 0.0;
    RegimeIndicators ind;
};

inline IndicatorRow diagnose_point(const SweepConfig& cfg, const GridPoint& pt) {
    const TrajectoryData data = read_trajectory(cfg.dataset_dir(pt));
    CumulantSeries series;
    series.times = data.cumulant_times;
    series.norms.resize(data.cumulant_norms.rows());
    for (Eigen::Index k = 0; k < data.cumulant_norms.rows(); ++k) {
        series.norms[k] = {data.cumulant_norms(k, 0), data.cumulant_norms(k, 1),
                           data.cumulant_norms(k, 2), data.cumulant_norms(k, 3)};
    }
    std::vector<double> e_corr(data.e_corr.data(), data.e_corr.data() + data.e_corr.rows());
    IndicatorRow row;
    row.interaction = pt.interaction;
    row.trap = pt.trap;
    row.ind = regime_indicators(series, data.times, e_corr, data.e_pot0,
                                cfg.diag_horizon, cfg.pearson_t0,
                                {cfg.buildup_threshold, cfg.ratio_threshold});
    return row;
}

inline TaskSummary run_diagnose(const SweepConfig& cfg) {
    const auto points = cfg.grid_points();
    std::vector<IndicatorRow> rows(points.size());
    std::vector<bool> ok(points.size(), false);
    TaskSummary summary = detail::run_parallel(
        static_cast<int>(points.size()), cfg.workers,
        [&](int i) { return point_label(points[i]); },
        [&](int i) {
            rows[i] = diagnose_point(cfg, points[i]);
            ok[i] = true;
        });

    std::filesystem::create_directories(cfg.tables_dir());
    std::ofstream csv(cfg.tables_dir() / "indicators.csv", std::ios::trunc);
    csv << "U,V,buildup,e_corr_avg,e_pot0,ratio,pearson_uu,pearson_uu_valid,"
           "pearson_ud,pearson_ud_valid,strong_buildup,strong_ratio,config_hash,"
           "code_version\n";
    nlohmann::json jrows = nlohmann::json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!ok[i]) continue;
        const auto& r = rows[i];
        csv << detail::format_value(r.interaction) << ',' << detail::format_value(r.trap)
            << ',' << detail::format_value(r.ind.buildup) << ','
            << detail::format_value(r.ind.e_corr_avg) << ','
            << detail::format_value(r.ind.e_pot0) << ','
            << detail::format_value(r.ind.ratio) << ','
            << detail::format_value(r.ind.pearson_uu.value) << ','
            << (r.ind.pearson_uu.valid ? 1 : 0) << ','
            << detail::format_value(r.ind.pearson_ud.value) << ','
            << (r.ind.pearson_ud.valid ? 1 : 0) << ',' << (r.ind.strong_buildup ? 1 : 0)
            << ',' << (r.ind.strong_ratio ? 1 : 0) << ',' << cfg.config_hash() << ','
            << kCodeVersion << "\n";
        nlohmann::json j;
        j["U"] = r.interaction;
        j["V"] = r.trap;
        j["buildup"] = r.ind.buildup;
        j["e_corr_avg"] = r.ind.e_corr_avg;
        j["e_pot0"] = r.ind.e_pot0;
        j["ratio"] = r.ind.ratio;
        j["pearson_uu"] = r.ind.pearson_uu.value;
        j["pearson_uu_valid"] = r.ind.pearson_uu.valid;
        j["pearson_ud"] = r.ind.pearson_ud.value;
        j["pearson_ud_valid"] = r.ind.pearson_ud.valid;
        j["strong_buildup"] = r.ind.strong_buildup;
        j["strong_ratio"] = r.ind.strong_ratio;
        jrows.push_back(j);
    }
    write_json(cfg.tables_dir() / "indicators.json", jrows);
    return summary;
}

// Deterministic per-point seed from (master seed, U, V, variant).
inline std::uint64_t point_seed(const SweepConfig& cfg, const GridPoint& pt,
                                const std::string& variant) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ cfg.master_seed;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ull;
        }
    };
    mix(&pt.interaction, sizeof(double));
    mix(&pt.trap, sizeof(double));
    mix(variant.data(), variant.size());
    return h;
}

inline node::ConstraintWeights variant_weights(const SweepConfig& cfg,
                                               const std::string& variant) {
    node::ConstraintWeights w;
    if (variant == "tr" || variant == "both") {
        w.tr_d = cfg.alpha_tr_d;
        w.tr_q = cfg.alpha_tr_q;
    }
    if (variant == "psd" || variant == "both") {
        w.psd_d = cfg.alpha_psd_d;
        w.psd_q = cfg.alpha_psd_q;
    }
    if (variant != "none" && variant != "tr" && variant != "psd" && variant != "both")
        throw ConfigError("unknown variant: " + variant);
    return w;
}

namespace detail {

template <typename S>
void train_point(const SweepConfig& cfg, const GridPoint& pt, const std::string& variant) {
    const TrajectoryData data = read_trajectory(cfg.dataset_dir(pt));
    if (!data.normalizer)
        throw DataError("dataset has no fitted normalizer: " + point_label(pt));
    if (data.num_steps() < cfg.train_steps + cfg.val_steps)
        throw DataError("dataset shorter than train+val split");

    const Normalizer& nz = *data.normalizer;
    const RowMatrixXr train_norm = nz.apply_rows(data.packed_2rdm.topRows(cfg.train_steps));
    const RowMatrixXr val_norm = nz.apply_rows(
        data.packed_2rdm.middleRows(cfg.train_steps, cfg.val_steps));

    node::TrainConfig tc;
    tc.hidden = cfg.paper_scale ? 2048 : cfg.hidden;
    tc.window = cfg.window;
    tc.batch = cfg.batch;
    tc.updates = cfg.updates;
    tc.lr = cfg.lr;
    tc.val_every = cfg.val_every;
    tc.seed = point_seed(cfg, pt, variant);
    tc.weights = variant_weights(cfg, variant);
    tc.threads = cfg.threads;
    tc.dt = cfg.dt * cfg.stride;

    const node::SectorGeometry geom{cfg.m_sites, cfg.n_up, cfg.n_down};
    node::TrainResult<S> result;
    if (cfg.hyper_search) {
        auto search = node::hyper_search<S>(train_norm, val_norm, nz, geom,
                                            node::default_candidates(tc),
                                            cfg.screen_updates, cfg.updates);
        result = std::move(search.result);
        tc = search.chosen;
    } else {
        result = node::train<S>(train_norm, val_norm, nz, geom, tc);
    }
    if (result.diverged && result.history.empty())
        throw NumericalError("training diverged before the first update");

    node::NodeModel<S> model;
    model.field = result.best;
    model.solver.method = node::SolverMethod::AdaptiveRk45;
    model.normalizer = nz;
    model.geometry = geom;
    model.seed = tc.seed;
    model.config_hash = cfg.config_hash();
    model.data_hash = buffer_hash(data.packed_2rdm.data(), data.packed_2rdm.size());
    model.best_val_mse = result.best_val_mse;
    model.final_train_loss = result.final_train_loss;

    const auto dir = cfg.model_dir(pt, variant);
    node::save_model(dir, model);
    node::write_history_csv(dir / "loss_history.csv", result.history);
}

template <typename S>
void predict_point(const SweepConfig& cfg, const GridPoint& pt, const std::string& variant) {
    const auto model = node::load_model<S>(cfg.model_dir(pt, variant));
    const TrajectoryData data = read_trajectory(cfg.dataset_dir(pt));
    const int k0 = hubnode::detail::grid_index(data.times, cfg.predict_from);
    const VectorXr x0 = model.normalizer.apply(data.packed_2rdm.row(k0).transpose());

    const double horizon = cfg.divergence_horizon;
    const node::Prediction pred =
        node::predict(model, x0, cfg.predict_from, horizon, cfg.dt * cfg.stride);

    const auto dir = cfg.prediction_dir(pt, variant);
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["schema"] = "hubnode-prediction-v1";
    manifest["t0"] = cfg.predict_from;
    manifest["horizon"] = horizon;
    manifest["failed"] = pred.failed;
    manifest["fail_time"] = pred.failed ? pred.fail_time : 0.0;
    manifest["variant"] = variant;
    manifest["config_hash"] = cfg.config_hash();
    manifest["code_version"] = kCodeVersion;
    nlohmann::json arrays;
    put_array(dir, arrays, "times", pred.times.data(), pred.times.size(), 1);
    put_array(dir, arrays, "normalized", pred.normalized.data(), pred.normalized.rows(),
              pred.normalized.cols());
    const RowMatrixXr physical = model.normalizer.invert_rows(pred.normalized);
    put_array(dir, arrays, "packed", physical.data(), physical.rows(), physical.cols());
    manifest["arrays"] = arrays;
    write_json(dir / "manifest.json", manifest);
}

}  // namespace detail

inline TaskSummary run_train(const SweepConfig& cfg) {
    const auto points = cfg.grid_points();
    std::vector<std::pair<GridPoint, std::string>> tasks;
    for (const auto& pt : points)
        for (const auto& variant : cfg.variants) tasks.emplace_back(pt, variant);
    return detail::run_parallel(
        static_cast<int>(tasks.size()), cfg.workers,
        [&](int i) { return point_label(tasks[i].first) + "/" + tasks[i].second; },
        [&](int i) {
            if (cfg.train_scalar == "double")
                detail::train_point<double>(cfg, tasks[i].first, tasks[i].second);
            else
                detail::train_point<float>(cfg, tasks[i].first, tasks[i].second);
        });
}

inline TaskSummary run_predict(const SweepConfig& cfg) {
    const auto points = cfg.grid_points();
    std::vector<std::pair<GridPoint, std::string>> tasks;
    for (const auto& pt : points)
        for (const auto& variant : cfg.variants) tasks.emplace_back(pt, variant);
    return detail::run_parallel(
        static_cast<int>(tasks.size()), cfg.workers,
        [&](int i) { return point_label(tasks[i].first) + "/" + tasks[i].second; },
        [&](int i) {
            if (cfg.train_scalar == "double")
                detail::predict_point<double>(cfg, tasks[i].first, tasks[i].second);
            else
                detail::predict_point<float>(cfg, tasks[i].first, tasks[i].second);
        });
}

struct EvaluationRow {
    GridPoint point;
    std::string variant;
    PredictionReport report;
};

inline EvaluationRow evaluate_point(const SweepConfig& cfg, const GridPoint& pt,
                                    const std::string& variant) {
    const TrajectoryData data = read_trajectory(cfg.dataset_dir(pt));
    if (!data.normalizer) throw DataError("dataset has no normalizer");
    const Normalizer& nz = *data.normalizer;
    const node::SectorGeometry geom{cfg.m_sites, cfg.n_up, cfg.n_down};

    const auto dir = cfg.prediction_dir(pt, variant);
    const auto manifest = read_json(dir / "manifest.json");
    const double t0 = manifest.at("t0").get<double>();
    const bool failed = manifest.at("failed").get<bool>();
    const double fail_time = manifest.at("fail_time").get<double>();
    const auto& arrays = manifest.at("arrays");
    std::size_t rows = 0, cols = 0;
    const auto vt = get_array(dir, arrays, "times", &rows, &cols);
    std::vector<double> times(vt.begin(), vt.end());
    const auto vn = get_array(dir, arrays, "normalized", &rows, &cols);
    const RowMatrixXr pred_norm = Eigen::Map<const RowMatrixXr>(vn.data(), rows, cols);

    const int k0 = hubnode::detail::grid_index(data.times, t0);
    const double dt_grid = cfg.dt * cfg.stride;

    EvaluationRow out;
    out.point = pt;
    out.variant = variant;
    out.report.interaction = pt.interaction;
    out.report.trap = pt.trap;
    out.report.t0 = t0;
    out.report.divergence_tpred =
        divergence_time(times, pred_norm, t0, cfg.guard, failed, fail_time);

    for (double h : cfg.horizons) {
        HorizonMetrics hm;
        hm.horizon = h;
        const int kh = static_cast<int>(std::llround(h / dt_grid));
        const bool target_ok = k0 + kh < data.num_steps();
        const bool pred_ok = kh < pred_norm.rows();
        hm.covered = target_ok && pred_ok;
        if (hm.covered) {
            const RowMatrixXr target_norm =
                nz.apply_rows(data.packed_2rdm.middleRows(k0, kh + 1));
            hm.pearson = prediction_pearson(pred_norm.topRows(kh + 1), target_norm);

            std::vector<double> twin(times.begin(), times.begin() + kh + 1);
            std::vector<double> n_t(kh + 1), n_p(kh + 1), d_t(kh + 1), d_p(kh + 1);
            for (int k = 0; k <= kh; ++k) {
                n_t[k] = data.occupations(k0 + k, 0);
                d_t[k] = data.doublons(k0 + k, 0);
                VectorXr n_vec, d_vec;
                observables_from_packed(nz.invert(pred_norm.row(k).transpose()), geom,
                                        &n_vec, &d_vec);
                n_p[k] = n_vec[0];
                d_p[k] = d_vec[0];
            }
            hm.delta_n1 = occupation_deviation(twin, n_t, n_p);
            hm.delta_d1 = occupation_deviation(twin, d_t, d_p);
        }
        out.report.horizons.push_back(hm);
    }

    // Per-length curves for the loss/performance figure.
    const Eigen::Index max_rows =
        std::min<Eigen::Index>(pred_norm.rows(), data.num_steps() - k0);
    if (max_rows >= 2) {
        const RowMatrixXr target_norm =
            nz.apply_rows(data.packed_2rdm.middleRows(k0, max_rows));
        const auto curve = prediction_curves(times, pred_norm.topRows(max_rows),
                                             target_norm, nz, geom, t0);
        std::ofstream ccsv(dir / "curves.csv", std::ios::trunc);
        ccsv << "t_pred,pearson,mse,psd_D,psd_Q,tr_D,tr_Q\n";
        for (const auto& r : curve)
            ccsv << detail::format_value(r.t_pred) << ',' << detail::format_value(r.pearson)
                 << ',' << detail::format_value(r.mse) << ',' << detail::format_value(r.psd_d)
                 << ',' << detail::format_value(r.psd_q) << ',' << detail::format_value(r.tr_d)
                 << ',' << detail::format_value(r.tr_q) << "\n";
    }
    return out;
}

inline TaskSummary run_evaluate(const SweepConfig& cfg) {
    const auto points = cfg.grid_points();
    std::vector<std::pair<GridPoint, std::string>> tasks;
    for (const auto& pt : points)
        for (const auto& variant : cfg.variants) tasks.emplace_back(pt, variant);
    std::vector<EvaluationRow> rows(tasks.size());
    std::vector<bool> ok(tasks.size(), false);
    TaskSummary summary = detail::run_parallel(
        static_cast<int>(tasks.size()), cfg.workers,
        [&](int i) { return point_label(tasks[i].first) + "/" + tasks[i].second; },
        [&](int i) {
            rows[i] = evaluate_point(cfg, tasks[i].first, tasks[i].second);
            ok[i] = true;
        });

    std::filesystem::create_directories(cfg.tables_dir());
    std::ofstream csv(cfg.tables_dir() / "predictions.csv", std::ios::trunc);
    csv << "U,V,variant,t0,horizon,pearson,pearson_valid,delta_n1,delta_d1,covered,"
           "divergence_tpred,config_hash,code_version\n";
    nlohmann::json jrows = nlohmann::json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!ok[i]) continue;
        const auto& r = rows[i];
        for (const auto& hm : r.report.horizons) {
            csv << detail::format_value(r.point.interaction) << ','
                << detail::format_value(r.point.trap) << ',' << r.variant << ','
                << detail::format_value(r.report.t0) << ','
                << detail::format_value(hm.horizon) << ','
                << detail::format_value(hm.pearson.value) << ','
                << (hm.pearson.valid ? 1 : 0) << ',' << detail::format_value(hm.delta_n1)
                << ',' << detail::format_value(hm.delta_d1) << ',' << (hm.covered ? 1 : 0)
                << ',';
            if (r.report.divergence_tpred)
                csv << detail::format_value(*r.report.divergence_tpred);
            csv << ',' << cfg.config_hash() << ',' << kCodeVersion << "\n";

            nlohmann::json j;
            j["U"] = r.point.interaction;
            j["V"] = r.point.trap;
            j["variant"] = r.variant;
            j["t0"] = r.report.t0;
            j["horizon"] = hm.horizon;
            j["pearson"] = hm.pearson.value;
            j["pearson_valid"] = hm.pearson.valid;
            j["delta_n1"] = hm.delta_n1;
            j["delta_d1"] = hm.delta_d1;
            j["covered"] = hm.covered;
            if (r.report.divergence_tpred)
                j["divergence_tpred"] = *r.report.divergence_tpred;
            jrows.push_back(j);
        }
    }
    write_json(cfg.tables_dir() / "predictions.json", jrows);
    return summary;
}

// Figure-ready tidy tables from the persisted indicator and prediction rows.
inline void run_export_figures(const SweepConfig& cfg) {
    std::filesystem::create_directories(cfg.tables_dir());
    auto write_uv_table = [&](const std::string& name, const nlohmann::json& rows,
                              const std::string& column, const char* header) {
        std::ofstream csv(cfg.tables_dir() / name, std::ios::trunc);
        csv << header << "\n";
        for (const auto& r : rows) {
            if (!r.contains(column)) continue;
            csv << detail::format_value(r.at("U").get<double>()) << ','
                << detail::format_value(r.at("V").get<double>()) << ','
                << detail::format_value(r.at(column).get<double>()) << "\n";
        }
    };

    const auto ind_path = cfg.tables_dir() / "indicators.json";
    if (std::filesystem::exists(ind_path)) {
        const auto rows = read_json(ind_path);
        write_uv_table("fig2a.csv", rows, "buildup", "U,V,buildup");
        write_uv_table("fig2b.csv", rows, "ratio", "U,V,ratio");
        write_uv_table("fig3a.csv", rows, "pearson_uu", "U,V,pearson_uu");
        write_uv_table("fig3b.csv", rows, "pearson_ud", "U,V,pearson_ud");
    } else {
        for (const char* name : {"fig2a.csv", "fig2b.csv", "fig3a.csv", "fig3b.csv"})
            write_uv_table(name, nlohmann::json::array(), "none", "U,V,value");
    }

    const auto pred_path = cfg.tables_dir() / "predictions.json";
    nlohmann::json pred_rows = nlohmann::json::array();
    if (std::filesystem::exists(pred_path)) pred_rows = read_json(pred_path);

    auto horizon_table = [&](const std::string& name, double horizon,
                             const std::string& column, const char* header) {
        std::ofstream csv(cfg.tables_dir() / name, std::ios::trunc);
        csv << header << "\n";
        for (const auto& r : pred_rows) {
            if (r.at("variant").get<std::string>() != "none") continue;
            if (std::abs(r.at("horizon").get<double>() - horizon) > 1e-9) continue;
            csv << detail::format_value(r.at("U").get<double>()) << ','
                << detail::format_value(r.at("V").get<double>()) << ','
                << detail::format_value(r.at(column).get<double>()) << "\n";
        }
    };
    const double h0 = cfg.horizons.size() > 0 ? cfg.horizons[0] : 20.0;
    const double h1 = cfg.horizons.size() > 1 ? cfg.horizons[1] : 25.0;
    horizon_table("fig3c.csv", h0, "pearson", "U,V,pearson");
    horizon_table("fig3d.csv", h1, "pearson", "U,V,pearson");
    horizon_table("fig4a.csv", h0, "delta_n1", "U,V,delta_n1");
    horizon_table("fig4b.csv", h1, "delta_n1", "U,V,delta_n1");
    horizon_table("fig4c.csv", h0, "delta_d1", "U,V,delta_d1");
    horizon_table("fig4d.csv", h1, "delta_d1", "U,V,delta_d1");

    // Per-variant loss/performance curves over the prediction length.
    std::ofstream f5(cfg.tables_dir() / "fig5.csv", std::ios::trunc);
    f5 << "U,V,variant,t_pred,pearson,mse,psd_D,psd_Q,tr_D,tr_Q\n";
    for (const auto& pt : cfg.grid_points()) {
        for (const auto& variant : cfg.variants) {
            const auto curve_path = cfg.prediction_dir(pt, variant) / "curves.csv";
            if (!std::filesystem::exists(curve_path)) continue;
            std::ifstream in(curve_path);
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                f5 << detail::format_value(pt.interaction) << ','
                   << detail::format_value(pt.trap) << ',' << variant << ',' << line
                   << "\n";
            }
        }
    }
}

// Invariant suite over one persisted dataset; returns human-readable
// failures. The hole-matrix ordering is selectable: the literal printed
// operator order flips the sign of the block, so its positivity check is
// expected to fail — the switch exists to demonstrate exactly that.
inline std::vector<std::string> run_verify(const std::filesystem::path& dataset_dir,
                                           HoleOrdering ordering = HoleOrdering::psd) {
    std::vector<std::string> problems;
    TrajectoryData data;
    try {
        data = read_trajectory(dataset_dir);
    } catch (const std::exception& e) {
        problems.push_back(std::string("read failed: ") + e.what());
        return problems;
    }
    const int m = data.params.m_sites;
    const int steps = data.num_steps();
    const double pair_trace = double(data.n_up) * double(data.n_down);

    for (int k = 0; k < steps; ++k) {
        if (std::abs(data.conservation(k, 0) - 1.0) > 1e-9) {
            problems.push_back("norm drift at step " + std::to_string(k));
            break;
        }
    }
    const double en0 = data.conservation(0, 1);
    for (int k = 0; k < steps; ++k) {
        if (std::abs(data.conservation(k, 1) - en0) >
            1e-8 * std::max(1.0, std::abs(en0))) {
            problems.push_back("energy drift at step " + std::to_string(k));
            break;
        }
    }
    const int probe = std::max(1, steps / 32);
    for (int k = 0; k < steps; k += probe) {
        const MatrixXc d12 = unpack_hermitian(data.packed_2rdm.row(k).transpose());
        if (std::abs(d12.trace().real() - pair_trace) > 1e-8) {
            problems.push_back("pair trace violation at step " + std::to_string(k));
            break;
        }
        Eigen::SelfAdjointEigenSolver<MatrixXc> es(d12);
        if (es.eigenvalues().minCoeff() < -1e-8) {
            problems.push_back("pair block not PSD at step " + std::to_string(k));
            break;
        }
        const OneRdm d1 = one_rdm_from_two(d12, m, data.n_up, data.n_down);
        const MatrixXc q = two_hole_rdm(d12, d1, ordering);
        Eigen::SelfAdjointEigenSolver<MatrixXc> esq(q);
        if (esq.eigenvalues().minCoeff() < -1e-8) {
            problems.push_back("hole block not PSD at step " + std::to_string(k));
            break;
        }
    }
    if (data.normalizer) {
        const VectorXr probe_row = data.packed_2rdm.row(0).transpose();
        const VectorXr round =
            data.normalizer->invert(data.normalizer->apply(probe_row));
        if ((round - probe_row).cwiseAbs().maxCoeff() >
            1e-10 * std::max(1.0, probe_row.cwiseAbs().maxCoeff()))
            problems.push_back("normalizer round trip is not the identity");
    }
    return problems;
}

}  // namespace hubnode
