#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "hubnode/sweep.hpp"

using namespace hubnode;

namespace {

std::filesystem::path temp_root(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("hubnode_sweep_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

SweepConfig parse_text(const std::string& text) {
    std::istringstream in(text);
    return SweepConfig::parse(in);
}

// Small, fast configuration for end-to-end runs.
SweepConfig mini_config(const std::filesystem::path& root) {
    SweepConfig cfg = parse_text(
        "u_grid = 1.0\n"
        "v_grid = 1.0\n"
        "t_end = 2.0\n"
        "cumulant_stride = 10\n"
        "diag_horizon = 1.5\n"
        "pearson_t0 = 0.3\n"
        "train_steps = 120\n"
        "val_steps = 40\n"
        "hidden = 16\n"
        "window = 5\n"
        "batch = 4\n"
        "updates = 30\n"
        "lr = 1e-3\n"
        "val_every = 10\n"
        "predict_from = 1.7\n"
        "horizons = 0.2\n"
        "divergence_horizon = 0.3\n"
        "workers = 2\n");
    cfg.output_root = root;
    return cfg;
}

}  // namespace

TEST(SweepConfig, DefaultsAndValidation) {
    SweepConfig cfg = parse_text("");
    EXPECT_EQ(cfg.u_grid.size(), 21u);
    EXPECT_EQ(cfg.v_grid.size(), 8u);
    EXPECT_EQ(cfg.m_sites, 6);
    EXPECT_EQ(cfg.dt, 0.01);
    EXPECT_EQ(cfg.t_end, 70.0);
    EXPECT_EQ(cfg.train_steps, 3000);
    EXPECT_EQ(cfg.val_steps, 1000);
    EXPECT_EQ(cfg.buildup_threshold, 0.65);
    EXPECT_EQ(cfg.ratio_threshold, -0.1);
    EXPECT_EQ(cfg.pearson_t0, 10.0);
    EXPECT_EQ(cfg.diag_horizon, 50.0);
    EXPECT_EQ(cfg.predict_from, 40.0);
    EXPECT_EQ(cfg.horizons, (std::vector<double>{20.0, 25.0}));
    EXPECT_EQ(cfg.grid_points().size(), 168u);
}

TEST(SweepConfig, Errors) {
    EXPECT_THROW(parse_text("bogus_key = 1\n"), ConfigError);
    EXPECT_THROW(parse_text("dt = -0.1\n"), ConfigError);
    EXPECT_THROW(parse_text("u_grid =\n"), ConfigError);
    EXPECT_THROW(parse_text("dt zero\n"), ConfigError);
    EXPECT_THROW(parse_text("train_scalar = half\n"), ConfigError);
    EXPECT_THROW(parse_text("horizons = 0.015\n"), ConfigError);
    EXPECT_THROW(parse_text("normalizer_mode = sometimes\n"), ConfigError);
}

TEST(SweepConfig, CommentsListsAndHash) {
    SweepConfig cfg = parse_text(
        "# a comment\n"
        "u_grid = 1.0, 2.0  # inline comment\n"
        "v_grid = 0.5\n"
        "variants = none, tr\n");
    EXPECT_EQ(cfg.u_grid, (std::vector<double>{1.0, 2.0}));
    EXPECT_EQ(cfg.variants, (std::vector<std::string>{"none", "tr"}));
    const std::string h1 = cfg.config_hash();
    cfg.u_grid.push_back(3.0);
    EXPECT_NE(cfg.config_hash(), h1);
}

TEST(SweepConfig, EnvOverrideForOutputRoot) {
    setenv("HUBNODE_OUTPUT_ROOT", "/tmp/hubnode_env_root", 1);
    SweepConfig cfg = parse_text("output_root = ignored\n");
    EXPECT_EQ(cfg.output_root, std::filesystem::path("/tmp/hubnode_env_root"));
    unsetenv("HUBNODE_OUTPUT_ROOT");
}

TEST(SweepConfig, PointLabels) {
    EXPECT_EQ(point_label({3.1, 1.0}), "U3.1000_V1.0000");
}

TEST(Sweep, SimulateDiagnoseVerify) {
    const auto root = temp_root("sim");
    SweepConfig cfg = mini_config(root);
    const TaskSummary sim = run_simulate(cfg);
    ASSERT_TRUE(sim.all_ok()) << (sim.failed.empty() ? "" : sim.failed.front());

    const auto dataset = cfg.dataset_dir({1.0, 1.0});
    ASSERT_TRUE(std::filesystem::exists(dataset / "manifest.json"));
    EXPECT_TRUE(run_verify(dataset).empty());

    // Manifest records the model parameters of this run.
    const auto manifest = read_json(dataset / "manifest.json");
    EXPECT_EQ(manifest.at("interaction").get<double>(), 1.0);
    EXPECT_EQ(manifest.at("trap").get<double>(), 1.0);
    EXPECT_EQ(manifest.at("m_sites").get<int>(), 6);

    const TaskSummary diag = run_diagnose(cfg);
    ASSERT_TRUE(diag.all_ok());
    const auto rows = read_json(cfg.tables_dir() / "indicators.json");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_LT(rows[0].at("ratio").get<double>(), 0.0);  // Ecorr initially negative
    EXPECT_TRUE(rows[0].at("pearson_ud_valid").get<bool>());

    std::ifstream csv(cfg.tables_dir() / "indicators.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_TRUE(header.starts_with("U,V,buildup"));
}

TEST(Sweep, SimulateIsDeterministic) {
    const auto root_a = temp_root("det_a");
    const auto root_b = temp_root("det_b");
    SweepConfig cfg_a = mini_config(root_a);
    cfg_a.t_end = 0.5;
    SweepConfig cfg_b = mini_config(root_b);
    cfg_b.t_end = 0.5;
    ASSERT_TRUE(run_simulate(cfg_a).all_ok());
    ASSERT_TRUE(run_simulate(cfg_b).all_ok());
    const auto ma = read_json(cfg_a.dataset_dir({1.0, 1.0}) / "manifest.json");
    const auto mb = read_json(cfg_b.dataset_dir({1.0, 1.0}) / "manifest.json");
    EXPECT_EQ(ma.at("arrays"), mb.at("arrays"));  // includes content hashes
}

TEST(Sweep, VerifyCatchesCorruption) {
    const auto root = temp_root("corrupt");
    SweepConfig cfg = mini_config(root);
    cfg.t_end = 0.5;
    ASSERT_TRUE(run_simulate(cfg).all_ok());
    const auto dataset = cfg.dataset_dir({1.0, 1.0});
    {
        std::fstream f(dataset / "packed_2rdm.f64",
                       std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(64);
        const char b = 0x11;
        f.write(&b, 1);
    }
    EXPECT_FALSE(run_verify(dataset).empty());
}

TEST(Sweep, EndToEndLearningStages) {
    const auto root = temp_root("e2e");
    SweepConfig cfg = mini_config(root);
    ASSERT_TRUE(run_simulate(cfg).all_ok());
    TaskSummary tr = run_train(cfg);
    ASSERT_TRUE(tr.all_ok()) << (tr.failed.empty() ? "" : tr.failed.front());
    ASSERT_TRUE(std::filesystem::exists(cfg.model_dir({1.0, 1.0}, "none") / "manifest.json"));
    ASSERT_TRUE(
        std::filesystem::exists(cfg.model_dir({1.0, 1.0}, "none") / "loss_history.csv"));

    TaskSummary pr = run_predict(cfg);
    ASSERT_TRUE(pr.all_ok()) << (pr.failed.empty() ? "" : pr.failed.front());
    TaskSummary ev = run_evaluate(cfg);
    ASSERT_TRUE(ev.all_ok()) << (ev.failed.empty() ? "" : ev.failed.front());

    const auto pred_rows = read_json(cfg.tables_dir() / "predictions.json");
    ASSERT_EQ(pred_rows.size(), 1u);
    EXPECT_EQ(pred_rows[0].at("variant").get<std::string>(), "none");
    EXPECT_EQ(pred_rows[0].at("horizon").get<double>(), 0.2);
    EXPECT_TRUE(pred_rows[0].at("covered").get<bool>());

    run_export_figures(cfg);
    for (const char* name : {"fig2a.csv", "fig2b.csv", "fig3a.csv", "fig3b.csv",
                             "fig3c.csv", "fig3d.csv", "fig4a.csv", "fig4b.csv",
                             "fig4c.csv", "fig4d.csv", "fig5.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(cfg.tables_dir() / name)) << name;
    }
    std::ifstream f5(cfg.tables_dir() / "fig5.csv");
    std::string header;
    std::getline(f5, header);
    EXPECT_EQ(header, "U,V,variant,t_pred,pearson,mse,psd_D,psd_Q,tr_D,tr_Q");

    // Re-evaluation from persisted predictions is idempotent.
    ASSERT_TRUE(run_evaluate(cfg).all_ok());
    const auto pred_rows2 = read_json(cfg.tables_dir() / "predictions.json");
    EXPECT_EQ(pred_rows, pred_rows2);
}

TEST(Sweep, MissingDatasetIsIsolatedFailure) {
    const auto root = temp_root("missing");
    SweepConfig cfg = mini_config(root);
    SweepConfig two = cfg;
    two.u_grid = {1.0, 2.0};
    // Simulate only the first point.
    ASSERT_TRUE(run_simulate(cfg).all_ok());
    const TaskSummary diag = run_diagnose(two);
    EXPECT_EQ(diag.completed.size(), 1u);
    EXPECT_EQ(diag.failed.size(), 1u);
    // The produced table contains only the completed row.
    const auto rows = read_json(two.tables_dir() / "indicators.json");
    EXPECT_EQ(rows.size(), 1u);
}

TEST(Sweep, PointSeedsAreStableAndDistinct) {
    SweepConfig cfg = mini_config(temp_root("seeds"));
    const auto s1 = point_seed(cfg, {1.0, 1.0}, "none");
    const auto s2 = point_seed(cfg, {1.0, 1.0}, "none");
    const auto s3 = point_seed(cfg, {2.0, 1.0}, "none");
    const auto s4 = point_seed(cfg, {1.0, 1.0}, "tr");
    EXPECT_EQ(s1, s2);
    EXPECT_NE(s1, s3);
    EXPECT_NE(s1, s4);
}
