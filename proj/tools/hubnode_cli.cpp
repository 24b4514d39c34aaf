// Command-line driver: simulate / diagnose / train / predict / evaluate /
// export-figures over a (U, V) grid described by a key = value config file,
// plus a dataset verifier. Exit codes: 0 success, 1 partial failures,
// 2 configuration error.

#include <iostream>

#include <CLI11.hpp>

#include "hubnode/sweep.hpp"

namespace {

int report(const hubnode::TaskSummary& summary, const std::string& stage) {
    std::cout << stage << ": " << summary.completed.size() << " task(s) completed";
    if (!summary.failed.empty()) {
        std::cout << ", " << summary.failed.size() << " failed:\n";
        for (const auto& f : summary.failed) std::cout << "  FAILED " << f << "\n";
        return 1;
    }
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quenched Fermi-Hubbard simulation, regime diagnostics, and "
                 "learned 2RDM dynamics"};
    app.require_subcommand(1);

    std::string config_path;
    std::string dataset_path;

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "sweep config file (key = value)")
            ->required();
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run exact trajectories and persist datasets");
    add_config(simulate);
    CLI::App* diagnose = app.add_subcommand("diagnose", "compute regime indicators per grid point");
    add_config(diagnose);
    CLI::App* train = app.add_subcommand("train", "train one model per grid point and variant");
    add_config(train);
    CLI::App* predict = app.add_subcommand("predict", "roll predictions from the stored models");
    add_config(predict);
    CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against exact data");
    add_config(evaluate);
    CLI::App* figures = app.add_subcommand("export-figures", "emit figure-ready CSV tables");
    add_config(figures);
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite on one dataset");
    verify->add_option("dataset", dataset_path, "dataset directory")->required();
    std::string hole_ordering = "psd";
    verify->add_option("--hole-ordering", hole_ordering,
                       "hole-matrix operator ordering: psd (default) or literal")
        ->check(CLI::IsMember({"psd", "literal"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) {
            const auto problems = hubnode::run_verify(dataset_path);
            if (problems.empty()) {
                std::cout << "verify: OK " << dataset_path << "\n";
                return 0;
            }
            for (const auto& p : problems) std::cout << "verify: FAIL " << p << "\n";
            return 1;
        }

        const hubnode::SweepConfig cfg = hubnode::SweepConfig::load(config_path);
        if (simulate->parsed()) return report(hubnode::run_simulate(cfg), "simulate");
        if (diagnose->parsed()) return report(hubnode::run_diagnose(cfg), "diagnose");
        if (train->parsed()) return report(hubnode::run_train(cfg), "train");
        if (predict->parsed()) return report(hubnode::run_predict(cfg), "predict");
        if (evaluate->parsed()) return report(hubnode::run_evaluate(cfg), "evaluate");
        if (figures->parsed()) {
            hubnode::run_export_figures(cfg);
            std::cout << "export-figures: tables written\n";
            return 0;
        }
    } catch (const hubnode::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
