#pragma once

// Sweep configuration: a documented key = value text format with one entry
// per line ('#' starts a comment, lists are comma-separated). Unknown keys
// are configuration errors. The output root can be overridden with the
// HUBNODE_OUTPUT_ROOT environment variable.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hubnode/dataset.hpp"

namespace hubnode {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridPoint {
    double interaction = 0.0;  // U
    double trap = 0.0;         // V
};

inline std::string point_label(const GridPoint& pt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "U%.4f_V%.4f", pt.interaction, pt.trap);
    return buf;
}

struct SweepConfig {
    // Physics grid
    std::vector<double> u_grid = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0,
                                  2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75, 4.0, 4.25,
                                  4.5, 4.75, 5.0};
    std::vector<double> v_grid = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
    int m_sites = 6;
    int n_up = 3;
    int n_down = 3;
    double dt = 0.01;
    double t_end = 70.0;
    int stride = 1;
    int cumulant_stride = 1;

    // Diagnostics
    double diag_horizon = 50.0;
    double pearson_t0 = 10.0;
    double buildup_threshold = 0.65;
    double ratio_threshold = -0.1;

    // Learning
    int train_steps = 3000;
    int val_steps = 1000;
    std::string normalizer_mode_key = "global-per-part";
    int hidden = 512;
    bool paper_scale = false;  // hidden = 2048
    int window = 40;
    int batch = 16;
    int updates = 2000;
    double lr = 1e-4;
    int val_every = 50;
    bool hyper_search = false;
    int screen_updates = 250;
    double alpha_tr_d = 1.0;
    double alpha_tr_q = 1.0;
    double alpha_psd_d = 1.0;
    double alpha_psd_q = 1.0;
    std::vector<std::string> variants = {"none"};
    std::string train_scalar = "float";  // float | double
    int threads = 1;

    // Prediction / evaluation
    double predict_from = 40.0;
    std::vector<double> horizons = {20.0, 25.0};
    double divergence_horizon = 45.0;
    double guard = 10.0;
    std::string hole_ordering = "psd";  // psd | literal

    // Orchestration
    int workers = 2;
    std::uint64_t master_seed = 12345;
    std::filesystem::path output_root = "out";

    NormalizerMode normalizer_mode() const {
        if (normalizer_mode_key == "global-per-part") return NormalizerMode::GlobalPerPart;
        if (normalizer_mode_key == "per-feature") return NormalizerMode::PerFeature;
        throw ConfigError("normalizer_mode must be global-per-part or per-feature");
    }

    std::vector<GridPoint> grid_points() const {
        std::vector<GridPoint> pts;
        for (double v : v_grid)
            for (double u : u_grid) pts.push_back({u, v});
        return pts;
    }

    std::filesystem::path dataset_dir(const GridPoint& pt) const {
        return output_root / "sim" / point_label(pt);
    }
    std::filesystem::path model_dir(const GridPoint& pt, const std::string& variant) const {
        return output_root / "models" / variant / point_label(pt);
    }
    std::filesystem::path prediction_dir(const GridPoint& pt,
                                         const std::string& variant) const {
        return output_root / "pred" / variant / point_label(pt);
    }
    std::filesystem::path tables_dir() const { return output_root / "tables"; }

    std::string config_hash() const {
        const std::string canon = canonical_text();
        return hash_hex(fnv1a64(canon.data(), canon.size()));
    }

    std::string canonical_text() const {
        std::ostringstream os;
        os.precision(17);
        auto list = [&os](const auto& v) {
            for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
            os << ";";
        };
        list(u_grid);
        list(v_grid);
        os << m_sites << ";" << n_up << ";" << n_down << ";" << dt << ";" << t_end << ";"
           << stride << ";" << cumulant_stride << ";" << diag_horizon << ";" << pearson_t0
           << ";" << buildup_threshold << ";" << ratio_threshold << ";" << train_steps
           << ";" << val_steps << ";" << normalizer_mode_key << ";" << hidden << ";"
           << paper_scale << ";" << window << ";" << batch << ";" << updates << ";" << lr
           << ";" << val_every << ";" << hyper_search << ";" << screen_updates << ";"
           << alpha_tr_d << ";" << alpha_tr_q << ";" << alpha_psd_d << ";" << alpha_psd_q
           << ";";
        list(variants);
        os << train_scalar << ";" << predict_from << ";";
        list(horizons);
        os << divergence_horizon << ";" << guard << ";" << hole_ordering << ";"
           << master_seed;
        return os.str();
    }

    static SweepConfig load(const std::filesystem::path& path);
    static SweepConfig parse(std::istream& in);
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid numeric value for " + key + ": " + s);
    }
}

inline int parse_int(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw ConfigError("invalid integer value for " + key + ": " + s);
    }
}

inline bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("invalid boolean value for " + key + ": " + s);
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(parse_double(key, item));
    return out;
}

}  // namespace detail

inline SweepConfig SweepConfig::parse(std::istream& in) {
    SweepConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));

        if (key == "u_grid") cfg.u_grid = detail::parse_double_list(key, value);
        else if (key == "v_grid") cfg.v_grid = detail::parse_double_list(key, value);
        else if (key == "m_sites") cfg.m_sites = detail::parse_int(key, value);
        else if (key == "n_up") cfg.n_up = detail::parse_int(key, value);
        else if (key == "n_down") cfg.n_down = detail::parse_int(key, value);
        else if (key == "dt") cfg.dt = detail::parse_double(key, value);
        else if (key == "t_end") cfg.t_end = detail::parse_double(key, value);
        else if (key == "stride") cfg.stride = detail::parse_int(key, value);
        else if (key == "cumulant_stride") cfg.cumulant_stride = detail::parse_int(key, value);
        else if (key == "diag_horizon") cfg.diag_horizon = detail::parse_double(key, value);
        else if (key == "pearson_t0") cfg.pearson_t0 = detail::parse_double(key, value);
        else if (key == "buildup_threshold") cfg.buildup_threshold = detail::parse_double(key, value);
        else if (key == "ratio_threshold") cfg.ratio_threshold = detail::parse_double(key, value);
        else if (key == "train_steps") cfg.train_steps = detail::parse_int(key, value);
        else if (key == "val_steps") cfg.val_steps = detail::parse_int(key, value);
        else if (key == "normalizer_mode") cfg.normalizer_mode_key = value;
        else if (key == "hidden") cfg.hidden = detail::parse_int(key, value);
        else if (key == "paper_scale") cfg.paper_scale = detail::parse_bool(key, value);
        else if (key == "window") cfg.window = detail::parse_int(key, value);
        else if (key == "batch") cfg.batch = detail::parse_int(key, value);
        else if (key == "updates") cfg.updates = detail::parse_int(key, value);
        else if (key == "lr") cfg.lr = detail::parse_double(key, value);
        else if (key == "val_every") cfg.val_every = detail::parse_int(key, value);
        else if (key == "hyper_search") cfg.hyper_search = detail::parse_bool(key, value);
        else if (key == "screen_updates") cfg.screen_updates = detail::parse_int(key, value);
        else if (key == "alpha_tr_d") cfg.alpha_tr_d = detail::parse_double(key, value);
        else if (key == "alpha_tr_q") cfg.alpha_tr_q = detail::parse_double(key, value);
        else if (key == "alpha_psd_d") cfg.alpha_psd_d = detail::parse_double(key, value);
        else if (key == "alpha_psd_q") cfg.alpha_psd_q = detail::parse_double(key, value);
        else if (key == "variants") cfg.variants = detail::split_list(value);
        else if (key == "train_scalar") cfg.train_scalar = value;
        else if (key == "threads") cfg.threads = detail::parse_int(key, value);
        else if (key == "predict_from") cfg.predict_from = detail::parse_double(key, value);
        else if (key == "horizons") cfg.horizons = detail::parse_double_list(key, value);
        else if (key == "divergence_horizon") cfg.divergence_horizon = detail::parse_double(key, value);
        else if (key == "guard") cfg.guard = detail::parse_double(key, value);
        else if (key == "hole_ordering") cfg.hole_ordering = value;
        else if (key == "workers") cfg.workers = detail::parse_int(key, value);
        else if (key == "master_seed") cfg.master_seed = static_cast<std::uint64_t>(
                     std::stoull(value));
        else if (key == "output_root") cfg.output_root = value;
        else throw ConfigError("unknown configuration key: " + key);
    }

    if (const char* env = std::getenv("HUBNODE_OUTPUT_ROOT"); env && *env)
        cfg.output_root = env;

    if (cfg.u_grid.empty() || cfg.v_grid.empty())
        throw ConfigError("u_grid and v_grid must be nonempty");
    if (cfg.dt <= 0 || cfg.t_end < 0) throw ConfigError("dt must be > 0 and t_end >= 0");
    if (cfg.train_scalar != "float" && cfg.train_scalar != "double")
        throw ConfigError("train_scalar must be float or double");
    if (cfg.hole_ordering != "psd" && cfg.hole_ordering != "literal")
        throw ConfigError("hole_ordering must be psd or literal");
    cfg.normalizer_mode();  // validates the key
    for (double h : cfg.horizons)
        if (std::abs(h / cfg.dt - std::llround(h / cfg.dt)) > 1e-9)
            throw ConfigError("horizons must align with the dt grid");
    return cfg;
}

inline SweepConfig SweepConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    return parse(in);
}

}  // namespace hubnode
