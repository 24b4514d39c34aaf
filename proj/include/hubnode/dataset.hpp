#pragma once

// Learning representation of Hermitian blocks and its persistence.
//
// Packing layout for an n x n Hermitian matrix (n^2 reals): the n diagonal
// values in index order, then for every upper-triangle position (p < q) in
// row-major order the pair (Re A[p,q], Im A[p,q]). For the 36 x 36 mixed-spin
// block this is 36 + 630 * 2 = 1296 values.

#include <optional>

#include "hubnode/io.hpp"
#include "hubnode/model.hpp"

namespace hubnode {

inline int packed_width(int n) { return n * n; }

inline VectorXr pack_hermitian(const MatrixXc& a, double herm_tol = 1e-9) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw DataError("pack requires a square matrix");
    if ((a - a.adjoint()).cwiseAbs().maxCoeff() > herm_tol)
        throw DataError("pack input is not Hermitian within tolerance");
    const MatrixXc h = 0.5 * (a + a.adjoint());
    VectorXr out(packed_width(n));
    for (int d = 0; d < n; ++d) out[d] = h(d, d).real();
    int k = n;
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) {
            out[k++] = h(p, q).real();
            out[k++] = h(p, q).imag();
        }
    return out;
}

inline MatrixXc unpack_hermitian(const Eigen::Ref<const VectorXr>& v) {
    const int n = static_cast<int>(std::llround(std::sqrt(double(v.size()))));
    if (n * n != v.size()) throw DataError("packed vector has non-square width");
    MatrixXc a = MatrixXc::Zero(n, n);
    for (int d = 0; d < n; ++d) a(d, d) = v[d];
    int k = n;
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) {
            const Complex z(v[k], v[k + 1]);
            k += 2;
            a(p, q) = z;
            a(q, p) = std::conj(z);
        }
    return a;
}

// True for packed positions holding an imaginary part.
inline bool packed_position_is_imag(int idx, int n) {
    return idx >= n && ((idx - n) % 2 == 1);
}

enum class NormalizerMode { GlobalPerPart, PerFeature };

// Min-max affine map fitted on the training block only; the same constants
// are applied to validation and test rows (values outside [0,1] allowed).
class Normalizer {
public:
    static Normalizer fit(const Eigen::Ref<const RowMatrixXr>& train, int matrix_dim,
                          NormalizerMode mode) {
        if (train.rows() == 0) throw DataError("normalizer fit needs a nonempty block");
        Normalizer nz;
        nz.mode_ = mode;
        nz.matrix_dim_ = matrix_dim;
        const int w = static_cast<int>(train.cols());
        if (mode == NormalizerMode::GlobalPerPart) {
            double re_min = 1e300, re_max = -1e300, im_min = 1e300, im_max = -1e300;
            for (int c = 0; c < w; ++c) {
                const double lo = train.col(c).minCoeff();
                const double hi = train.col(c).maxCoeff();
                if (packed_position_is_imag(c, matrix_dim)) {
                    im_min = std::min(im_min, lo);
                    im_max = std::max(im_max, hi);
                } else {
                    re_min = std::min(re_min, lo);
                    re_max = std::max(re_max, hi);
                }
            }
            if (!(re_max > re_min))
                throw DataError("degenerate real-part pool in normalizer fit");
            if (!(im_max > im_min))
                throw DataError("degenerate imaginary-part pool in normalizer fit");
            nz.mins_ = VectorXr(w);
            nz.maxs_ = VectorXr(w);
            for (int c = 0; c < w; ++c) {
                const bool im = packed_position_is_imag(c, matrix_dim);
                nz.mins_[c] = im ? im_min : re_min;
                nz.maxs_[c] = im ? im_max : re_max;
            }
            nz.re_min_ = re_min;
            nz.re_max_ = re_max;
            nz.im_min_ = im_min;
            nz.im_max_ = im_max;
        } else {
            nz.mins_ = train.colwise().minCoeff();
            nz.maxs_ = train.colwise().maxCoeff();
            for (int c = 0; c < w; ++c)
                if (!(nz.maxs_[c] > nz.mins_[c]))
                    throw DataError("degenerate feature " + std::to_string(c) +
                                    " in per-feature normalizer fit");
        }
        return nz;
    }

    VectorXr apply(const Eigen::Ref<const VectorXr>& x) const {
        return (x - mins_).cwiseQuotient(maxs_ - mins_);
    }
    VectorXr invert(const Eigen::Ref<const VectorXr>& y) const {
        return mins_ + y.cwiseProduct(maxs_ - mins_);
    }
    RowMatrixXr apply_rows(const Eigen::Ref<const RowMatrixXr>& x) const {
        RowMatrixXr out(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            out.row(r) = apply(x.row(r).transpose()).transpose();
        return out;
    }
    RowMatrixXr invert_rows(const Eigen::Ref<const RowMatrixXr>& y) const {
        RowMatrixXr out(y.rows(), y.cols());
        for (Eigen::Index r = 0; r < y.rows(); ++r)
            out.row(r) = invert(y.row(r).transpose()).transpose();
        return out;
    }

    // Per-position scale (max - min); the Jacobian of invert().
    const VectorXr& mins() const { return mins_; }
    VectorXr scales() const { return maxs_ - mins_; }
    NormalizerMode mode() const { return mode_; }
    int matrix_dim() const { return matrix_dim_; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["mode"] = mode_ == NormalizerMode::GlobalPerPart ? "global-per-part" : "per-feature";
        j["matrix_dim"] = matrix_dim_;
        if (mode_ == NormalizerMode::GlobalPerPart) {
            j["re_min"] = re_min_;
            j["re_max"] = re_max_;
            j["im_min"] = im_min_;
            j["im_max"] = im_max_;
        } else {
            j["mins"] = std::vector<double>(mins_.data(), mins_.data() + mins_.size());
            j["maxs"] = std::vector<double>(maxs_.data(), maxs_.data() + maxs_.size());
        }
        return j;
    }

    static Normalizer from_json(const nlohmann::json& j) {
        Normalizer nz;
        nz.matrix_dim_ = j.at("matrix_dim").get<int>();
        const int w = packed_width(nz.matrix_dim_);
        if (j.at("mode").get<std::string>() == "global-per-part") {
            nz.mode_ = NormalizerMode::GlobalPerPart;
            nz.re_min_ = j.at("re_min").get<double>();
            nz.re_max_ = j.at("re_max").get<double>();
            nz.im_min_ = j.at("im_min").get<double>();
            nz.im_max_ = j.at("im_max").get<double>();
            nz.mins_ = VectorXr(w);
            nz.maxs_ = VectorXr(w);
            for (int c = 0; c < w; ++c) {
                const bool im = packed_position_is_imag(c, nz.matrix_dim_);
                nz.mins_[c] = im ? nz.im_min_ : nz.re_min_;
                nz.maxs_[c] = im ? nz.im_max_ : nz.re_max_;
            }
        } else {
            nz.mode_ = NormalizerMode::PerFeature;
            const auto mins = j.at("mins").get<std::vector<double>>();
            const auto maxs = j.at("maxs").get<std::vector<double>>();
            nz.mins_ = Eigen::Map<const VectorXr>(mins.data(), mins.size());
            nz.maxs_ = Eigen::Map<const VectorXr>(maxs.data(), maxs.size());
        }
        return nz;
    }

private:
    NormalizerMode mode_ = NormalizerMode::GlobalPerPart;
    int matrix_dim_ = 0;
    VectorXr mins_, maxs_;
    double re_min_ = 0, re_max_ = 0, im_min_ = 0, im_max_ = 0;
};

struct SplitSpec {
    int train_steps = 3000;
    int val_steps = 1000;

    int train_begin() const { return 0; }
    int train_end() const { return train_steps; }
    int val_end() const { return train_steps + val_steps; }
};

// One simulated configuration: everything extracted along the trajectory.
// Cumulant norms may live on a coarser uniform grid (cumulant_stride) than
// the snapshot grid; everything else is per snapshot.
struct TrajectoryData {
    ModelParams params;
    int n_up = 3, n_down = 3;
    double dt = 0.01;
    double t_end = 70.0;
    int stride = 1;
    int cumulant_stride = 1;
    double e_pot0 = 0.0;  // initial potential energy of the quenched state

    std::vector<double> times;
    RowMatrixXr packed_2rdm;     // steps x matrix_dim^2, raw (unnormalized)
    RowMatrixXr occupations;     // steps x m_sites
    RowMatrixXr doublons;        // steps x m_sites
    RowMatrixXr conservation;    // steps x 2: norm, energy
    RowMatrixXr e_corr;          // steps x 1
    std::vector<double> cumulant_times;
    RowMatrixXr cumulant_norms;  // |cumulant_times| x 4: d12_upup, d12_updown, d123, d123_kernel
    std::optional<Normalizer> normalizer;  // fitted on the train split

    int num_steps() const { return static_cast<int>(times.size()); }
};

inline const char* kDatasetSchema = "hubnode-dataset-v1";

inline void write_trajectory(const std::filesystem::path& dir, const TrajectoryData& d,
                             const std::string& config_hash = "",
                             const std::string& code_version = "") {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["schema"] = kDatasetSchema;
    manifest["m_sites"] = d.params.m_sites;
    manifest["n_up"] = d.n_up;
    manifest["n_down"] = d.n_down;
    manifest["hopping"] = d.params.hopping;
    manifest["interaction"] = d.params.interaction;
    manifest["trap"] = d.params.trap_strength;
    manifest["dt"] = d.dt;
    manifest["t_end"] = d.t_end;
    manifest["stride"] = d.stride;
    manifest["cumulant_stride"] = d.cumulant_stride;
    manifest["e_pot0"] = d.e_pot0;
    manifest["num_steps"] = d.num_steps();
    manifest["packing"] = {{"layout", "diag-then-upper-row-major"},
                           {"matrix_dim", d.params.m_sites * d.params.m_sites},
                           {"width", packed_width(d.params.m_sites * d.params.m_sites)}};
    if (d.normalizer) manifest["normalizer"] = d.normalizer->to_json();
    if (!config_hash.empty()) manifest["config_hash"] = config_hash;
    if (!code_version.empty()) manifest["code_version"] = code_version;

    nlohmann::json arrays;
    put_array(dir, arrays, "times", d.times.data(), d.times.size(), 1);
    put_array(dir, arrays, "packed_2rdm", d.packed_2rdm.data(),
              d.packed_2rdm.rows(), d.packed_2rdm.cols());
    put_array(dir, arrays, "occupations", d.occupations.data(), d.occupations.rows(),
              d.occupations.cols());
    put_array(dir, arrays, "doublons", d.doublons.data(), d.doublons.rows(),
              d.doublons.cols());
    put_array(dir, arrays, "conservation", d.conservation.data(), d.conservation.rows(),
              d.conservation.cols());
    put_array(dir, arrays, "e_corr", d.e_corr.data(), d.e_corr.rows(), d.e_corr.cols());
    put_array(dir, arrays, "cumulant_times", d.cumulant_times.data(),
              d.cumulant_times.size(), 1);
    put_array(dir, arrays, "cumulant_norms", d.cumulant_norms.data(),
              d.cumulant_norms.rows(), d.cumulant_norms.cols());
    manifest["arrays"] = arrays;
    write_json(dir / "manifest.json", manifest);
}

inline TrajectoryData read_trajectory(const std::filesystem::path& dir) {
    const auto manifest = read_json(dir / "manifest.json");
    if (manifest.at("schema").get<std::string>() != kDatasetSchema)
        throw IoError("unsupported dataset schema in " + dir.string());
    TrajectoryData d;
    d.params.m_sites = manifest.at("m_sites").get<int>();
    d.n_up = manifest.at("n_up").get<int>();
    d.n_down = manifest.at("n_down").get<int>();
    d.params.hopping = manifest.at("hopping").get<double>();
    d.params.interaction = manifest.at("interaction").get<double>();
    d.params.trap_strength = manifest.at("trap").get<double>();
    d.dt = manifest.at("dt").get<double>();
    d.t_end = manifest.at("t_end").get<double>();
    d.stride = manifest.at("stride").get<int>();
    d.cumulant_stride = manifest.at("cumulant_stride").get<int>();
    d.e_pot0 = manifest.at("e_pot0").get<double>();
    if (manifest.contains("normalizer"))
        d.normalizer = Normalizer::from_json(manifest.at("normalizer"));

    const auto& arrays = manifest.at("arrays");
    auto load = [&](const std::string& name, RowMatrixXr& dst) {
        std::size_t rows = 0, cols = 0;
        auto v = get_array(dir, arrays, name, &rows, &cols);
        dst = Eigen::Map<const RowMatrixXr>(v.data(), rows, cols);
    };
    auto load_vec = [&](const std::string& name, std::vector<double>& dst) {
        std::size_t rows = 0, cols = 0;
        auto v = get_array(dir, arrays, name, &rows, &cols);
        dst.assign(v.begin(), v.end());
    };
    load_vec("times", d.times);
    load("packed_2rdm", d.packed_2rdm);
    load("occupations", d.occupations);
    load("doublons", d.doublons);
    load("conservation", d.conservation);
    load("e_corr", d.e_corr);
    load_vec("cumulant_times", d.cumulant_times);
    load("cumulant_norms", d.cumulant_norms);
    if (static_cast<int>(d.times.size()) != manifest.at("num_steps").get<int>())
        throw IoError("num_steps disagrees with times array");
    return d;
}

}  // namespace hubnode
