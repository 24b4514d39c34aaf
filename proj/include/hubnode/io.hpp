#pragma once

// Raw-array persistence: little-endian IEEE-754 float64, row-major, one file
// per artifact, validated by size and content hash recorded in a JSON
// manifest next to the arrays.

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hubnode/common.hpp"

namespace hubnode {

static_assert(std::endian::native == std::endian::little,
              "array files are little-endian; byte swapping is not implemented");

using RowMatrixXr =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void write_f64(const std::filesystem::path& path, const double* data,
                      std::size_t count) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw IoError("short write: " + path.string());
}

inline std::vector<double> read_f64(const std::filesystem::path& path,
                                    std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected_count * sizeof(double))
        throw IoError("size mismatch for " + path.string() + ": have " +
                      std::to_string(bytes) + " bytes, expected " +
                      std::to_string(expected_count * sizeof(double)));
    in.seekg(0);
    std::vector<double> v(expected_count);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("short read: " + path.string());
    return v;
}

inline std::string buffer_hash(const double* data, std::size_t count) {
    return hash_hex(fnv1a64(data, count * sizeof(double)));
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

// Writes one named row-major array and records its shape and hash.
inline void put_array(const std::filesystem::path& dir, nlohmann::json& arrays,
                      const std::string& name, const double* data, std::size_t rows,
                      std::size_t cols) {
    write_f64(dir / (name + ".f64"), data, rows * cols);
    arrays[name] = {{"rows", rows}, {"cols", cols}, {"hash", buffer_hash(data, rows * cols)}};
}

// Reads a named array, validating shape and hash against the manifest entry.
inline std::vector<double> get_array(const std::filesystem::path& dir,
                                     const nlohmann::json& arrays, const std::string& name,
                                     std::size_t* rows_out = nullptr,
                                     std::size_t* cols_out = nullptr) {
    if (!arrays.contains(name)) throw IoError("manifest has no array entry: " + name);
    const auto& e = arrays.at(name);
    const auto rows = e.at("rows").get<std::size_t>();
    const auto cols = e.at("cols").get<std::size_t>();
    auto v = read_f64(dir / (name + ".f64"), rows * cols);
    if (buffer_hash(v.data(), v.size()) != e.at("hash").get<std::string>())
        throw IoError("content hash mismatch for array: " + name);
    if (rows_out) *rows_out = rows;
    if (cols_out) *cols_out = cols;
    return v;
}

}  // namespace hubnode
