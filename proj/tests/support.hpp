#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "causa/core.hpp"

namespace causa::test {

inline Eigen::MatrixXd normals(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = n01(rng);
    return m;
}

/// Linear lagged system over named columns: each term adds coef * source(t - lag)
/// to target(t), on top of unit Gaussian noise.
struct Term {
    int source;
    int lag;
    int target;
    double coef;
};

inline TimeSeriesDataset linear_system(std::vector<std::string> names, const std::vector<Term>& terms, int samples,
                                       std::uint64_t seed) {
    const int n = static_cast<int>(names.size());
    const int burn = 50;
    Eigen::MatrixXd x = normals(samples + burn, n, seed);
    for (int t = 0; t < samples + burn; ++t)
        for (const auto& term : terms)
            if (t >= term.lag) x(t, term.target) += term.coef * x(t - term.lag, term.source);
    return TimeSeriesDataset(std::move(names), x.bottomRows(samples).eval());
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("causa_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string operator/(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace causa::test
