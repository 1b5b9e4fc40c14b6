#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "causa/core.hpp"

namespace causa {

enum class ToySystem { S1, S2 };

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

struct ToySystemSpec {
    ToySystem system = ToySystem::S1;
    /// The first n_vars equations of the system are simulated (3..7).
    int n_vars = 7;
    int n_samples = 1500;
    /// Defaults to [0, 1) for S1 and [0, 10) for S2.
    std::optional<Range> coeff_range;
    Range noise_range{0.0, 1.0};
    std::uint64_t seed = 0;
    /// Isolated uniform-noise columns appended after the system variables.
    int extra_noise_vars = 0;

    void validate() const;
    Range effective_coeff_range() const;
};

using EdgeKey = std::tuple<std::string, int, std::string>;

struct GroundTruth {
    CausalGraph graph;
    /// Realized coefficient attached to each structural edge.
    std::map<EdgeKey, double> coefficients;
};

struct SyntheticData {
    TimeSeriesDataset data;
    GroundTruth truth;
};

inline constexpr int kBurnIn = 100;
inline constexpr double kSaturation = 1e6;

/// Largest lag appearing in the system's equations.
int max_lag(ToySystem system) noexcept;
LagWindow default_window(ToySystem system) noexcept;
std::string to_string(ToySystem system);
ToySystem parse_toy_system(std::string_view name);

/// Simulates the selected toy system. Every variable is saturated to
/// [-1e6, 1e6] at each step, denominators 1 + c*x are kept at least 1e-3 away
/// from zero, and the returned columns are mean-centered.
SyntheticData generate_toy(const ToySystemSpec& spec);

struct VarTerm {
    std::size_t source = 0;
    int lag = 1;
    std::size_t target = 0;
    double coefficient = 0.0;
};

/// Linear VAR with unit Gaussian innovations.
struct VarModel {
    std::vector<std::string> names;
    LagWindow window{1, 1};
    std::vector<VarTerm> terms;

    /// Spectral radius of the companion matrix.
    double spectral_radius() const;
    GroundTruth ground_truth() const;
};

SyntheticData simulate_var(const VarModel& model, int n_samples, std::uint64_t seed);

/// Random stable VAR. Each (source, lag, target) slot is an edge with
/// probability `density`; coefficient magnitudes are uniform in
/// `coeff_range` with random sign. Coefficients are redrawn until the
/// companion matrix has spectral radius below 0.95 (at most 1000 retries).
SyntheticData generate_var(int n_vars, int n_samples, double density, Range coeff_range, LagWindow window,
                           std::uint64_t seed);

}  // namespace causa
