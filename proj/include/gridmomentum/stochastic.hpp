#pragma once

// Ornstein-Uhlenbeck load noise with exact transitions.

#include "gridmomentum/case_model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace gridmomentum {

/// Environment variable that overrides any seed given on the command line.
inline constexpr const char* kSeedEnvVar = "GRIDMOMENTUM_SEED";

/// Independent OU processes, one per load, each with its own RNG stream.
class OUProcessSet {
public:
    OUProcessSet() = default;

    /// Appends a process started from its stationary distribution.
    void add(const OUParams& params, std::uint64_t stream_seed);

    /// Advances every process by h seconds with the exact transition
    /// eta' = eta*exp(-h/tau) + sigma*sqrt(1-exp(-2h/tau))*z.
    const std::vector<double>& step(double h);

    const std::vector<double>& eta() const { return eta_; }
    std::size_t size() const { return eta_.size(); }
    bool empty() const { return eta_.empty(); }
    const OUParams& params(std::size_t i) const { return params_[i]; }

private:
    std::vector<OUParams> params_;
    std::vector<double> eta_;
    std::vector<std::mt19937_64> rng_;
    std::vector<std::normal_distribution<double>> normal_;
};

/// Derives the seed of stream `index` from a master seed (splitmix64 mixing).
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

/// One process per load with common sigma and tau.
OUProcessSet make_load_noise(const PowerSystemCase& c, double sigma_frac, double tau,
                             std::uint64_t seed);

/// One process per load using each load's own noise block; loads without
/// one get sigma = 0.
OUProcessSet make_load_noise(const PowerSystemCase& c, std::uint64_t seed);

/// Seed from the environment override if set, else `fallback`.
std::uint64_t resolve_seed(std::uint64_t fallback);
std::optional<std::uint64_t> seed_from_env();

}  // namespace gridmomentum
