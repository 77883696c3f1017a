#include "gridmomentum/stochastic.hpp"

#include "gridmomentum/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace gridmomentum {

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void OUProcessSet::add(const OUParams& p, std::uint64_t seed) {
    if (!(p.tau > 0)) throw ValidationError("noise", "tau", "must be > 0");
    if (!(p.sigma >= 0)) throw ValidationError("noise", "sigma", "must be >= 0");
    params_.push_back(p);
    rng_.emplace_back(seed);
    normal_.emplace_back(0.0, 1.0);
    eta_.push_back(p.sigma * normal_.back()(rng_.back()));
}

const std::vector<double>& OUProcessSet::step(double h) {
    for (std::size_t i = 0; i < eta_.size(); ++i) {
        const auto& p = params_[i];
        const double decay = std::exp(-h / p.tau);
        const double z = normal_[i](rng_[i]);
        eta_[i] = eta_[i] * decay + p.sigma * std::sqrt(1.0 - decay * decay) * z;
    }
    return eta_;
}

OUProcessSet make_load_noise(const PowerSystemCase& c, double sigma_frac, double tau,
                             std::uint64_t seed) {
    OUProcessSet set;
    for (std::size_t i = 0; i < c.loads.size(); ++i)
        set.add(OUParams{tau, sigma_frac, seed}, stream_seed(seed, i));
    return set;
}

OUProcessSet make_load_noise(const PowerSystemCase& c, std::uint64_t seed) {
    OUProcessSet set;
    for (std::size_t i = 0; i < c.loads.size(); ++i) {
        const auto& n = c.loads[i].noise;
        set.add(n ? *n : OUParams{2.0, 0.0, seed}, stream_seed(seed, i));
    }
    return set;
}

std::optional<std::uint64_t> seed_from_env() {
    const char* v = std::getenv(kSeedEnvVar);
    if (!v || !*v) return std::nullopt;
    try {
        std::size_t pos = 0;
        const auto s = std::stoull(v, &pos);
        if (pos != std::string(v).size()) throw std::invalid_argument("trailing");
        return s;
    } catch (const std::exception&) {
        throw ValidationError(kSeedEnvVar, "", std::string("not an unsigned integer: ") + v);
    }
}

std::uint64_t resolve_seed(std::uint64_t fallback) {
    return seed_from_env().value_or(fallback);
}

}  // namespace gridmomentum
