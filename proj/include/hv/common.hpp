#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hv {

/// Base error. Messages are prefixed with the subsystem that raised them
/// ("data: ...", "terrain: ...") so CLI output points at the failing stage.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad input files or inconsistent datasets (CLI exit code 2).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Bad configuration or command usage (CLI exit code 1).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Runtime failures: divergence, shape mismatches, broken checkpoints
/// (CLI exit code 3).
class ModelError : public Error {
public:
    explicit ModelError(const std::string& msg) : Error(msg) {}
};

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Deterministic RNG. splitmix64 core with hand-rolled uniform/normal draws:
/// the standard <random> distributions are not algorithm-pinned, and we need
/// bit-reproducible runs for checkpoints and seeded tests.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed + 0x9E3779B97F4A7C15ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    /// Box-Muller, one draw per call (the pair's second half is discarded
    /// to keep the stream position independent of call parity).
    double normal(double mu = 0.0, double sigma = 1.0);

private:
    std::uint64_t state_;
};

/// Per-tensor seed derived from the run seed and the tensor name, so
/// initialization does not depend on construction order or on which model
/// parts are enabled.
inline std::uint64_t derive_seed(std::uint64_t base, const std::string& name) {
    return fnv1a64(name, base ^ 0x51ED270B9D1380E5ULL);
}

} // namespace hv
