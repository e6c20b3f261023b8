#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpinn {

// Error taxonomy. CLI exit codes: ConfigError -> 1, NumericError -> 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularSystemError : NumericError {
    using NumericError::NumericError;
};

struct DegenerateDistributionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic uniform deviates. The raw 64-bit stream comes from
// std::mt19937_64; the float mapping is fixed here so the sequence does not
// depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform on [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Seed mixing for deriving independent sub-streams from one run seed.
std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a over raw bytes; used for content hashes in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);
std::string hash_hex(std::uint64_t h);

// Shortest round-trip decimal formatting for doubles (CSV cells).
std::string format_double(double v);

// RFC 4180 field quoting: wraps in quotes when the field contains a comma,
// quote, or newline; embedded quotes are doubled.
std::string csv_escape(const std::string& field);

std::string join_csv_row(const std::vector<std::string>& fields);

}  // namespace rpinn
