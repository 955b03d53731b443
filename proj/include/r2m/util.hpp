// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace r2m {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a. Stable across platforms; used to derive seeds from ids.
std::uint64_t fnv1a64(std::string_view data) noexcept;

/// Mixes `value` into `state` (order-sensitive).
std::uint64_t hash_combine(std::uint64_t state, std::uint64_t value) noexcept;
std::uint64_t hash_double(double value) noexcept;

/// Seeded random source. Distributions are computed from raw mt19937_64 draws
/// so sequences are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

private:
    std::mt19937_64 engine_;
};

/// JSON number for `value`, stored as an integer when it is integral so that
/// `500` serializes as `500` rather than `500.0`.
nlohmann::json json_number(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// "0.6704±0.0609" style cell.
std::string format_mean_std(double mean, double stddev, int decimals);

}  // namespace r2m
