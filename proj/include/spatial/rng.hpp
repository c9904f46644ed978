#pragma once

#include <cstdint>
#include <random>

namespace spatial {

using Engine = std::mt19937_64;

// Stateless streams keyed by (seed, stream, index). Parallel loops draw from
// these so results do not depend on the schedule.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) noexcept;

/// Uniform on the open interval (0, 1).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;
/// Standard normal via Box-Muller on two counter uniforms.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

}  // namespace spatial
