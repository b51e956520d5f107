#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ewhmpc {

/// Raised for contract violations on inputs (bad configs, non-finite values).
class Error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const char* message)
{
    if (!condition) [[unlikely]] {
        throw Error(message);
    }
}

inline void require(bool condition, const std::string& message)
{
    if (!condition) [[unlikely]] {
        throw Error(message);
    }
}

inline void require_finite(double value, const char* what)
{
    if (!std::isfinite(value)) [[unlikely]] {
        throw Error(std::string(what) + " must be finite");
    }
}

inline constexpr int kMinutesPerDay = 1440;

// Volumetric heat capacity of water, kWh per litre per kelvin.
inline constexpr double kWaterHeatCapacity = 1.163e-3;

// Ambient temperature the catalogue standing-loss figure refers to.
inline constexpr double kDispersionTankTemperature = 65.0;
inline constexpr double kDispersionAmbientReference = 20.0;

/// splitmix64 finalizer, used to derive independent stream seeds from a root
/// seed and an index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace ewhmpc
