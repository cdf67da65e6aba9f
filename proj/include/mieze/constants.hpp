#pragma once

#include <numbers>

namespace mieze {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;

// Neutron constants. Only the magnitude of the gyromagnetic ratio is stored.
struct PhysicalConstants {
  double neutron_mass;   // kg
  double planck;         // J s
  double hbar;           // J s
  double gyromagnetic;   // rad s^-1 T^-1
};

// CODATA 2018.
inline constexpr PhysicalConstants kCodata2018{
    1.67492749804e-27,
    6.62607015e-34,
    6.62607015e-34 / (2.0 * std::numbers::pi),
    1.83247171e8,
};

}  // namespace mieze
