#pragma once

namespace ybcav::units {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double c_vacuum_m_per_s = 299792458.0;

// time
inline constexpr double ns = 1e-9;
inline constexpr double us = 1e-6;
inline constexpr double ms = 1e-3;

// frequency
inline constexpr double kHz = 1e3;
inline constexpr double MHz = 1e6;
inline constexpr double GHz = 1e9;

// length
inline constexpr double nm = 1e-9;
inline constexpr double um = 1e-6;

/// Angular frequency (rad/s) from an ordinary frequency in Hz.
inline constexpr double rad_from_hz(double f_hz) { return two_pi * f_hz; }

/// Ordinary frequency in Hz from an angular frequency (rad/s).
inline constexpr double hz_from_rad(double w) { return w / two_pi; }

} // namespace ybcav::units
