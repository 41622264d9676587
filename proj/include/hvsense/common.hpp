// Shared constants, angle helpers, and error types.
#ifndef HVSENSE_COMMON_HPP
#define HVSENSE_COMMON_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace hvsense {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s, exact
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline constexpr const char* kVersionTag = "hvsense-0.1.0";

/// Wraps an angle into [0, 2*pi).
inline double normalize_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

/// Shortest circular distance between two angles, in [0, pi].
inline double angle_distance(double a, double b) {
  double d = normalize_angle(a - b);
  return std::min(d, kTwoPi - d);
}

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

struct DegenerateGeometryError : std::runtime_error {
  explicit DegenerateGeometryError(const std::string& what)
      : std::runtime_error(what) {}
};

struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

struct ReferenceMissingError : std::runtime_error {
  explicit ReferenceMissingError(const std::string& what)
      : std::runtime_error(what) {}
};

struct RankDeficiencyError : std::runtime_error {
  explicit RankDeficiencyError(const std::string& what)
      : std::runtime_error(what) {}
};

struct MissingTagError : std::runtime_error {
  explicit MissingTagError(const std::string& what)
      : std::runtime_error(what) {}
};

struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

struct NoPeaksError : std::runtime_error {
  explicit NoPeaksError(const std::string& what) : std::runtime_error(what) {}
};

struct SubspaceRankError : std::runtime_error {
  explicit SubspaceRankError(const std::string& what)
      : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hvsense

#endif  // HVSENSE_COMMON_HPP
