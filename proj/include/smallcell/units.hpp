#pragma once

namespace smallcell {

// Internal units are meters, seconds, bytes and normalized power
// (transmit power divided by noise variance). Config files may speak kmph;
// convert on ingestion.

inline constexpr double kmph_to_mps(double kmph) { return kmph * (1000.0 / 3600.0); }
inline constexpr double mps_to_kmph(double mps) { return mps * 3.6; }

/// Variance conversion for speeds given in kmph^2.
inline constexpr double kmph2_to_mps2(double kmph2) {
  return kmph2 * (1000.0 / 3600.0) * (1000.0 / 3600.0);
}

}  // namespace smallcell
