#pragma once

// Default values of the command-line tool. The library takes every one of
// these as an explicit parameter.

#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace retina::defaults {

inline constexpr std::string_view kToolVersion = "1.0.0";

inline constexpr std::uint64_t kSeed = 1;

// Simplified VELO.
inline constexpr int kLayers = 20;
inline constexpr double kLength = 700.0;  // mm
inline constexpr double kRInner = 8.0;    // mm
inline constexpr double kROuter = 42.0;   // mm
inline constexpr double kEtaMin = 1.0;
inline constexpr double kEtaMax = 6.0;
inline constexpr double kPHit = 0.5;
inline constexpr int kNMin = 2;
inline constexpr double kSmear = 1e-2;  // mm
inline constexpr double kNoiseMean = 250.0;
inline constexpr int kTracks = 50;
inline constexpr int kEvents = 10;

// Parameter ranges covered by the physical prior.
inline constexpr double kThetaMax = 0.73;
inline constexpr double kPhiMax = std::numbers::pi;

// Reconstruction.
inline constexpr double kResolution = 1e-3;  // rad, matching and n_grid
inline constexpr double kFullCost = 3.0;     // C
inline constexpr double kStepCost = 30.0;    // C0
inline constexpr double kAlpha = 1.0 / 3.0;
inline const std::vector<double> kSigmaSchedule = {0.3, 0.175, 0.05};
inline constexpr double kR0 = 1.5;
inline constexpr double kClusterRadius = 5e-4;  // rad
inline constexpr double kCutoffSigmas = 8.0;
inline constexpr double kGridSigma = 0.05;  // mm

// Toy model lattice.
inline constexpr double kToyAngleMax = 0.6;
inline constexpr double kToyOffsetLo = 0.0;
inline constexpr double kToyOffsetHi = 1.0;
inline constexpr double kToyStep = 1e-2;
inline constexpr double kToySigma = 2e-2;
inline constexpr double kToyRelativeThreshold = 0.7;

// Efficiency scans.
inline const std::vector<int> kMultiplicities = {50, 100, 150, 200,
                                                 250, 300, 350};
inline constexpr int kEventsPerPoint = 20;

}  // namespace retina::defaults
