#pragma once

// Model constants used when a config leaves them unset. None of these are
// published for the original case studies; they are chosen to give
// well-posed desk-scale instances. Acceptance checks depend only on
// invariants and trends, never on these particular numbers.

namespace drne::defaults {

// Example 1: decision boxes [-b, b], support box [-b, b]^2.
inline constexpr double kExample1Bound = 20.0;

// Nash-Cournot.
inline constexpr double kCournotProduction = 1.0;  // c_i
inline constexpr double kCournotW1 = 10.0;
inline constexpr double kCournotW2 = 1.0;
inline constexpr double kCournotXMax = 4.0;
inline constexpr double kCournotDemandMin = 3.0;
inline constexpr double kCournotXiLo = 0.5;
inline constexpr double kCournotXiHi = 1.5;
inline constexpr int kCournotSamples = 10;
// Truths: discretized normals with these means and a common sigma.
inline constexpr double kCournotTruthMean[3] = {0.9, 1.0, 1.1};
inline constexpr double kCournotTruthSigma = 0.15;
inline constexpr double kCournotRadius[3] = {0.05, 0.1, 0.15};
inline constexpr double kCournotStep = 0.01;  // tau for every firm

// Peer-to-peer market, star network around participant 0.
inline constexpr int kP2PAgents = 5;
inline constexpr double kP2PTradeCap = 3.0;     // chi
inline constexpr double kP2PPrice = 0.1;         // base c_mi
inline constexpr double kP2PPriceSpread = 0.02;  // c_mi = base + spread * ((i + 2m) mod 5)
inline constexpr double kP2POmega1 = 0.25;
inline constexpr double kP2POmega2 = 0.0;
inline constexpr double kP2PDemandTarget[5] = {4.0, 5.0, 3.0, 6.0, 4.0};
inline constexpr double kP2PRenewable[5] = {1.0, 2.0, 0.5, 1.5, 1.0};
inline constexpr double kP2PRenewableSpread = 0.2;  // uniform +-20% across studies
inline constexpr double kP2PGenMax = 10.0;
inline constexpr double kP2PDemandMax = 10.0;
inline constexpr double kP2PZetaLo[2] = {0.5, 0.0};
inline constexpr double kP2PZetaHi[2] = {2.5, 1.0};
inline constexpr double kP2PZetaMean[2] = {1.5, 0.5};
inline constexpr double kP2PZetaSigma[2] = {0.3, 0.2};
inline constexpr int kP2PSamples = 8;
inline constexpr double kP2PRadiusLo = 0.1;
inline constexpr double kP2PRadiusHi = 0.25;
inline constexpr double kP2PStep = 0.2;  // tau for every participant

// Discretized truths.
inline constexpr int kTruthAtoms = 50;

// Grids for the discretized worst-case oracle.
inline constexpr int kGrid1D = 101;
inline constexpr int kGrid2D = 51;

// Calibration constants (illustrative, not concentration-certified).
inline constexpr double kCalibrationC = 3.0;
inline constexpr double kCalibrationB = 1.0;
inline constexpr double kCalibrationA = 2.0;

}  // namespace drne::defaults
