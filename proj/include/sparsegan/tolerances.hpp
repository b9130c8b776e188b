#pragma once

// Numeric thresholds shared by the library and the test suites. Defined once
// so production code and oracles cannot drift apart.

namespace sparsegan::tol {

// Gradient checking (central finite differences, float64).
inline constexpr double kFdEps = 1e-5;
inline constexpr double kFdRelTol = 1e-4;

// Sparse coding.
inline constexpr double kEarlyStopResidual = 1e-10; // stop refining below this ||r||
inline constexpr double kGramCondLimit = 1e12;      // ridge fallback threshold
inline constexpr double kRidgeScale = 1e-8;         // ridge = scale * trace(G)/k
inline constexpr double kOrthogonalityTol = 1e-8;   // |<r, atom>| <= tol * ||h||
inline constexpr double kProjectionTol = 1e-8;      // ||P^2 - P||_F

// Gradient penalty.
inline constexpr double kGpNormEps = 1e-12; // inside sqrt, keeps the norm differentiable at 0

// Evaluation metrics.
inline constexpr double kBleuEpsilon = 1e-9; // smoothing for zero n-gram precisions

// Encoder output checks.
inline constexpr double kConvexSumTol = 1e-12;

} // namespace sparsegan::tol
