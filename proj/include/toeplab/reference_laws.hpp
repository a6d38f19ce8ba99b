#pragma once

#include <vector>

#include "toeplab/spectral_stats.hpp"

namespace toeplab {

enum class LawFamily { SemiPoisson, Poisson, WignerGOE };
enum class Observable { SpacingPn, FormFactor, Ratio };

/// Closed-form reference distribution. For SpacingPn, n counts the levels
/// inside the gap (n = 0 is the nearest-neighbour distribution).
struct ReferenceLaw {
    LawFamily family = LawFamily::SemiPoisson;
    Observable observable = Observable::SpacingPn;
    int n = 0;
};

/// Evaluate a reference law at x >= 0.
///   semi-Poisson: P_n(s) = 2^{2(n+1)}/(2n+1)! s^{2n+1} e^{-2s},
///                 K(tau) = (2 + pi^2 tau^2)/(4 + pi^2 tau^2), P(r) = 6r/(1+r)^4
///   Poisson:      P_n(s) = s^n e^{-s}/n!, K = 1, P(r) = 1/(1+r)^2
///   Wigner (GOE surmise): P(s) = (pi/2) s exp(-pi s^2/4)
double evaluate_law(const ReferenceLaw& law, double x);

struct FitResult {
    std::vector<double> parameters;
    double residual_norm = 0.0;  // sqrt of the weighted sum of squares
    bool converged = false;
};

/// Weighted least-squares fit of A e^{-a s} + B e^{-b s} (A, B >= 0,
/// b > a > 0) to a spacing histogram; weights are 1/std_error^2 and
/// zero-count bins are excluded. Parameters come back as (A, a, B, b) with
/// the slow component first. Falls back to a deterministic multistart when
/// the caption starting point does not converge.
FitResult fit_spacing_mixture(const HistogramEstimate& hist);

/// Weighted least-squares fit of c (1 + alpha r + beta r^2)^{-1} to a ratio
/// histogram. Parameters come back as (c, alpha, beta).
FitResult fit_ratio_rational(const HistogramEstimate& hist);

}  // namespace toeplab
