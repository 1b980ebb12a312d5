#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string_view>

#include "cirlab/errors.hpp"

namespace cirlab {

/// Coefficients of dX = kappa (theta - X) dt + sigma sqrt(X) dW on [0, horizon].
struct CirParams {
    double kappa = 2.0;
    double theta = 0.02;
    double sigma = 0.2;
    double x0 = 0.0;
    double horizon = 1.0;

    /// Throws std::invalid_argument unless kappa, theta, sigma, horizon > 0 and x0 >= 0.
    void validate() const;
};

/// Coefficients of the Lamperti-transformed equation for Y = sqrt(X):
/// dY = (alpha / Y - beta Y) dt + gamma dW.
struct TransformedParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

enum class RegimeKind {
    StrongInverse,  // kappa*theta > sigma^2
    NonnegAlpha,    // 4*kappa*theta >= sigma^2
    NegAlpha,       // 4*kappa*theta < sigma^2
};

struct Regime {
    RegimeKind kind = RegimeKind::NonnegAlpha;
    bool feller = false;  // 2*kappa*theta > sigma^2
};

std::string_view to_string(RegimeKind kind);

/// alpha = (4 kappa theta - sigma^2) / 8, beta = kappa / 2, gamma = sigma / 2.
///
/// When 4 kappa theta and sigma^2 agree to a few ulps, alpha is returned as
/// exactly 0, so that parameter sets sitting on the alpha = 0 boundary (for
/// example kappa = 2, theta = 0.02, sigma = 0.4) are not pushed to either
/// side by rounding in sigma * sigma.
TransformedParams transform(const CirParams& p);

/// Classifies the parameter set. Boundaries follow each condition literally:
/// kappa*theta == sigma^2 is not StrongInverse, alpha == 0 is NonnegAlpha,
/// 2*kappa*theta == sigma^2 is not Feller. Equality is tested with the same
/// few-ulp tolerance as transform().
Regime classify_regime(const CirParams& p);

/// E[X(t + dt) | X(t) = x] = e^{-kappa dt} x + theta (1 - e^{-kappa dt}).
double conditional_mean(const CirParams& p, double x, double dt);

/// Parameters of the exact transition law: X(t + dt) = scale * chi'^2(degrees, noncentrality).
struct TransitionLaw {
    double scale = 0.0;
    double degrees = 0.0;
    double noncentrality = 0.0;
};

TransitionLaw transition_law(const CirParams& p, double x, double dt);

/// Draws X(t + dt) given X(t) = x from the exact noncentral chi-square law,
/// as a Poisson(lambda / 2)-mixed Gamma(d / 2 + K, 2) variate times the scale.
template <class Urbg>
double exact_conditional_sample(const CirParams& p, double x, double dt, Urbg& rng) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("exact_conditional_sample: dt must be positive");
    }
    if (x < 0.0) {
        throw std::invalid_argument("exact_conditional_sample: state must be non-negative");
    }
    const TransitionLaw law = transition_law(p, x, dt);
    long k = 0;
    if (law.noncentrality > 0.0) {
        std::poisson_distribution<long> poisson(0.5 * law.noncentrality);
        k = poisson(rng);
    }
    std::gamma_distribution<double> gamma(0.5 * law.degrees + static_cast<double>(k), 2.0);
    return law.scale * gamma(rng);
}

namespace detail {
/// True when a and b agree to within a few ulps of their magnitude.
bool nearly_equal(double a, double b);
}  // namespace detail

}  // namespace cirlab
