#include "cirlab/model.hpp"

#include <algorithm>
#include <limits>

namespace cirlab {

namespace detail {

bool nearly_equal(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= 8.0 * std::numeric_limits<double>::epsilon() * scale;
}

}  // namespace detail

void CirParams::validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(x0 >= 0.0)) throw std::invalid_argument("x0 must be non-negative");
}

std::string_view to_string(RegimeKind kind) {
    switch (kind) {
        case RegimeKind::StrongInverse: return "StrongInverse";
        case RegimeKind::NonnegAlpha: return "NonnegAlpha";
        case RegimeKind::NegAlpha: return "NegAlpha";
    }
    return "unknown";
}

TransformedParams transform(const CirParams& p) {
    const double four_kt = 4.0 * p.kappa * p.theta;
    const double s2 = p.sigma * p.sigma;
    TransformedParams tp;
    tp.alpha = detail::nearly_equal(four_kt, s2) ? 0.0 : (four_kt - s2) / 8.0;
    tp.beta = p.kappa / 2.0;
    tp.gamma = p.sigma / 2.0;
    return tp;
}

Regime classify_regime(const CirParams& p) {
    const double kt = p.kappa * p.theta;
    const double s2 = p.sigma * p.sigma;
    const auto strictly_greater = [](double a, double b) {
        return a > b && !detail::nearly_equal(a, b);
    };

    Regime r;
    r.feller = strictly_greater(2.0 * kt, s2);
    if (strictly_greater(kt, s2)) {
        r.kind = RegimeKind::StrongInverse;
    } else if (transform(p).alpha >= 0.0) {
        r.kind = RegimeKind::NonnegAlpha;
    } else {
        r.kind = RegimeKind::NegAlpha;
    }
    return r;
}

double conditional_mean(const CirParams& p, double x, double dt) {
    const double decay = std::exp(-p.kappa * dt);
    return decay * x + p.theta * (1.0 - decay);
}

TransitionLaw transition_law(const CirParams& p, double x, double dt) {
    const double decay = std::exp(-p.kappa * dt);
    TransitionLaw law;
    law.scale = p.sigma * p.sigma * (-std::expm1(-p.kappa * dt)) / (4.0 * p.kappa);
    law.degrees = 4.0 * p.kappa * p.theta / (p.sigma * p.sigma);
    law.noncentrality = x * decay / law.scale;
    return law;
}

}  // namespace cirlab
