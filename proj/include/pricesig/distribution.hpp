#ifndef PRICESIG_DISTRIBUTION_HPP
#define PRICESIG_DISTRIBUTION_HPP

#include <boost/math/special_functions/beta.hpp>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "numeric.hpp"

namespace pricesig {

// Consumer valuation distribution on [0, v_max].  Two families: uniform and
// scaled beta.  The beta family exists to give property tests a second shape;
// alpha = beta = 1 is rejected by convention (use the uniform kind instead).
class Valuation {
  public:
    enum class Kind { uniform, scaled_beta };

    static Valuation uniform(double v_max) { return Valuation(Kind::uniform, v_max, 1.0, 1.0); }

    static Valuation scaled_beta(double v_max, double alpha, double beta) {
        return Valuation(Kind::scaled_beta, v_max, alpha, beta);
    }

    Kind kind() const { return kind_; }
    double v_max() const { return v_max_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    double cdf(double v) const {
        if (v <= 0.0) return 0.0;
        if (v >= v_max_) return 1.0;
        double x = v / v_max_;
        if (kind_ == Kind::uniform) return x;
        return boost::math::ibeta(alpha_, beta_, x);
    }

    double pdf(double v) const {
        if (v < 0.0 || v > v_max_) return 0.0;
        double x = v / v_max_;
        if (kind_ == Kind::uniform) return 1.0 / v_max_;
        return boost::math::ibeta_derivative(alpha_, beta_, std::clamp(x, 0.0, 1.0)) / v_max_;
    }

    double quantile(double u) const {
        if (u < 0.0 || u > 1.0) throw DomainError("quantile argument outside [0,1]");
        if (kind_ == Kind::uniform) return u * v_max_;
        if (u == 0.0) return 0.0;
        if (u == 1.0) return v_max_;
        return boost::math::ibeta_inv(alpha_, beta_, u) * v_max_;
    }

    std::string describe() const {
        if (kind_ == Kind::uniform) return "uniform[0," + format_number(v_max_) + "]";
        return "scaled-beta(" + format_number(alpha_) + "," + format_number(beta_) + ")[0," +
               format_number(v_max_) + "]";
    }

  private:
    Valuation(Kind kind, double v_max, double alpha, double beta)
        : kind_(kind), v_max_(v_max), alpha_(alpha), beta_(beta) {
        require_positive(v_max, "v_max");
        if (kind_ == Kind::scaled_beta) {
            require_finite(alpha, "alpha");
            require_finite(beta, "beta");
            if (alpha < 1.0 || beta < 1.0)
                throw std::invalid_argument("scaled-beta requires alpha >= 1 and beta >= 1");
            if (alpha == 1.0 && beta == 1.0)
                throw std::invalid_argument("scaled-beta(1,1) duplicates uniform; use the uniform kind");
        }
    }

    Kind kind_;
    double v_max_;
    double alpha_;
    double beta_;
};

}  // namespace pricesig

#endif
