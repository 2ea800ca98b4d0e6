#ifndef PRICESIG_QUALITY_HPP
#define PRICESIG_QUALITY_HPP

#include <algorithm>
#include <stdexcept>

#include "numeric.hpp"

namespace pricesig {

// Quality premium map h: a consumer with valuation v values the high-quality
// product at h(v) = intercept + slope*v.  Must dominate the identity with
// slope strictly above one so h - id is increasing and invertible.
class Quality {
  public:
    Quality(double intercept, double slope) : intercept_(intercept), slope_(slope) {
        require_finite(intercept, "quality.intercept");
        require_finite(slope, "quality.slope");
        if (intercept < 0.0) throw std::invalid_argument("quality intercept must be >= 0 so h(v) >= v");
        if (slope <= 1.0) throw std::invalid_argument("quality slope must exceed 1");
    }

    double intercept() const { return intercept_; }
    double slope() const { return slope_; }

    double h(double v) const { return intercept_ + slope_ * v; }

    // Inverse on [h(0), h(v_max)].
    double h_inv(double x) const { return (x - intercept_) / slope_; }

    // Inverse clamped into [0, v_max]; prices below h(0) leave every consumer
    // with a positive quality-adjusted surplus, hence cutoff 0.
    double h_inv_clamped(double x, double v_max) const {
        return std::clamp(h_inv(x), 0.0, v_max);
    }

    // Grid re-check of the dominance/slope invariants (the constructor already
    // enforces them for the affine family; the sweep future-proofs new kinds).
    bool dominates_identity_on_grid(double v_max, int points = 10000) const {
        double prev = h(0.0);
        if (prev < 0.0) return false;
        for (int i = 1; i <= points; ++i) {
            double v = v_max * static_cast<double>(i) / points;
            double cur = h(v);
            if (cur < v) return false;
            if (cur - prev <= (v_max / points)) return false;  // slope must stay above 1
            prev = cur;
        }
        return true;
    }

  private:
    double intercept_;
    double slope_;
};

}  // namespace pricesig

#endif
