#ifndef PRICESIG_NUMERIC_HPP
#define PRICESIG_NUMERIC_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pricesig {

// Profit/equality comparisons use an absolute tolerance; root finding and
// integral identities get their own knobs.
struct Tolerances {
    double cmp = 1e-12;
    double root = 1e-12;
    double integral = 1e-9;
};

struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

inline void require_finite(double x, const char* field) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite value for ") + field);
}

inline void require_positive(double x, const char* field) {
    require_finite(x, field);
    if (x <= 0.0) throw std::invalid_argument(std::string("non-positive value for ") + field);
}

// Root of a continuous monotone function on [lo, hi]; f(lo) and f(hi) must
// bracket zero.  Plain bisection: robust and deterministic.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) throw DomainError("bisect: endpoints do not bracket a root");
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Locale-independent decimal formatting, 12 significant digits by default.
// Used for every number that lands in a CSV or report so outputs are
// byte-stable across runs and machines.
inline std::string format_number(double x, int digits = 12) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, digits);
    return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace pricesig

#endif
