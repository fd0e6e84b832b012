#include "tmachine/optimize.hpp"

#include <cmath>
#include <limits>

#include "tmachine/errors.hpp"

namespace tmachine {

ScalarOptimum maximize_bounded(const std::function<double(double)>& f, double lo, double hi, double tol,
                               int max_evaluations) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ValidationError("need finite bounds lo < hi");
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");

    constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt 5) / 2
    const double kSqrtEps = std::sqrt(std::numeric_limits<double>::epsilon());
    constexpr double kInf = std::numeric_limits<double>::infinity();

    ScalarOptimum best{std::numeric_limits<double>::quiet_NaN(), -kInf, 0};
    auto cost = [&](double x) {
        ++best.evaluations;
        double v = f(x);
        if (!std::isfinite(v)) v = -kInf;
        if (v > best.value || std::isnan(best.x)) {
            best.x = x;
            best.value = v;
        }
        return -v;
    };

    double a = lo, b = hi;
    double p1 = a + kGolden * (b - a);
    double p2 = b - kGolden * (b - a);
    double f1 = cost(p1);
    double f2 = cost(p2);
    if (f1 == kInf && f2 == kInf) {
        throw NumericalError("objective is not finite at either initial probe");
    }
    // x: best so far, w: second best, v: previous w.
    double x, w, fx, fw;
    if (f1 <= f2) {
        x = p1, fx = f1, w = p2, fw = f2;
        b = p2;
    } else {
        x = p2, fx = f2, w = p1, fw = f1;
        a = p1;
    }
    double v = w, fv = fw;
    double d = 0.0, e = 0.0;

    while (best.evaluations < max_evaluations) {
        const double mid = 0.5 * (a + b);
        const double tol1 = kSqrtEps * std::abs(x) + tol / 4.0;
        const double tol2 = 2.0 * tol1;
        if (b - a <= tol || std::abs(x - mid) <= tol2 - 0.5 * (b - a)) break;

        bool golden = true;
        if (std::abs(e) > tol1 && std::isfinite(fx) && std::isfinite(fw) && std::isfinite(fv)) {
            // Parabola through x, w, v.
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double etemp = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = x < mid ? tol1 : -tol1;
                golden = false;
            }
        }
        if (golden) {
            e = (x < mid) ? b - x : a - x;
            d = kGolden * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
        const double fu = cost(u);

        if (fu <= fx) {
            if (u < x) b = x;
            else a = x;
            v = w, fv = fw;
            w = x, fw = fx;
            x = u, fx = fu;
        } else {
            if (u < x) a = u;
            else b = u;
            if (fu <= fw || w == x) {
                v = w, fv = fw;
                w = u, fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u, fv = fu;
            }
        }
    }
    return best;
}

}  // namespace tmachine
