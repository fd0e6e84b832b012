#pragma once

#include <functional>

namespace tmachine {

struct ScalarOptimum {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

// Bounded maximisation by golden-section search with parabolic steps
// (Brent's fmin applied to -f). Stops once the bracket is no wider than
// `tol`; returns the best point evaluated. Non-finite values of f are
// treated as -inf. Throws NumericalError if both golden-section probes are
// non-finite.
ScalarOptimum maximize_bounded(const std::function<double(double)>& f, double lo, double hi, double tol,
                               int max_evaluations = 500);

}  // namespace tmachine
