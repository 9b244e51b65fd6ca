#pragma once

#include <vector>

namespace floqflow::fits {

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double slope_err = 0;
    double intercept_err = 0;
    double r2 = 0;
    int n = 0;
};

// Ordinary least squares y = intercept + slope * x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct ExpTailFit {
    double zeta = 0;       // decay length of c_n ~ A e^{-n/zeta}
    double amplitude = 0;  // A
    double r2 = 0;
    int n_points = 0;
    bool ok = false;  // enough points above the floor and a decaying tail
};

// Fit |c_n| over points with |c_n| > floor to an exponential in n.
ExpTailFit exponential_tail_fit(const std::vector<double>& n,
                                const std::vector<double>& c, double floor);

struct CriticalFit {
    double lambda_c = 0;
    double lambda_c_err = 0;
    double r2 = 0;
    bool ok = false;
};

// zeta ~ (lambda_c - lambda)^{-1}: linear fit of 1/zeta against lambda,
// lambda_c at the zero crossing.
CriticalFit critical_lambda_fit(const std::vector<double>& lambdas,
                                const std::vector<double>& zetas);

}  // namespace floqflow::fits
