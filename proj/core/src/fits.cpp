#include "floqflow/fits.hpp"

#include <cmath>
#include <stdexcept>

namespace floqflow::fits {

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need >= 2 matching points");
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit f;
    f.n = int(x.size());
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    const double sigma2 = x.size() > 2 ? ss_res / (n - 2) : 0.0;
    f.slope_err = std::sqrt(sigma2 * n / det);
    f.intercept_err = std::sqrt(sigma2 * sxx / det);
    return f;
}

ExpTailFit exponential_tail_fit(const std::vector<double>& n,
                                const std::vector<double>& c, double floor) {
    if (n.size() != c.size())
        throw std::invalid_argument("exponential_tail_fit: size mismatch");
    std::vector<double> xs, ys;
    for (size_t i = 0; i < n.size(); ++i) {
        const double a = std::abs(c[i]);
        if (a > floor) {
            xs.push_back(n[i]);
            ys.push_back(std::log(a));
        }
    }
    ExpTailFit out;
    out.n_points = int(xs.size());
    if (xs.size() < 3) return out;
    const auto lf = linear_fit(xs, ys);
    if (lf.slope >= 0) return out;  // not a decaying tail
    out.zeta = -1.0 / lf.slope;
    out.amplitude = std::exp(lf.intercept);
    out.r2 = lf.r2;
    out.ok = true;
    return out;
}

CriticalFit critical_lambda_fit(const std::vector<double>& lambdas,
                                const std::vector<double>& zetas) {
    if (lambdas.size() != zetas.size() || lambdas.size() < 3)
        throw std::invalid_argument("critical_lambda_fit: need >= 3 points");
    std::vector<double> inv;
    inv.reserve(zetas.size());
    for (double z : zetas) {
        if (z <= 0)
            throw std::invalid_argument("critical_lambda_fit: zeta must be > 0");
        inv.push_back(1.0 / z);
    }
    const auto lf = linear_fit(lambdas, inv);
    CriticalFit out;
    out.r2 = lf.r2;
    if (lf.slope >= 0) return out;  // 1/zeta must decrease towards lambda_c
    out.lambda_c = -lf.intercept / lf.slope;
    // first-order error propagation of the zero crossing
    out.lambda_c_err =
        std::hypot(lf.intercept_err / lf.slope,
                   lf.intercept * lf.slope_err / (lf.slope * lf.slope));
    out.ok = out.lambda_c > lambdas.back();
    return out;
}

}  // namespace floqflow::fits
