#include "psm/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace psm {

namespace {

double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (std::isinf(t)) return t < 0 ? 0.0 : 1.0;
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t <= 0.0 ? tail : 1.0 - tail;
}

WelchResult welch_one_sided_less(std::span<const double> x, std::span<const double> y) {
    if (x.size() < 2 || y.size() < 2)
        throw std::invalid_argument("welch test: need at least two samples per side");
    const auto nx = static_cast<double>(x.size());
    const auto ny = static_cast<double>(y.size());

    double mx = 0.0, my = 0.0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= nx;
    my /= ny;

    double vx = 0.0, vy = 0.0;
    for (double v : x) vx += (v - mx) * (v - mx);
    for (double v : y) vy += (v - my) * (v - my);
    vx /= nx - 1.0;
    vy /= ny - 1.0;

    const double ax = vx / nx, ay = vy / ny;
    double se2 = ax + ay;
    double df;
    if (se2 <= 0.0) {
        se2 = 1e-24;  // degenerate zero-variance samples, smoothed
        df = nx + ny - 2.0;
    } else {
        df = se2 * se2 / (ax * ax / (nx - 1.0) + ay * ay / (ny - 1.0));
    }

    WelchResult r;
    r.mean_x = mx;
    r.mean_y = my;
    r.df = df;
    r.t = (mx - my) / std::sqrt(se2);
    r.p_value = student_t_cdf(r.t, df);
    return r;
}

}  // namespace psm
