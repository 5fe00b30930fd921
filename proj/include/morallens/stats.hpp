#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace morallens::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double df1 = 0.0;   // t / pearson: the single df; anova: between-groups df
    double df2 = 0.0;   // anova: within-groups df; otherwise 0
    std::string note;   // nonempty when a degenerate case was flagged
};

// ---------------------------------------------------------------------------
// Distribution kernels. Regularized incomplete beta via the textbook
// continued fraction (modified Lentz), so p-values carry no external
// dependency and are bit-stable across platforms.
// ---------------------------------------------------------------------------

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    constexpr int max_iter = 300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

/// I_x(a, b), the regularized incomplete beta function.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(b, a)) *
                     detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

inline double student_t_cdf(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("student_t_cdf: df must be > 0");
    if (t == 0.0) return 0.5;
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

inline double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    if (t == 0.0) return 1.0;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

/// Central 0.975 quantile by bisection on the CDF; plenty for CI bounds.
inline double student_t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p in (0,1)");
    double lo = -1e3, hi = 1e3;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double f_cdf(double x, double df1, double df2) {
    if (df1 <= 0.0 || df2 <= 0.0) throw std::invalid_argument("f_cdf: dfs must be > 0");
    if (x <= 0.0) return 0.0;
    return regularized_incomplete_beta(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2));
}

inline double f_upper_tail_p(double x, double df1, double df2) {
    if (x <= 0.0) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x));
}

// ---------------------------------------------------------------------------
// Sample summaries
// ---------------------------------------------------------------------------

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Unbiased (n-1) sample variance.
inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("variance needs n >= 2");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

/// Pearson correlation; statistic is r, p is two-sided via the t transform
/// with n-2 degrees of freedom.
inline TestResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const size_t n = x.size();
    if (n < 3) throw std::invalid_argument("pearson: need n >= 3");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: degenerate variance");
    double r = sxy / std::sqrt(sxx * syy);
    r = std::clamp(r, -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    TestResult res;
    res.statistic = r;
    res.df1 = df;
    if (std::fabs(r) >= 1.0) {
        res.p_value = 0.0;
    } else {
        const double t = r * std::sqrt(df / (1.0 - r * r));
        res.p_value = student_t_two_sided_p(t, df);
    }
    return res;
}

/// Welch's two-sample t-test, two-sided. Sign convention:
/// statistic = (mean(a) - mean(b)) / pooled standard error.
inline TestResult t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("t_test: each sample needs n >= 2");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = mean(a), mb = mean(b);
    const double va = sample_variance(a), vb = sample_variance(b);
    TestResult res;
    if (va == 0.0 && vb == 0.0) {
        if (ma == mb) {
            res.statistic = 0.0;
            res.p_value = 1.0;
            res.df1 = na + nb - 2.0;
            res.note = "zero variance in both samples";
            return res;
        }
        res.statistic = ma > mb ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
        res.p_value = 0.0;
        res.df1 = na + nb - 2.0;
        res.note = "zero variance, unequal means: p = 0 limit";
        return res;
    }
    const double sea = va / na, seb = vb / nb;
    const double se = std::sqrt(sea + seb);
    const double t = (ma - mb) / se;
    // Welch–Satterthwaite degrees of freedom.
    const double df = (sea + seb) * (sea + seb) /
                      (sea * sea / (na - 1.0) + seb * seb / (nb - 1.0));
    res.statistic = t;
    res.df1 = df;
    res.p_value = student_t_two_sided_p(t, df);
    return res;
}

/// Pooled-variance (classic Student) variant; kept for the F = t^2 identity.
inline TestResult pooled_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("t_test: each sample needs n >= 2");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = mean(a), mb = mean(b);
    const double va = sample_variance(a), vb = sample_variance(b);
    const double df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    TestResult res;
    res.df1 = df;
    if (sp2 == 0.0) {
        res.statistic = ma == mb ? 0.0
                                 : (ma > mb ? std::numeric_limits<double>::infinity()
                                            : -std::numeric_limits<double>::infinity());
        res.p_value = ma == mb ? 1.0 : 0.0;
        res.note = "zero pooled variance";
        return res;
    }
    const double t = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    res.statistic = t;
    res.p_value = student_t_two_sided_p(t, df);
    return res;
}

/// One-way ANOVA: F with (k-1, N-k) degrees of freedom.
inline TestResult anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw std::invalid_argument("anova: need >= 2 groups");
    size_t total_n = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw std::invalid_argument("anova: each group needs n >= 2");
        for (double x : g) grand_sum += x;
        total_n += g.size();
    }
    const double grand_mean = grand_sum / static_cast<double>(total_n);
    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        const double gm = mean(g);
        ss_between += static_cast<double>(g.size()) * (gm - grand_mean) * (gm - grand_mean);
        for (double x : g) ss_within += (x - gm) * (x - gm);
    }
    const double df1 = static_cast<double>(groups.size() - 1);
    const double df2 = static_cast<double>(total_n - groups.size());
    TestResult res;
    res.df1 = df1;
    res.df2 = df2;
    if (ss_within == 0.0) {
        if (ss_between == 0.0) {
            res.statistic = 0.0;
            res.p_value = 1.0;
            res.note = "all observations identical";
            return res;
        }
        res.statistic = std::numeric_limits<double>::infinity();
        res.p_value = 0.0;
        res.note = "zero within-group variance, unequal means: p = 0 limit";
        return res;
    }
    const double f = (ss_between / df1) / (ss_within / df2);
    res.statistic = f;
    res.p_value = f <= 0.0 ? 1.0 : f_upper_tail_p(f, df1, df2);
    return res;
}

}  // namespace morallens::stats
