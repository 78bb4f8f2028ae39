// SPDX-License-Identifier: Apache-2.0

#include "vmimo/bounds.hpp"

#include "vmimo/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vmimo {

namespace {

constexpr double kIntegrandCutoff = 1e-10;
constexpr double kSimpsonTol = 1e-13;
constexpr double kShiftCutoff = 1e-14;

void check_params(const BoundParams &p) {
    if (!(p.gamma > 0.0) || !(p.src_snr > 0.0) || !(p.alpha > 0.0) || !(p.lambda >= 0.0) ||
        !std::isfinite(p.lambda))
        throw std::invalid_argument("BoundParams: gamma, src_snr, alpha must be positive and lambda >= 0");
}

// End of the segment on which k_necessary == m.
double segment_end(int m, double gamma) {
    const double s = static_cast<double>(m) + 1.0;
    return 0.5 * std::log2(1.0 + gamma * (1.0 + s * s));
}

int ring_count(double d, double delta) { return static_cast<int>(std::floor(d / delta + 1e-9)); }

double simpson_step(const std::function<double(double)> &f, double a, double b, double fa, double fm, double fb,
                    double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (std::abs(diff) <= 15.0 * eps)
        return left + right + diff / 15.0;
    if (depth <= 0)
        throw QuadratureError("adaptive Simpson did not converge on [" + std::to_string(a) + ", " +
                              std::to_string(b) + "], residual " + std::to_string(std::abs(diff)));
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

// Poisson-binomial pmf by the alternating power-sum recursion. Accurate when
// every p <= 1/2; callers reflect larger probabilities first.
std::vector<double> recursion_pmf(const std::vector<double> &p, int k_max) {
    const int n = static_cast<int>(p.size());
    const int top = std::min(k_max, n);
    std::vector<double> pi(static_cast<std::size_t>(top) + 1, 0.0);
    double log_pi0 = 0.0;
    std::vector<double> ratio(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        log_pi0 += std::log1p(-p[i]);
        ratio[i] = p[i] / (1.0 - p[i]);
    }
    pi[0] = std::exp(log_pi0);
    std::vector<double> t(static_cast<std::size_t>(top) + 1, 0.0);
    std::vector<double> power(ratio);
    for (int j = 1; j <= top; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < power.size(); ++i) {
            s += power[i];
            power[i] *= ratio[i];
        }
        t[static_cast<std::size_t>(j)] = s;
    }
    for (int k = 1; k <= top; ++k) {
        double s = 0.0;
        for (int j = 1; j <= k; ++j) {
            const double term = pi[static_cast<std::size_t>(k - j)] * t[static_cast<std::size_t>(j)];
            s += (j % 2 == 1) ? term : -term;
        }
        pi[static_cast<std::size_t>(k)] = std::max(0.0, s / k);
    }
    return pi;
}

std::vector<double> split_pmf(std::span<const double> p, int k_max) {
    std::vector<double> low, high_reflected;
    for (double x : p) {
        if (!(x >= 0.0) || !(x <= 1.0))
            throw std::invalid_argument("poisson_binomial: probabilities must lie in [0, 1]");
        if (x <= 0.5)
            low.push_back(x);
        else
            high_reflected.push_back(1.0 - x);
    }
    const int n = static_cast<int>(p.size());
    const int top = std::min(k_max, n);
    std::vector<double> a = recursion_pmf(low, top);
    if (high_reflected.empty()) {
        a.resize(static_cast<std::size_t>(top) + 1, 0.0);
        return a;
    }
    // Successes among the large probabilities are failures of the reflected set.
    const int nh = static_cast<int>(high_reflected.size());
    const std::vector<double> fail = recursion_pmf(high_reflected, nh);
    std::vector<double> b(static_cast<std::size_t>(nh) + 1);
    for (int k = 0; k <= nh; ++k)
        b[static_cast<std::size_t>(k)] = fail[static_cast<std::size_t>(nh - k)];

    std::vector<double> out(static_cast<std::size_t>(top) + 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size() && i + j <= static_cast<std::size_t>(top); ++j)
            out[i + j] += a[i] * b[j];
    return out;
}

} // namespace

int k_necessary(double r, double gamma) {
    const double x = std::expm1(2.0 * r * std::numbers::ln2);
    if (!(x > gamma))
        return 0;
    const double v = std::sqrt((x - gamma) / gamma) - 1.0;
    // Absorb rounding so exact integers (e.g. r = C(gamma) with 1 + gamma square) stay put.
    const double k = std::ceil(v - 1e-12 * std::max(1.0, std::abs(v)));
    return k > 0.0 ? static_cast<int>(k) : 0;
}

double eligibility_radius(double r, double src_snr, double alpha) {
    return std::pow(src_snr / std::expm1(2.0 * r * std::numbers::ln2), 1.0 / alpha);
}

double achievability_area(double r, double src_snr, double alpha) {
    return std::numbers::pi * std::pow(src_snr / std::expm1(2.0 * r * std::numbers::ln2), 2.0 / alpha);
}

double poisson_tail(int k, double mu) {
    if (!(mu >= 0.0))
        throw std::invalid_argument("poisson_tail: mean must be non-negative");
    if (k <= 0)
        return 1.0;
    if (mu == 0.0)
        return 0.0;
    if (std::isinf(mu))
        return 1.0;
    const double log_mu = std::log(mu);
    if (mu < static_cast<double>(k)) {
        double t = std::exp(-mu + k * log_mu - std::lgamma(k + 1.0));
        double sum = 0.0;
        for (int j = k; t > 0.0; ++j) {
            sum += t;
            t *= mu / (j + 1.0);
            if (t < 1e-17 * sum)
                break;
        }
        return std::min(1.0, sum);
    }
    double head = 0.0;
    for (int j = 0; j < k; ++j)
        head += std::exp(-mu + j * log_mu - std::lgamma(j + 1.0));
    return std::max(0.0, 1.0 - head);
}

double adaptive_simpson(const std::function<double(double)> &f, double a, double b, double eps, int max_depth) {
    if (b <= a)
        return 0.0;
    const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, eps, max_depth);
}

BoundResult theorem1_bound(const BoundParams &p) {
    check_params(p);
    if (p.sigma_db != 0.0)
        throw std::invalid_argument("theorem1_bound: requires sigma_db = 0");
    BoundResult res;
    res.baseline = capacity(p.gamma);
    res.value = res.baseline;
    res.r_max = res.baseline;
    if (p.lambda == 0.0)
        return res;

    auto integrand = [&](int k, double r) {
        return poisson_tail(k, p.lambda * achievability_area(r, p.src_snr, p.alpha));
    };

    int m = 1;
    while (segment_end(m, p.gamma) <= res.baseline)
        ++m;
    double a = res.baseline;
    double integral = 0.0;
    for (;; ++m) {
        const double b = segment_end(m, p.gamma);
        const double fa = integrand(m, a);
        if (fa < kIntegrandCutoff) {
            // The integrand is non-increasing, so left-endpoint rectangles bound the rest.
            double tail = 0.0;
            for (int mm = m; mm < m + 1000000; ++mm) {
                const double lo = mm == m ? a : segment_end(mm - 1, p.gamma);
                const double hi = segment_end(mm, p.gamma);
                const double piece = integrand(mm, lo) * (hi - lo);
                tail += piece;
                if (piece <= 1e-6 * tail || piece < 1e-300)
                    break;
            }
            res.integral_tail_bound = tail;
            res.r_max = a;
            res.k_max = m;
            break;
        }
        integral += adaptive_simpson([&](double r) { return integrand(m, r); }, a, b, kSimpsonTol);
        ++res.pieces;
        a = b;
    }
    res.value = res.baseline + integral;
    return res;
}

double shadow_log_sigma(double sigma_db, double alpha) { return 0.1 * std::numbers::ln10 * sigma_db / alpha; }

double shift_probability(int j, int i, double sigma) {
    if (i < 1 || j < 1)
        throw std::invalid_argument("shift_probability: ring indices start at 1");
    if (sigma <= 0.0)
        return i == j ? 1.0 : 0.0;
    const double scale = 1.0 / (std::numbers::sqrt2 * sigma);
    const double hi = std::log(static_cast<double>(i) / j) * scale;
    if (i == 1)
        return 0.5 * std::erfc(-hi);
    const double lo = std::log(static_cast<double>(i - 1) / j) * scale;
    // erfc keeps the far tails from cancelling to zero.
    if (lo >= 0.0)
        return 0.5 * (std::erfc(lo) - std::erfc(hi));
    if (hi <= 0.0)
        return 0.5 * (std::erfc(-hi) - std::erfc(-lo));
    return 0.5 * (erf(hi) - erf(lo));
}

std::vector<double> ring_probabilities(const BoundParams &p) {
    check_params(p);
    if (!(p.delta > 0.0) || !(p.d_max > p.delta))
        throw std::invalid_argument("BoundParams: need 0 < delta < d_max");
    const int n_max = ring_count(p.d_max, p.delta);
    const double sigma = shadow_log_sigma(p.sigma_db, p.alpha);
    const double scale = 2.0 * std::numbers::pi * p.lambda * p.delta * p.delta;
    std::vector<double> out(static_cast<std::size_t>(n_max));
    for (int i = 1; i <= n_max; ++i) {
        double s = 0.0;
        for (int j = i; j <= n_max; ++j) {
            const double q = shift_probability(j, i, sigma);
            s += j * q;
            if (q < kShiftCutoff)
                break;
        }
        for (int j = i - 1; j >= 1; --j) {
            const double q = shift_probability(j, i, sigma);
            s += j * q;
            if (q < kShiftCutoff)
                break;
        }
        const double pi = scale * s;
        if (pi >= 1.0)
            throw std::domain_error("delta too coarse for density");
        out[static_cast<std::size_t>(i - 1)] = pi;
    }
    return out;
}

double ring_probability(int i, const BoundParams &p) {
    const std::vector<double> all = ring_probabilities(p);
    if (i < 1 || i > static_cast<int>(all.size()))
        throw std::out_of_range("ring_probability: ring index outside [1, d_max/delta]");
    return all[static_cast<std::size_t>(i - 1)];
}

std::vector<double> poisson_binomial(std::span<const double> p) {
    return split_pmf(p, static_cast<int>(p.size()));
}

double poisson_binomial(std::span<const double> p, int k) {
    if (k < 0)
        throw std::invalid_argument("poisson_binomial: k must be non-negative");
    if (k > static_cast<int>(p.size())) {
        split_pmf(p, 0); // still validates the inputs
        return 0.0;
    }
    return split_pmf(p, k)[static_cast<std::size_t>(k)];
}

std::vector<double> poisson_binomial_head(std::span<const double> p, int k_max) {
    if (k_max < 0)
        throw std::invalid_argument("poisson_binomial_head: k_max must be non-negative");
    return split_pmf(p, k_max);
}

BoundResult lemma1_bound(const BoundParams &p) {
    const std::vector<double> rings = ring_probabilities(p);
    const int n_max = static_cast<int>(rings.size());
    BoundResult res;
    res.baseline = capacity(p.gamma);
    res.value = res.baseline;
    res.r_max = res.baseline;
    if (p.lambda == 0.0)
        return res;

    // n and k_r are integers, so the integrand is constant between the radii
    // where a ring boundary crosses d_r and the rates where k_r steps.
    auto ring_edge = [&](int n) {
        return 0.5 * std::log2(1.0 + p.src_snr / std::pow(n * p.delta, p.alpha));
    };
    const double r_end = ring_edge(1);
    std::vector<double> breaks{res.baseline};
    for (int n = 1; n <= n_max; ++n) {
        const double r = ring_edge(n);
        if (r > res.baseline)
            breaks.push_back(r);
    }
    for (int m = 0;; ++m) {
        const double r = segment_end(m, p.gamma);
        if (r >= r_end)
            break;
        if (r > res.baseline)
            breaks.push_back(r);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double integral = 0.0;
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        const double lo = breaks[b], hi = breaks[b + 1];
        const double mid = 0.5 * (lo + hi);
        const int n = std::min(ring_count(eligibility_radius(mid, p.src_snr, p.alpha), p.delta), n_max);
        const int k = k_necessary(mid, p.gamma);
        if (n < k || n == 0)
            continue;
        if (k == 0) {
            integral += hi - lo;
            continue;
        }
        const std::vector<double> head =
            poisson_binomial_head(std::span<const double>(rings.data(), static_cast<std::size_t>(n)), k - 1);
        double below = 0.0;
        for (int j = 0; j < k; ++j)
            below += head[static_cast<std::size_t>(j)];
        const double tail = std::clamp(1.0 - below, 0.0, 1.0);
        integral += tail * (hi - lo);
        res.r_max = hi;
        res.k_max = std::max(res.k_max, k);
        ++res.pieces;
    }
    res.value = res.baseline + integral;
    return res;
}

CorollaryOutputs corollary_outputs(const BoundParams &p) {
    BoundParams plain = p;
    plain.sigma_db = 0.0;
    CorollaryOutputs out;
    out.rate = theorem1_bound(plain).value;
    out.relays = k_necessary(out.rate, p.gamma);
    out.radius = eligibility_radius(out.rate, p.src_snr, p.alpha);
    return out;
}

} // namespace vmimo
