#ifndef LATWIG_SPECIAL_FUNCTIONS_HPP
#define LATWIG_SPECIAL_FUNCTIONS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include <latwig/errors.hpp>

namespace latwig
{

inline constexpr double default_theta_tolerance = 1e-15;
inline constexpr int max_bessel_order = 4096;

// exp(log_scale) * theta_3(z, q), where
//
//   theta_3(z, q) = sum_{n in Z} q^(n^2) exp(2 i n z),   0 <= q < 1.
//
// The scale factor is folded into every term before summation, so that
// prefactors like exp(-x^2) multiplying a huge theta value (large Im z) can be
// evaluated without overflow. Summation starts at the dominant index
// n0 = round(Im z / log q) and grows outwards in (n0 + j, n0 - j) pairs until
// the magnitude bound of both new terms drops below rel_tol * |partial sum|.
// For real z the dominant index is zero and the truncation is symmetric in n.
template <typename T>
std::complex<T> theta3_scaled(std::complex<T> z, T q, T log_scale, T rel_tol = T(default_theta_tolerance))
{
    if (!(q >= T(0) && q < T(1))) {
        throw domain_error("theta3: nome q must satisfy 0 <= q < 1, got " + std::to_string(q));
    }
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || !std::isfinite(log_scale)) {
        throw domain_error("theta3: non-finite argument");
    }
    if (q == T(0)) {
        return std::complex<T>(std::exp(log_scale), T(0));
    }
    const T lq = std::log(q);
    const T x = z.real(), y = z.imag();
    const auto log_mag = [&](long n) {
        const T tn = static_cast<T>(n);
        return log_scale + tn * tn * lq - T(2) * tn * y;
    };
    const auto term = [&](long n) { return std::polar(std::exp(log_mag(n)), T(2) * static_cast<T>(n) * x); };

    const long n0 = std::lround(y / lq);
    const T peak = std::exp(log_mag(n0));
    std::complex<T> sum = term(n0);
    for (long j = 1;; ++j) {
        const std::complex<T> hi = term(n0 + j), lo = term(n0 - j);
        sum += hi + lo;
        const T bound = std::exp(std::max(log_mag(n0 + j), log_mag(n0 - j)));
        if (bound < rel_tol * std::abs(sum) || bound < std::numeric_limits<T>::min()
            || bound < T(1e-30) * rel_tol * peak) {
            break;
        }
    }
    return sum;
}

template <typename T>
std::complex<T> theta3(std::complex<T> z, T q, T rel_tol = T(default_theta_tolerance))
{
    return theta3_scaled(z, q, T(0), rel_tol);
}

namespace detail
{

// Ascending series, accurate for |x| <= 1.
template <typename T>
std::vector<T> bessel_series(int nmax, T x)
{
    std::vector<T> out(static_cast<std::size_t>(nmax) + 1);
    const T half = x / T(2);
    const T h2 = half * half;
    T lead = T(1); // (x/2)^n / n!
    for (int n = 0; n <= nmax; ++n) {
        if (n > 0) {
            lead *= half / T(n);
        }
        T term = lead, sum = lead;
        for (int s = 1; s < 200 && term != T(0); ++s) {
            term *= -h2 / (T(s) * T(n + s));
            sum += term;
            if (std::abs(term) <= std::numeric_limits<T>::epsilon() * std::abs(sum)) {
                break;
            }
        }
        out[static_cast<std::size_t>(n)] = sum;
    }
    return out;
}

// Miller's backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalised with
// J_0 + 2 sum_{k>=1} J_{2k} = 1. Stable for every order, including the
// oscillatory region |x| > n where forward recurrence would also work.
template <typename T>
std::vector<T> bessel_miller(int nmax, T x)
{
    const T ax = std::abs(x);
    const int reach = std::max(nmax, static_cast<int>(std::ceil(ax)));
    int start = reach + 20 + static_cast<int>(std::sqrt(T(60) * T(reach)));
    start += start % 2;

    std::vector<T> out(static_cast<std::size_t>(nmax) + 1, T(0));
    T next = T(0), cur = T(1e-30), norm = T(0);
    for (int k = start; k >= 1; --k) {
        const T prev = T(2) * T(k) / ax * cur - next;
        next = cur;
        cur = prev;
        // cur now holds j_{k-1}
        if (std::abs(cur) > T(1e250)) {
            cur *= T(1e-250);
            next *= T(1e-250);
            norm *= T(1e-250);
            for (auto &v : out) {
                v *= T(1e-250);
            }
        }
        const int idx = k - 1;
        if (idx <= nmax) {
            out[static_cast<std::size_t>(idx)] = cur;
        }
        if (idx > 0 && idx % 2 == 0) {
            norm += T(2) * cur;
        }
    }
    norm += cur;
    for (auto &v : out) {
        v /= norm;
    }
    return out;
}

} // namespace detail

// J_0(x), ..., J_nmax(x) for real x. One sweep serves every order, which is
// what the propagators need in their inner loop.
template <typename T>
std::vector<T> bessel_jn_sequence(int nmax, T x)
{
    if (nmax < 0 || nmax > max_bessel_order) {
        throw domain_error("bessel_jn: order out of range: " + std::to_string(nmax));
    }
    if (!std::isfinite(x)) {
        throw domain_error("bessel_jn: non-finite argument");
    }
    std::vector<T> out;
    if (x == T(0)) {
        out.assign(static_cast<std::size_t>(nmax) + 1, T(0));
        out[0] = T(1);
        return out;
    }
    out = std::abs(x) <= T(1) ? detail::bessel_series(nmax, std::abs(x)) : detail::bessel_miller(nmax, std::abs(x));
    if (x < T(0)) {
        for (std::size_t n = 1; n < out.size(); n += 2) {
            out[n] = -out[n];
        }
    }
    return out;
}

// J_n(x) for integer n (negative orders via J_{-n} = (-1)^n J_n).
template <typename T>
T bessel_jn(int n, T x)
{
    const int order = std::abs(n);
    const T v = bessel_jn_sequence(order, x)[static_cast<std::size_t>(order)];
    return (n < 0 && order % 2 == 1) ? -v : v;
}

} // namespace latwig

#endif
