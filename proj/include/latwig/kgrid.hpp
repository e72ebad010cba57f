#ifndef LATWIG_KGRID_HPP
#define LATWIG_KGRID_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <latwig/errors.hpp>

namespace latwig
{

using complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Uniform sampling of the quasi-momentum circle, k_j = -pi + 2 pi j / n_k,
// open at +pi. Every Wigner function of a finitely supported operator is a
// trigonometric polynomial in k, so on a fine enough grid all k-integrals
// below are exact.
class KGrid
{
public:
    explicit KGrid(std::size_t n_k) : m_n(n_k)
    {
        if (n_k == 0) {
            throw domain_error("KGrid: n_k must be positive");
        }
        m_roots.resize(n_k);
        for (std::size_t r = 0; r < n_k; ++r) {
            m_roots[r] = std::polar(1.0, -two_pi * static_cast<double>(r) / static_cast<double>(n_k));
        }
    }

    std::size_t size() const noexcept
    {
        return m_n;
    }
    double point(std::size_t j) const noexcept
    {
        return -pi + two_pi * static_cast<double>(j) / static_cast<double>(m_n);
    }
    std::vector<double> points() const
    {
        std::vector<double> out(m_n);
        for (std::size_t j = 0; j < m_n; ++j) {
            out[j] = point(j);
        }
        return out;
    }
    double spacing() const noexcept
    {
        return two_pi / static_cast<double>(m_n);
    }

    // exp(-i f k_j) for integer frequency f, built from a table of roots of
    // unity so that repeated evaluation is exact to the table entry.
    complex phase(long f, std::size_t j) const noexcept
    {
        const long n = static_cast<long>(m_n);
        long r = (f % n) * static_cast<long>(j % m_n) % n;
        if (r < 0) {
            r += n;
        }
        const complex w = m_roots[static_cast<std::size_t>(r)];
        return (f % 2 == 0) ? w : -w;
    }

    // Smallest grid that integrates every product of two Wigner rows of a
    // window of `width` sites exactly.
    static std::size_t min_points_for_width(long width) noexcept
    {
        return static_cast<std::size_t>(2 * width + 1);
    }

    void require_exact_for_width(long width) const
    {
        if (m_n < min_points_for_width(width)) {
            throw grid_error("k-grid too coarse: n_k = " + std::to_string(m_n) + " but a window of "
                             + std::to_string(width) + " sites needs n_k >= 2W+1 = "
                             + std::to_string(min_points_for_width(width)));
        }
    }

    friend bool operator==(const KGrid &a, const KGrid &b) noexcept
    {
        return a.m_n == b.m_n;
    }

private:
    std::size_t m_n;
    std::vector<complex> m_roots;
};

// (2 pi / n_k) sum_j samples[j]: the integral over [-pi, pi) of the periodic
// function sampled on the grid. Exact for trigonometric polynomials of degree
// below n_k.
inline complex periodic_trapezoid(std::span<const complex> samples, const KGrid &grid)
{
    if (samples.size() != grid.size()) {
        throw domain_error("periodic_trapezoid: " + std::to_string(samples.size()) + " samples on a grid of "
                           + std::to_string(grid.size()));
    }
    complex acc{0.0, 0.0};
    for (const complex &s : samples) {
        acc += s;
    }
    return acc * grid.spacing();
}

inline double periodic_trapezoid(std::span<const double> samples, const KGrid &grid)
{
    if (samples.size() != grid.size()) {
        throw domain_error("periodic_trapezoid: " + std::to_string(samples.size()) + " samples on a grid of "
                           + std::to_string(grid.size()));
    }
    double acc = 0.0;
    for (double s : samples) {
        acc += s;
    }
    return acc * grid.spacing();
}

// Finite Fourier representation of one periodic row sampled on a KGrid:
// f(k) = sum_f c_f exp(i f k) with f in the symmetric band of the grid. The
// Nyquist mode of an even grid is split evenly between +-n_k/2.
class TrigPolynomial
{
public:
    TrigPolynomial(std::span<const complex> samples, const KGrid &grid)
    {
        const std::size_t n = grid.size();
        if (samples.size() != n) {
            throw domain_error("TrigPolynomial: sample count does not match grid");
        }
        const long nl = static_cast<long>(n);
        m_lo = -(nl - 1) / 2;
        m_hi = nl / 2;
        m_coeffs.assign(static_cast<std::size_t>(m_hi - m_lo + 1), complex{});
        for (long f = m_lo; f <= m_hi; ++f) {
            complex c{};
            for (std::size_t j = 0; j < n; ++j) {
                c += samples[j] * grid.phase(f, j);
            }
            m_coeffs[static_cast<std::size_t>(f - m_lo)] = c / static_cast<double>(n);
        }
        if (n % 2 == 0) {
            // split the Nyquist term symmetrically: c cos(Nk) instead of c exp(iNk)
            m_nyquist = m_coeffs.back();
            m_coeffs.back() = m_nyquist / 2.0;
        }
    }

    // f(k_j + shift) on every grid point.
    std::vector<complex> shifted(double shift, const KGrid &grid) const
    {
        std::vector<complex> out(grid.size(), complex{});
        std::vector<complex> c = m_coeffs;
        for (long f = m_lo; f <= m_hi; ++f) {
            c[static_cast<std::size_t>(f - m_lo)] *= std::polar(1.0, static_cast<double>(f) * shift);
        }
        const complex ny_lo = nyquist_half() * std::polar(1.0, -static_cast<double>(m_hi) * shift);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            complex acc{};
            for (long f = m_lo; f <= m_hi; ++f) {
                acc += c[static_cast<std::size_t>(f - m_lo)] * std::conj(grid.phase(f, j));
            }
            if (has_nyquist()) {
                acc += ny_lo * std::conj(grid.phase(-m_hi, j));
            }
            out[j] = acc;
        }
        return out;
    }

    // d^p f / dk^p on every grid point.
    std::vector<complex> derivative(int order, const KGrid &grid) const
    {
        std::vector<complex> out(grid.size(), complex{});
        if (order == 0) {
            for (std::size_t j = 0; j < grid.size(); ++j) {
                out[j] = value_at(j, grid);
            }
            return out;
        }
        std::vector<complex> c = m_coeffs;
        for (long f = m_lo; f <= m_hi; ++f) {
            c[static_cast<std::size_t>(f - m_lo)] *= std::pow(complex(0.0, static_cast<double>(f)), order);
        }
        const complex ny_lo = nyquist_half() * std::pow(complex(0.0, -static_cast<double>(m_hi)), order);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            complex acc{};
            for (long f = m_lo; f <= m_hi; ++f) {
                acc += c[static_cast<std::size_t>(f - m_lo)] * std::conj(grid.phase(f, j));
            }
            if (has_nyquist()) {
                acc += ny_lo * std::conj(grid.phase(-m_hi, j));
            }
            out[j] = acc;
        }
        return out;
    }

    complex coefficient(long f) const
    {
        if (f < m_lo || f > m_hi) {
            return (has_nyquist() && f == -m_hi) ? nyquist_half() : complex{};
        }
        return m_coeffs[static_cast<std::size_t>(f - m_lo)];
    }

private:
    bool has_nyquist() const noexcept
    {
        return m_hi != -m_lo;
    }
    complex nyquist_half() const noexcept
    {
        return has_nyquist() ? m_nyquist / 2.0 : complex{};
    }
    complex value_at(std::size_t j, const KGrid &grid) const
    {
        complex acc{};
        for (long f = m_lo; f <= m_hi; ++f) {
            acc += m_coeffs[static_cast<std::size_t>(f - m_lo)] * std::conj(grid.phase(f, j));
        }
        if (has_nyquist()) {
            acc += nyquist_half() * std::conj(grid.phase(-m_hi, j));
        }
        return acc;
    }

    long m_lo = 0, m_hi = 0;
    std::vector<complex> m_coeffs;
    complex m_nyquist{};
};

} // namespace latwig

#endif
