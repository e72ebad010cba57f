#ifndef LATWIG_ERRORS_HPP
#define LATWIG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace latwig
{

// Bad argument to a numerical routine (out-of-domain nome, non-unitary
// rotation, mismatched grids, ...).
class domain_error : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

// The k-grid is too coarse for exact periodic quadrature on the window.
class grid_error : public domain_error
{
public:
    using domain_error::domain_error;
};

// Probability reached the edge of the truncated lattice.
class boundary_leak_error : public std::runtime_error
{
public:
    boundary_leak_error(const std::string &what, double leak)
        : std::runtime_error(what), m_leak(leak)
    {}
    double leak() const noexcept
    {
        return m_leak;
    }

private:
    double m_leak;
};

// Scenario files that do not parse or violate a static constraint.
class config_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// A numerical invariant failed at run time (two-path mismatch, ...).
class invariant_violation : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace latwig

#endif
