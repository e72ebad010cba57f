#ifndef LATWIG_STATE_IO_HPP
#define LATWIG_STATE_IO_HPP

#include <string>

#include <json.hpp>

#include <latwig/errors.hpp>
#include <latwig/state.hpp>

// JSON documents for states, used by golden-file tests:
//
//   {"kind": "pure_state" | "density_operator",
//    "window": {"n_min": .., "n_max": .., "a": ..},
//    "data": [[re, im], ...]}            // composite order, row-major
namespace latwig
{

namespace detail
{

inline nlohmann::json window_to_json(const LatticeWindow &w)
{
    return {{"n_min", w.n_min}, {"n_max", w.n_max}, {"a", w.a}};
}

inline LatticeWindow window_from_json(const nlohmann::json &j)
{
    return LatticeWindow(j.at("n_min").get<long>(), j.at("n_max").get<long>(), j.value("a", 1.0));
}

inline complex complex_from_json(const nlohmann::json &j)
{
    if (!j.is_array() || j.size() != 2) {
        throw config_error("expected a [re, im] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace detail

inline nlohmann::json to_json(const PureState &psi)
{
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index i = 0; i < psi.amplitudes.size(); ++i) {
        data.push_back({psi.amplitudes[i].real(), psi.amplitudes[i].imag()});
    }
    return {{"kind", "pure_state"}, {"window", detail::window_to_json(psi.window)}, {"data", std::move(data)}};
}

inline nlohmann::json to_json(const DensityOperator &rho)
{
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index r = 0; r < rho.matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < rho.matrix.cols(); ++c) {
            data.push_back({rho.matrix(r, c).real(), rho.matrix(r, c).imag()});
        }
    }
    return {{"kind", "density_operator"}, {"window", detail::window_to_json(rho.window)}, {"data", std::move(data)}};
}

inline PureState pure_state_from_json(const nlohmann::json &j)
{
    if (j.at("kind") != "pure_state") {
        throw config_error("expected kind \"pure_state\"");
    }
    PureState psi(detail::window_from_json(j.at("window")));
    const auto &data = j.at("data");
    if (data.size() != static_cast<std::size_t>(psi.window.dim())) {
        throw config_error("pure_state: data length does not match window");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        psi.amplitudes[static_cast<Eigen::Index>(i)] = detail::complex_from_json(data[i]);
    }
    return psi;
}

inline DensityOperator density_operator_from_json(const nlohmann::json &j)
{
    if (j.at("kind") != "density_operator") {
        throw config_error("expected kind \"density_operator\"");
    }
    DensityOperator rho(detail::window_from_json(j.at("window")));
    const auto &data = j.at("data");
    const auto d = static_cast<std::size_t>(rho.window.dim());
    if (data.size() != d * d) {
        throw config_error("density_operator: data length does not match window");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        rho.matrix(static_cast<Eigen::Index>(i / d), static_cast<Eigen::Index>(i % d)) =
            detail::complex_from_json(data[i]);
    }
    return rho;
}

} // namespace latwig

#endif
