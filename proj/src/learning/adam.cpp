#include "facegen/learning/adam.hpp"

#include <cmath>

#include "facegen/error.hpp"

namespace facegen::learning {

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad,
               double lr, const AdamOptions& options) {
    require(state.m.size() == params.size() && state.v.size() == params.size() && grad.size() == params.size(),
            ErrorCode::ShapeMismatch, "Adam state, parameters and gradient must have equal length");
    ++state.step;
    const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        state.m(i) = options.beta1 * state.m(i) + (1.0 - options.beta1) * grad(i);
        state.v(i) = options.beta2 * state.v(i) + (1.0 - options.beta2) * grad(i) * grad(i);
        const double m_hat = state.m(i) / c1;
        const double v_hat = state.v(i) / c2;
        const double delta = lr * (m_hat / (std::sqrt(v_hat) + options.eps));
        if (delta != 0.0) params(i) -= delta;  // keeps signed zeros intact
    }
}

}  // namespace facegen::learning
