#pragma once

#include <string>

#include "modfun/signal.hpp"

namespace modfun {

/// Adjoint null control eta (acts on y) and the adjoint output mu (acts on u). For t >= horizon,
/// (u*mu - y*eta)(t) reproduces the target functional of the state.
struct ModulatingPair {
    ImpulsiveSignal eta;
    ImpulsiveSignal mu;
    double horizon = 0.0;
    /// phi0 for functionals of the form <x, phi0>; empty when the functional is described
    /// only by `functional` (e.g. a point evaluation).
    Vector target;
    std::string functional;
    /// Relative adjoint end-state residual |phi(T)| / |phi0|, or an absolute residual for
    /// functionals without a target vector.
    double residual = 0.0;
    bool degraded = false;
};

/// Checks supp(eta), supp(mu) within [0, horizon] and matching dimensions; throws ValidationError.
void validate_pair(const ModulatingPair& pair, int input_dim, int output_dim);

}  // namespace modfun
