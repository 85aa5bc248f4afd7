#pragma once

#include "modfun/lti.hpp"
#include "modfun/modulating_pair.hpp"

namespace modfun {

struct NullControlOptions {
    /// Reject when lambda_min(W) < floor * lambda_max(W).
    double conditioning_floor = 1e-12;
};

/// Minimum-energy control eta steering phi' = A^T phi + C^T eta from phi0 to 0 in time T, with
/// mu = B^T phi + D^T eta. eta is linear between samples and the adjoint is integrated exactly
/// for that class, so the sampled pair nulls the adjoint to roundoff. The energy is the
/// trapezoidal L2 norm of the samples. Throws NotNullControllable when the observability
/// Gramian is below the conditioning floor.
ModulatingPair adjoint_null_control(const LtiSystem& sys, const Vector& phi0, double T, double dt,
                                    const NullControlOptions& options = {});

/// End state of the adjoint driven by the pair's sampled eta from phi0; used as an oracle.
Vector adjoint_end_state(const LtiSystem& sys, const Vector& phi0, const ModulatingPair& pair);

}  // namespace modfun
