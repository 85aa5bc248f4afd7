#pragma once

#include <utility>
#include <vector>

#include "modfun/heat.hpp"

namespace modfun::heat {

/// L2(Omega)-orthonormal polynomials on the interior grid, from Gram-Schmidt applied to the
/// monomials s1^a s2^b, a + b <= degree, in the scaled coordinates s = 2 xi / L - 1.
struct PolyBasis {
    int max_degree = 0;
    std::vector<std::pair<int, int>> exponents;
    std::vector<Vector> vectors;

    int count() const noexcept { return static_cast<int>(vectors.size()); }
};

/// (d + 1)(d + 2) / 2 monomials of total degree <= d in two variables.
constexpr int full_poly_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

/// Classical Gram-Schmidt with one reorthogonalization pass; projections evaluated in parallel.
PolyBasis build_poly_basis(const Grid2D& grid, int degree);

/// Modified Gram-Schmidt with a second pass, single-threaded; reference for build_poly_basis.
PolyBasis build_poly_basis_serial(const Grid2D& grid, int degree);

/// max |<phi_i, phi_j>_L2 - delta_ij|.
double basis_gram_deviation(const Grid2D& grid, const std::vector<Vector>& basis);

/// Orthogonal projection onto span(basis) in L2(Omega); basis must be orthonormal.
Vector project(const Grid2D& grid, const std::vector<Vector>& basis, const Vector& x);

}  // namespace modfun::heat
