#include "modfun/poly_basis.hpp"

#include <cmath>

#include "modfun/errors.hpp"

namespace modfun::heat {

namespace {

// Monomials ordered by total degree, then by descending power of s1.
PolyBasis monomials(const Grid2D& grid, int degree) {
    if (degree < 0) throw ValidationError("poly basis: degree must be >= 0");
    if (full_poly_count(degree) > grid.size()) throw ValidationError("poly basis: more monomials than grid nodes");
    PolyBasis basis;
    basis.max_degree = degree;
    for (int d = 0; d <= degree; ++d) {
        for (int a = d; a >= 0; --a) {
            const int b = d - a;
            basis.exponents.emplace_back(a, b);
            basis.vectors.push_back(sample_field(grid, [&](double x, double y) {
                return std::pow(2.0 * x / grid.L1 - 1.0, a) * std::pow(2.0 * y / grid.L2 - 1.0, b);
            }));
        }
    }
    return basis;
}

void normalize_or_throw(const Grid2D& grid, Vector& v, double original_norm) {
    const double norm = l2_norm(grid, v);
    if (!(norm > 1e-10 * original_norm)) throw NumericalError("poly basis: monomials are linearly dependent on this grid");
    v /= norm;
}

}  // namespace

PolyBasis build_poly_basis(const Grid2D& grid, int degree) {
    PolyBasis basis = monomials(grid, degree);
    const int count = basis.count();
    const int n = grid.size();
    Matrix Q(n, count);
    for (int j = 0; j < count; ++j) {
        Vector v = basis.vectors[j];
        const double original = l2_norm(grid, v);
        for (int pass = 0; pass < 2; ++pass) {
            Vector coeff(j);
#pragma omp parallel for
            for (int i = 0; i < j; ++i) coeff(i) = l2_inner(grid, Q.col(i), v);
            v.noalias() -= Q.leftCols(j) * coeff;
        }
        normalize_or_throw(grid, v, original);
        Q.col(j) = v;
        basis.vectors[j] = v;
    }
    return basis;
}

PolyBasis build_poly_basis_serial(const Grid2D& grid, int degree) {
    PolyBasis basis = monomials(grid, degree);
    for (int j = 0; j < basis.count(); ++j) {
        Vector& v = basis.vectors[j];
        const double original = l2_norm(grid, v);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < j; ++i) v -= l2_inner(grid, basis.vectors[i], v) * basis.vectors[i];
        normalize_or_throw(grid, v, original);
    }
    return basis;
}

double basis_gram_deviation(const Grid2D& grid, const std::vector<Vector>& basis) {
    double worst = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            worst = std::max(worst, std::abs(l2_inner(grid, basis[i], basis[j]) - (i == j ? 1.0 : 0.0)));
    return worst;
}

Vector project(const Grid2D& grid, const std::vector<Vector>& basis, const Vector& x) {
    Vector out = Vector::Zero(x.size());
    for (const auto& b : basis) out += l2_inner(grid, b, x) * b;
    return out;
}

}  // namespace modfun::heat
