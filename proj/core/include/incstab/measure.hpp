#pragma once

#include <span>
#include <string>

#include "incstab/matrix.hpp"

namespace incstab {

/// Which induced norm backs the matrix measure and operator norm.
enum class MeasureNorm { one, two, inf };

MeasureNorm parse_norm(const std::string& s);  // "1" | "2" | "inf"
std::string norm_name(MeasureNorm p);

/// Matrix measure (logarithmic norm) of a square matrix:
///   mu_1  = max_j ( a_jj + sum_{i!=j} |a_ij| )
///   mu_inf= max_i ( a_ii + sum_{j!=i} |a_ij| )
///   mu_2  = largest eigenvalue of (A + A^T)/2
/// Can be negative; bounds trajectory growth rates of xdot = A x.
double mu(const Matrix& a, MeasureNorm p);

/// Induced operator norm: max column abs-sum (1), max row abs-sum (inf),
/// sqrt of the largest eigenvalue of A^T A (2).
double opnorm(const Matrix& a, MeasureNorm p);

/// Largest eigenvalue of a symmetric matrix via cyclic Jacobi rotations.
/// Symmetry is required within 1e-12 (relative to the Frobenius scale); the
/// sweep runs until the off-diagonal Frobenius norm drops below 1e-12 times
/// the input scale.
double sym_eig_max(const Matrix& s);

/// First-order approximation of mu from its limit definition,
/// (‖I + hA‖_p − 1)/h with h in (0, 1e-4]. Independent oracle for `mu`.
double mu_limit_oracle(const Matrix& a, MeasureNorm p, double h = 1e-8);

/// Vector p-norm matching the MeasureNorm tags.
double vec_norm(std::span<const double> v, MeasureNorm p);

}  // namespace incstab
