#pragma once

#include <span>
#include <string>
#include <vector>

#include "incstab/dual.hpp"
#include "incstab/matrix.hpp"
#include "incstab/model.hpp"

namespace incstab {

/// Shape of the transition through the boundary layer. The sine kind is C^1
/// (zero slope at the layer edges), which the variational integration needs;
/// the linear kind is kept for comparison and has kinks at |r| = 1.
enum class TransitionKind { sine, linear };

TransitionKind parse_transition(const std::string& s);  // "sine" | "linear"
std::string transition_name(TransitionKind k);

/// Monotone odd saturation: -1 for r <= -1, +1 for r >= 1, and either
/// sin(pi r / 2) or r in between.
double zeta(double r, TransitionKind kind);
Dual zeta(const Dual& r, TransitionKind kind);

/// d zeta / d r. For the linear kind at |r| = 1 the slope is one-sided; the
/// inside value is returned and *one_sided is set when non-null.
double zeta_slope(double r, TransitionKind kind, bool* one_sided = nullptr);

/// Blend weights across the layer of half-width eps around H = 0:
/// psi = (1 + zeta(H/eps))/2 and gamma = 1 - psi (exactly, by construction).
struct Weights {
    double psi = 0.0;
    double gamma = 0.0;
};

Weights psi_gamma(double manifold_value, double eps, TransitionKind kind);
Weights psi_gamma(const Interconnection& ic, int sys, const StatePoint& p, double eps,
                  TransitionKind kind);

/// Regularized field of one system: psi * f_pos + gamma * f_neg. Matches
/// mode_pos exactly where H >= eps and mode_neg exactly where H <= -eps.
std::vector<double> blended_field(const Interconnection& ic, int sys, const StatePoint& p,
                                  double eps, TransitionKind kind);

/// Boundary-layer factor zeta'(H/eps) / (2 eps), the scalar in the rank-one
/// layer term of the regularized Jacobian.
struct ChiValue {
    double value = 0.0;
    bool one_sided = false;  // linear kind evaluated exactly at a kink
};

ChiValue chi(const Interconnection& ic, int sys, const StatePoint& p, double eps,
             TransitionKind kind);

/// Regularized field of the whole interconnection, all systems stacked in
/// state order.
std::vector<double> blended_field_all(const Interconnection& ic, const StatePoint& p, double eps,
                                      TransitionKind kind);

/// Jacobian-vector product of the full regularized field by one dual pass
/// seeded with `direction`. Includes the boundary-layer terms automatically.
std::vector<double> blended_jvp(const Interconnection& ic, const StatePoint& p,
                                std::span<const double> direction, double eps,
                                TransitionKind kind);

/// Full Jacobian of the regularized interconnection field (dual passes, one
/// per state). Includes the boundary-layer terms.
Matrix blended_jacobian(const Interconnection& ic, const StatePoint& p, double eps,
                        TransitionKind kind);

/// Convex combination psi * J_pos + gamma * J_neg of one system's mode
/// Jacobians, without the layer term. Used by the relaxed blended-measure
/// check and the overall interconnection measure.
Matrix blended_block_jacobian(const Interconnection& ic, int sys, const StatePoint& p, double eps,
                              TransitionKind kind, Block wrt);

}  // namespace incstab
