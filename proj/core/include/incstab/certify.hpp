#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "incstab/measure.hpp"
#include "incstab/model.hpp"
#include "incstab/regularize.hpp"

namespace incstab {

/// Deterministic sampling plan: an endpoint-inclusive grid per dimension, a
/// number of seeded uniform random points, plus switching-surface points
/// located by bisection along grid edges. The seed is recorded in the report
/// so every run is reproducible.
struct SamplingPlan {
    int grid = 64;
    int samples = 1000;
    std::uint64_t seed = 42;
};

struct Tolerances {
    /// Base tolerance for the switching-surface jump residual; the effective
    /// tolerance at a point is base * (1 + local field scale).
    double manifold = 1e-8;
};

struct CertifyOptions {
    MeasureNorm norm = MeasureNorm::two;
    SamplingPlan plan;
    Tolerances tol;
    double eps = 1e-3;
    TransitionKind zeta = TransitionKind::sine;
    /// Evaluate both modes over the whole box instead of their own half
    /// regions (more conservative).
    bool strict = false;
    /// Conditions are sampled at this fixed time.
    double t = 0.0;
};

/// A sampled supremum with the point attaining it. `value` reproduces to
/// 1e-12 when the quantity is re-evaluated at `argmax`.
struct SampledBound {
    enum class Kind { measure_max, norm_max, residual_max };
    Kind kind = Kind::measure_max;
    double value = 0.0;
    StatePoint argmax;
    int samples = 0;
    bool pass = false;
    std::optional<double> threshold;  // empty for pure bound estimates
};

struct Condition {
    std::string name;
    SampledBound bound;
};

struct CertRates {
    std::optional<double> p;              // system-I mode contraction rate
    std::optional<double> q;              // system-II mode contraction rate
    std::optional<double> eta;            // overall predicted rate (on pass)
    std::optional<double> gamma_product;  // feedback small-gain product
};

struct CertReport {
    std::string name;
    Topology topology = Topology::single;
    MeasureNorm norm = MeasureNorm::two;
    std::vector<std::string> state_names;
    std::vector<Condition> conditions;
    CertRates rates;
    bool pass = false;
    SamplingPlan plan;
    std::vector<std::string> notes;
};

/// Max of mu(J_own) for one mode over the region samples, restricted to the
/// mode's own side of the switching surface (plus the surface itself) unless
/// options.strict. Passes when the max is strictly negative; the contraction
/// rate estimate is its negation.
SampledBound check_mode_contraction(const Interconnection& ic, int sys, ModeTag mode,
                                    const CertifyOptions& options);

/// Max over located switching-surface points of |mu((f_pos - f_neg) outer
/// grad H)|. Passes when every residual is within tolerance. Throws
/// ConfigError when the surface does not intersect the region.
SampledBound check_manifold(const Interconnection& ic, int sys, const CertifyOptions& options);

/// Max of ‖J_other‖ for one mode over the samples: the coupling gain bound.
/// Always passes (the box is compact); the value feeds the small-gain check.
SampledBound check_interconnection_bound(const Interconnection& ic, int sys, ModeTag mode,
                                         const CertifyOptions& options);

/// Max of mu(psi J_pos + gamma J_neg) over all box samples including the
/// layer: the relaxed alternative when a single mode is not contracting.
SampledBound check_relaxed_blend(const Interconnection& ic, int sys,
                                 const CertifyOptions& options);

/// Small-gain product (k m) / (pF pG); the feedback loop passes when it is
/// strictly below 1. Rates must be positive.
double small_gain(double k, double m, double pF, double pG);

/// Run every check the topology calls for and assemble the report. A failed
/// condition yields a failing report, not an error.
CertReport certify(const Interconnection& ic, const CertifyOptions& options);

/// Serialize a report, including tool options for provenance.
std::string report_json(const CertReport& report,
                        const std::map<std::string, std::string>& provenance);

}  // namespace incstab
