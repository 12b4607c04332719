#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "incstab/measure.hpp"
#include "incstab/model.hpp"
#include "incstab/regularize.hpp"

namespace incstab {

enum class SimMethod { event, regularized };

SimMethod parse_method(const std::string& s);
std::string method_name(SimMethod m);

struct SimConfig {
    SimMethod method = SimMethod::event;
    double t0 = 0.0;
    double tf = 5.0;
    double dt = 1e-3;
    double eps = 1e-3;                       // regularized method only
    TransitionKind zeta = TransitionKind::sine;
    std::vector<double> x0;                  // full state, declaration order
    std::optional<std::vector<double>> dx0;  // variational block, same order
};

struct TraceEvent {
    double t = 0.0;
    int system = 0;  // 1-based
    int dir = 0;     // +1 upward crossing, -1 downward
};

/// Time-indexed record of one run. Times advance on a constant grid with
/// extra points inserted at located switching instants.
struct Trace {
    std::vector<std::string> columns;             // state names
    std::vector<double> times;
    std::vector<std::vector<double>> states;      // one full state per time
    std::vector<std::vector<double>> dstates;     // variational block, may be empty
    std::vector<TraceEvent> events;

    [[nodiscard]] bool has_variational() const { return !dstates.empty(); }
    /// Linear interpolation of the state at time t (clamped to the span).
    [[nodiscard]] std::vector<double> state_at(double t) const;
};

/// One classical fourth-order Runge-Kutta update of xdot = f(t, x).
/// Throws NumericError if any stage produces a non-finite derivative.
std::vector<double> rk4_step(
    const std::function<std::vector<double>(double, std::span<const double>)>& f,
    std::span<const double> x, double t, double dt);

/// Integrate with the active mode per system; a sign change of any switching
/// function across a step is bisected to |H| <= 1e-10, the crossing point is
/// inserted, the mode flips, and the run continues. More than 50 crossings of
/// one surface within a single nominal step aborts with a sliding-mode
/// diagnostic.
Trace integrate_event(const Interconnection& ic, const SimConfig& cfg);

/// Integrate the smooth blended field of every system jointly.
Trace integrate_regularized(const Interconnection& ic, const SimConfig& cfg);

/// Integrate the augmented state [x; dx] on the blended field, where dx
/// follows the full regularized Jacobian (including the boundary-layer term)
/// applied to dx via one dual pass per stage.
Trace integrate_variational(const Interconnection& ic, const SimConfig& cfg);

/// Distances between two runs started from ic_a and ic_b, reported on the
/// shared nominal time grid in the chosen vector norm.
struct DistanceSeries {
    std::vector<double> times;
    std::vector<double> values;
};

DistanceSeries pair_trace(const Interconnection& ic, const SimConfig& cfg,
                          const std::vector<double>& ic_a, const std::vector<double>& ic_b,
                          MeasureNorm norm);

/// For each regularization level, the max-over-time distance between the
/// event-driven run and the regularized run, compared on the event trace's
/// time grid with linear interpolation of the regularized trace.
struct EpsStudy {
    std::vector<double> eps_levels;
    std::vector<double> max_errors;
    std::vector<double> ratios;  // successive max_errors[i+1] / max_errors[i]
};

EpsStudy eps_error_study(const Interconnection& ic, const SimConfig& cfg,
                         const std::vector<double>& eps_levels, MeasureNorm norm);

/// Geometric schedule eps, eps/2, eps/4, ... with `levels` entries.
std::vector<double> geometric_eps_schedule(double eps, int levels);

}  // namespace incstab
