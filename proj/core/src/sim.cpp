#include "incstab/sim.hpp"

#include <algorithm>
#include <cmath>

#include "incstab/errors.hpp"

namespace incstab {

SimMethod parse_method(const std::string& s) {
    if (s == "event") return SimMethod::event;
    if (s == "regularized") return SimMethod::regularized;
    throw ConfigError("unknown method '" + s + "' (expected event or regularized)");
}

std::string method_name(SimMethod m) { return m == SimMethod::event ? "event" : "regularized"; }

namespace {

constexpr double kCrossingTol = 1e-10;  // |H| target for event localization
constexpr int kChatterLimit = 50;       // crossings of one surface per nominal step

void validate(const Interconnection& ic, const SimConfig& cfg) {
    if (!(cfg.tf > cfg.t0)) throw ConfigError("simulation requires tf > t0");
    if (!(cfg.dt > 0.0) || cfg.dt > (cfg.tf - cfg.t0) / 10.0)
        throw ConfigError("simulation requires 0 < dt <= (tf - t0)/10");
    if (cfg.method == SimMethod::regularized && !(cfg.eps > 0.0))
        throw ConfigError("regularized simulation requires eps > 0");
    if (static_cast<int>(cfg.x0.size()) != ic.dim())
        throw ConfigError("initial state must bind every declared state");
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

long step_count(const SimConfig& cfg) {
    return std::lround((cfg.tf - cfg.t0) / cfg.dt);
}

}  // namespace

std::vector<double> Trace::state_at(double t) const {
    if (times.empty()) throw ConfigError("empty trace");
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double span = times[hi] - times[lo];
    const double w = span > 0.0 ? (t - times[lo]) / span : 0.0;
    std::vector<double> out(states[lo].size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - w) * states[lo][i] + w * states[hi][i];
    return out;
}

std::vector<double> rk4_step(
    const std::function<std::vector<double>(double, std::span<const double>)>& f,
    std::span<const double> x, double t, double dt) {
    const std::size_t n = x.size();
    auto stage = [&](double tt, const std::vector<double>& xx) {
        std::vector<double> k = f(tt, xx);
        if (k.size() != n) throw ConfigError("derivative dimension mismatch");
        if (!all_finite(k)) throw NumericError("non-finite derivative", t);
        return k;
    };

    std::vector<double> x0(x.begin(), x.end());
    const std::vector<double> k1 = stage(t, x0);
    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x0[i] + 0.5 * dt * k1[i];
    const std::vector<double> k2 = stage(t + 0.5 * dt, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x0[i] + 0.5 * dt * k2[i];
    const std::vector<double> k3 = stage(t + 0.5 * dt, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x0[i] + dt * k3[i];
    const std::vector<double> k4 = stage(t + dt, tmp);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Event-driven integration
// ---------------------------------------------------------------------------

Trace integrate_event(const Interconnection& ic, const SimConfig& cfg) {
    validate(ic, cfg);
    if (cfg.method != SimMethod::event) throw ConfigError("integrate_event requires method=event");

    Trace trace;
    trace.columns = ic.state_names;

    StatePoint p;
    p.x = cfg.x0;
    p.t = cfg.t0;

    // Active mode per system, pos at ties (documented tie-break).
    std::vector<ModeTag> modes(static_cast<std::size_t>(ic.system_count()));
    for (int s = 0; s < ic.system_count(); ++s)
        modes[static_cast<std::size_t>(s)] = ic.active_mode(s, p);

    auto frozen_field = [&](double t, std::span<const double> x) {
        StatePoint q;
        q.x.assign(x.begin(), x.end());
        q.t = t;
        std::vector<double> out(static_cast<std::size_t>(ic.dim()));
        for (int s = 0; s < ic.system_count(); ++s) {
            const std::vector<double> f =
                ic.field_eval(s, modes[static_cast<std::size_t>(s)], q);
            const SwitchedSystem& sys = ic.systems[static_cast<std::size_t>(s)];
            for (int i = 0; i < sys.dim(); ++i)
                out[static_cast<std::size_t>(sys.slots[static_cast<std::size_t>(i)])] =
                    f[static_cast<std::size_t>(i)];
        }
        return out;
    };

    // Sign of H seen through the mode history: points parked on the surface
    // by the localizer count for the side their mode says, which keeps the
    // next step from re-detecting the crossing it just resolved.
    auto effective_sign = [&](int sys, const StatePoint& q) {
        const double h = ic.manifold_value(sys, q);
        if (std::abs(h) <= kCrossingTol)
            return modes[static_cast<std::size_t>(sys)] == ModeTag::pos ? 1.0 : -1.0;
        return h > 0.0 ? 1.0 : -1.0;
    };

    trace.times.push_back(p.t);
    trace.states.push_back(p.x);

    const long steps = step_count(cfg);
    for (long k = 0; k < steps; ++k) {
        const double step_start = cfg.t0 + static_cast<double>(k) * cfg.dt;
        const double step_end = cfg.t0 + static_cast<double>(k + 1) * cfg.dt;
        double t_cur = step_start;
        std::vector<int> crossings(static_cast<std::size_t>(ic.system_count()), 0);

        while (t_cur < step_end) {
            const double h_step = step_end - t_cur;
            std::vector<double> cand = rk4_step(frozen_field, p.x, t_cur, h_step);
            if (!all_finite(cand)) throw NumericError("state blow-up", t_cur);

            StatePoint q;
            q.x = cand;
            q.t = step_end;

            // Earliest crossing among systems whose surface sign flipped.
            int hit = -1;
            double hit_tau = h_step;
            for (int s = 0; s < ic.system_count(); ++s) {
                const double s0 = effective_sign(s, p);
                const double h1 = ic.manifold_value(s, q);
                if (h1 == 0.0 || (s0 > 0.0) == (h1 > 0.0)) continue;
                // Bisect the substep length for this system's crossing time.
                double lo = 0.0;
                double hi = h_step;
                double tau = hi;
                std::vector<double> xmid;
                for (int it = 0; it < 200; ++it) {
                    tau = 0.5 * (lo + hi);
                    xmid = rk4_step(frozen_field, p.x, t_cur, tau);
                    StatePoint m;
                    m.x = xmid;
                    m.t = t_cur + tau;
                    const double hm = ic.manifold_value(s, m);
                    if (std::abs(hm) <= kCrossingTol) break;
                    if ((hm > 0.0) == (s0 > 0.0)) lo = tau;
                    else hi = tau;
                }
                if (tau < hit_tau) {
                    hit = s;
                    hit_tau = tau;
                }
            }

            if (hit < 0) {
                p.x = std::move(cand);
                p.t = step_end;
                t_cur = step_end;
                break;
            }

            // Land on the crossing, log it, switch that system's mode.
            p.x = rk4_step(frozen_field, p.x, t_cur, hit_tau);
            t_cur += hit_tau;
            p.t = t_cur;
            const double h_here = ic.manifold_value(hit, p);
            const double s0_dir = modes[static_cast<std::size_t>(hit)] == ModeTag::pos ? 1.0 : -1.0;
            const int dir = s0_dir > 0.0 ? -1 : +1;
            modes[static_cast<std::size_t>(hit)] = dir > 0 ? ModeTag::pos : ModeTag::neg;
            (void)h_here;

            if (++crossings[static_cast<std::size_t>(hit)] > kChatterLimit)
                throw NumericError("possible sliding mode: more than " +
                                       std::to_string(kChatterLimit) +
                                       " crossings of one surface within a single step",
                                   t_cur);

            trace.events.push_back(TraceEvent{t_cur, hit + 1, dir});
            if (step_end - t_cur > 1e-12 * cfg.dt) {
                trace.times.push_back(t_cur);
                trace.states.push_back(p.x);
            } else {
                // Crossing coincides with the grid point; the nominal sample
                // below records it.
                t_cur = step_end;
                p.t = step_end;
            }
        }

        trace.times.push_back(step_end);
        trace.states.push_back(p.x);
        p.t = step_end;
    }

    return trace;
}

// ---------------------------------------------------------------------------
// Regularized and variational integration
// ---------------------------------------------------------------------------

namespace {

Trace integrate_smooth(const Interconnection& ic, const SimConfig& cfg, bool variational) {
    validate(ic, cfg);
    if (cfg.method != SimMethod::regularized)
        throw ConfigError("the blended field requires method=regularized");
    const int n = ic.dim();
    std::vector<double> z = cfg.x0;
    if (variational) {
        if (!cfg.dx0 || static_cast<int>(cfg.dx0->size()) != n)
            throw ConfigError("variational run requires an initial displacement per state");
        z.insert(z.end(), cfg.dx0->begin(), cfg.dx0->end());
    }

    auto rhs = [&](double t, std::span<const double> zz) {
        StatePoint q;
        q.x.assign(zz.begin(), zz.begin() + n);
        q.t = t;
        std::vector<double> out = blended_field_all(ic, q, cfg.eps, cfg.zeta);
        if (variational) {
            const std::span<const double> dx = zz.subspan(static_cast<std::size_t>(n));
            const std::vector<double> jvp = blended_jvp(ic, q, dx, cfg.eps, cfg.zeta);
            out.insert(out.end(), jvp.begin(), jvp.end());
        }
        return out;
    };

    Trace trace;
    trace.columns = ic.state_names;
    trace.times.push_back(cfg.t0);
    trace.states.emplace_back(z.begin(), z.begin() + n);
    if (variational) trace.dstates.emplace_back(z.begin() + n, z.end());

    const long steps = step_count(cfg);
    for (long k = 0; k < steps; ++k) {
        const double t = cfg.t0 + static_cast<double>(k) * cfg.dt;
        std::vector<double> next;
        try {
            next = rk4_step(rhs, z, t, cfg.dt);
        } catch (const NumericError&) {
            throw NumericError("state blow-up", t);
        }
        if (!all_finite(next)) throw NumericError("state blow-up", t);
        z = std::move(next);
        trace.times.push_back(cfg.t0 + static_cast<double>(k + 1) * cfg.dt);
        trace.states.emplace_back(z.begin(), z.begin() + n);
        if (variational) trace.dstates.emplace_back(z.begin() + n, z.end());
    }
    return trace;
}

}  // namespace

Trace integrate_regularized(const Interconnection& ic, const SimConfig& cfg) {
    return integrate_smooth(ic, cfg, /*variational=*/false);
}

Trace integrate_variational(const Interconnection& ic, const SimConfig& cfg) {
    return integrate_smooth(ic, cfg, /*variational=*/true);
}

// ---------------------------------------------------------------------------
// Derived studies
// ---------------------------------------------------------------------------

DistanceSeries pair_trace(const Interconnection& ic, const SimConfig& cfg,
                          const std::vector<double>& ic_a, const std::vector<double>& ic_b,
                          MeasureNorm norm) {
    SimConfig ca = cfg;
    ca.x0 = ic_a;
    SimConfig cb = cfg;
    cb.x0 = ic_b;
    const Trace ta = cfg.method == SimMethod::event ? integrate_event(ic, ca)
                                                    : integrate_regularized(ic, ca);
    const Trace tb = cfg.method == SimMethod::event ? integrate_event(ic, cb)
                                                    : integrate_regularized(ic, cb);

    // Nominal grid times are computed identically in both runs, so matching
    // on exact equality keeps grid points and drops inserted event points.
    DistanceSeries out;
    std::size_t ia = 0;
    std::size_t ib = 0;
    std::vector<double> diff(static_cast<std::size_t>(ic.dim()));
    while (ia < ta.times.size() && ib < tb.times.size()) {
        if (ta.times[ia] < tb.times[ib]) {
            ++ia;
            continue;
        }
        if (tb.times[ib] < ta.times[ia]) {
            ++ib;
            continue;
        }
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = ta.states[ia][i] - tb.states[ib][i];
        out.times.push_back(ta.times[ia]);
        out.values.push_back(vec_norm(diff, norm));
        ++ia;
        ++ib;
    }
    return out;
}

std::vector<double> geometric_eps_schedule(double eps, int levels) {
    if (!(eps > 0.0)) throw ConfigError("eps schedule requires eps > 0");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) out.push_back(eps * std::pow(0.5, i));
    return out;
}

EpsStudy eps_error_study(const Interconnection& ic, const SimConfig& cfg,
                         const std::vector<double>& eps_levels, MeasureNorm norm) {
    if (eps_levels.size() < 3)
        throw ConfigError("eps study requires at least 3 regularization levels");
    for (double e : eps_levels)
        if (!(e > 0.0)) throw ConfigError("eps study levels must be positive");

    SimConfig ce = cfg;
    ce.method = SimMethod::event;
    const Trace event = integrate_event(ic, ce);

    EpsStudy study;
    study.eps_levels = eps_levels;
    std::vector<double> diff(static_cast<std::size_t>(ic.dim()));
    for (double eps : eps_levels) {
        SimConfig cr = cfg;
        cr.method = SimMethod::regularized;
        cr.eps = eps;
        const Trace reg = integrate_regularized(ic, cr);
        double worst = 0.0;
        for (std::size_t k = 0; k < event.times.size(); ++k) {
            const std::vector<double> r = reg.state_at(event.times[k]);
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = r[i] - event.states[k][i];
            worst = std::max(worst, vec_norm(diff, norm));
        }
        study.max_errors.push_back(worst);
    }
    for (std::size_t i = 1; i < study.max_errors.size(); ++i) {
        const double prev = study.max_errors[i - 1];
        study.ratios.push_back(prev > 0.0 ? study.max_errors[i] / prev
                                          : std::numeric_limits<double>::quiet_NaN());
    }
    return study;
}

}  // namespace incstab
