#include "incstab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <json.hpp>

#include "incstab/errors.hpp"

namespace incstab {

using nlohmann::json;

namespace {

constexpr double kSideTol = 1e-12;       // closure tolerance for half-region filters
constexpr double kBisectTol = 1e-12;     // |H| target for surface points
constexpr std::size_t kMaxGridPoints = 1u << 24;

// Uniform doubles derived from the raw engine output, so streams are
// identical across standard library implementations.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : eng_(seed) {}

    double in(double lo, double hi) {
        const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

private:
    std::mt19937_64 eng_;
};

struct SampleSet {
    std::vector<StatePoint> box;                      // grid then random points
    std::vector<std::vector<StatePoint>> manifold;    // per system, on H = 0
};

std::vector<double> axis_grid(const Interval& iv, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        out[static_cast<std::size_t>(k)] =
            iv.lo + (iv.hi - iv.lo) * (static_cast<double>(k) / (n - 1));
    return out;
}

StatePoint bisect_on_edge(const Interconnection& ic, int sys, StatePoint p, int dim, double a,
                          double b, double ha, double hb) {
    // Invariant: H(a) and H(b) have opposite signs.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        p.x[static_cast<std::size_t>(dim)] = mid;
        const double hm = ic.manifold_value(sys, p);
        if (std::abs(hm) <= kBisectTol || b - a <= 0.0) return p;
        if ((ha < 0.0) == (hm < 0.0)) {
            a = mid;
            ha = hm;
        } else {
            b = mid;
            hb = hm;
        }
    }
    (void)hb;
    return p;
}

SampleSet build_samples(const Interconnection& ic, const SamplingPlan& plan, double t) {
    if (plan.grid < 2) throw ConfigError("sampling plan requires grid resolution >= 2");
    if (plan.samples < 0) throw ConfigError("sampling plan requires samples >= 0");

    const int dim = ic.dim();
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(dim));
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) {
        axes[static_cast<std::size_t>(d)] = axis_grid(ic.region[static_cast<std::size_t>(d)],
                                                      plan.grid);
        total *= static_cast<std::size_t>(plan.grid);
        if (total > kMaxGridPoints)
            throw ConfigError("grid has too many points; lower --grid for this dimension");
    }

    SampleSet set;
    set.box.reserve(total + static_cast<std::size_t>(plan.samples));

    // Cartesian grid, row-major in state order.
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (std::size_t n = 0; n < total; ++n) {
        StatePoint p;
        p.t = t;
        p.x.resize(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d)
            p.x[static_cast<std::size_t>(d)] =
                axes[static_cast<std::size_t>(d)][static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
        set.box.push_back(std::move(p));
        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] < plan.grid) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
    }

    UniformSource rng(plan.seed);
    for (int s = 0; s < plan.samples; ++s) {
        StatePoint p;
        p.t = t;
        p.x.resize(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d) {
            const Interval& iv = ic.region[static_cast<std::size_t>(d)];
            p.x[static_cast<std::size_t>(d)] = rng.in(iv.lo, iv.hi);
        }
        set.box.push_back(std::move(p));
    }

    // Switching-surface points: bisect along every grid edge whose endpoint
    // manifold values straddle zero. The grid part of `box` is ordered
    // row-major, so the neighbor along dimension d is at a fixed stride.
    set.manifold.resize(static_cast<std::size_t>(ic.system_count()));
    std::vector<std::size_t> stride(static_cast<std::size_t>(dim), 1);
    for (int d = dim - 2; d >= 0; --d)
        stride[static_cast<std::size_t>(d)] =
            stride[static_cast<std::size_t>(d + 1)] * static_cast<std::size_t>(plan.grid);

    for (int sys = 0; sys < ic.system_count(); ++sys) {
        auto& pts = set.manifold[static_cast<std::size_t>(sys)];
        std::vector<double> h(total);
        for (std::size_t n = 0; n < total; ++n) h[n] = ic.manifold_value(sys, set.box[n]);
        // Grid points landing exactly on the surface count as surface points.
        for (std::size_t n = 0; n < total; ++n)
            if (h[n] == 0.0) pts.push_back(set.box[n]);
        for (std::size_t n = 0; n < total; ++n) {
            for (int d = 0; d < dim; ++d) {
                // Skip when this point is the last along dimension d.
                const std::size_t along =
                    (n / stride[static_cast<std::size_t>(d)]) % static_cast<std::size_t>(plan.grid);
                if (along + 1 == static_cast<std::size_t>(plan.grid)) continue;
                const std::size_t m = n + stride[static_cast<std::size_t>(d)];
                const double ha = h[n];
                const double hb = h[m];
                if (ha == 0.0 || hb == 0.0 || (ha < 0.0) == (hb < 0.0)) continue;
                const double a = set.box[n].x[static_cast<std::size_t>(d)];
                const double b = set.box[m].x[static_cast<std::size_t>(d)];
                pts.push_back(bisect_on_edge(ic, sys, set.box[n], d, a, b, ha, hb));
            }
        }
    }

    return set;
}

bool on_side(const Interconnection& ic, int sys, ModeTag mode, const StatePoint& p) {
    const double h = ic.manifold_value(sys, p);
    return mode == ModeTag::pos ? h >= -kSideTol : h <= kSideTol;
}

std::vector<const StatePoint*> side_samples(const Interconnection& ic, int sys, ModeTag mode,
                                            const SampleSet& set, bool strict) {
    std::vector<const StatePoint*> out;
    out.reserve(set.box.size());
    for (const StatePoint& p : set.box)
        if (strict || on_side(ic, sys, mode, p)) out.push_back(&p);
    for (const StatePoint& p : set.manifold[static_cast<std::size_t>(sys)]) out.push_back(&p);
    return out;
}

Matrix outer_product(const std::vector<double>& col, const std::vector<double>& row) {
    Matrix m(static_cast<int>(col.size()), static_cast<int>(row.size()));
    for (std::size_t i = 0; i < col.size(); ++i)
        for (std::size_t j = 0; j < row.size(); ++j)
            m(static_cast<int>(i), static_cast<int>(j)) = col[i] * row[j];
    return m;
}

SampledBound max_over(SampledBound::Kind kind, const std::vector<const StatePoint*>& pts,
                      const std::function<double(const StatePoint&)>& value) {
    SampledBound b;
    b.kind = kind;
    b.samples = static_cast<int>(pts.size());
    b.value = -std::numeric_limits<double>::infinity();
    for (const StatePoint* p : pts) {
        const double v = value(*p);
        if (v > b.value) {
            b.value = v;
            b.argmax = *p;
        }
    }
    return b;
}

SampledBound contraction_impl(const Interconnection& ic, int sys, ModeTag mode,
                              const CertifyOptions& options, const SampleSet& set) {
    const auto pts = side_samples(ic, sys, mode, set, options.strict);
    if (pts.empty())
        throw ConfigError("no samples on the " + mode_name(mode) + " side for system " +
                          std::to_string(sys + 1));
    SampledBound b = max_over(SampledBound::Kind::measure_max, pts, [&](const StatePoint& p) {
        return mu(ic.mode_jacobian(sys, mode, p, Block::own), options.norm);
    });
    b.threshold = 0.0;
    b.pass = b.value < 0.0;
    return b;
}

SampledBound coupling_impl(const Interconnection& ic, int sys, ModeTag mode,
                           const CertifyOptions& options, const SampleSet& set) {
    if (ic.topology == Topology::single)
        throw ConfigError("coupling bounds are undefined for a single topology");
    const auto pts = side_samples(ic, sys, mode, set, options.strict);
    if (pts.empty())
        throw ConfigError("no samples on the " + mode_name(mode) + " side for system " +
                          std::to_string(sys + 1));
    SampledBound b = max_over(SampledBound::Kind::norm_max, pts, [&](const StatePoint& p) {
        return opnorm(ic.mode_jacobian(sys, mode, p, Block::other), options.norm);
    });
    b.pass = std::isfinite(b.value);
    return b;
}

SampledBound manifold_impl(const Interconnection& ic, int sys, const CertifyOptions& options,
                           const SampleSet& set) {
    const auto& pts = set.manifold[static_cast<std::size_t>(sys)];
    if (pts.empty())
        throw ConfigError("switching surface of system " + std::to_string(sys + 1) +
                          " does not intersect the region");
    SampledBound b;
    b.kind = SampledBound::Kind::residual_max;
    b.samples = static_cast<int>(pts.size());
    b.value = -std::numeric_limits<double>::infinity();
    b.pass = true;
    double worst_tol = options.tol.manifold;
    for (const StatePoint& p : pts) {
        const std::vector<double> fp = ic.field_eval(sys, ModeTag::pos, p);
        const std::vector<double> fn = ic.field_eval(sys, ModeTag::neg, p);
        std::vector<double> jump(fp.size());
        for (std::size_t i = 0; i < fp.size(); ++i) jump[i] = fp[i] - fn[i];
        const Matrix m = outer_product(jump, ic.manifold_gradient(sys, p));
        const double residual = std::abs(mu(m, options.norm));
        const double scale =
            std::max(vec_norm(fp, options.norm), vec_norm(fn, options.norm));
        const double tol = options.tol.manifold * (1.0 + scale);
        if (residual > tol) b.pass = false;
        if (residual > b.value) {
            b.value = residual;
            b.argmax = p;
            worst_tol = tol;
        }
    }
    b.threshold = worst_tol;
    return b;
}

SampledBound relaxed_impl(const Interconnection& ic, int sys, const CertifyOptions& options,
                          const SampleSet& set) {
    std::vector<const StatePoint*> pts;
    pts.reserve(set.box.size() + set.manifold[static_cast<std::size_t>(sys)].size());
    for (const StatePoint& p : set.box) pts.push_back(&p);
    for (const StatePoint& p : set.manifold[static_cast<std::size_t>(sys)]) pts.push_back(&p);
    SampledBound b = max_over(SampledBound::Kind::measure_max, pts, [&](const StatePoint& p) {
        return mu(blended_block_jacobian(ic, sys, p, options.eps, options.zeta, Block::own),
                  options.norm);
    });
    b.threshold = 0.0;
    b.pass = b.value < 0.0;
    return b;
}

// Sampled measure of the full regularized Jacobian; the classical overall
// contraction certificate for the interconnected system.
SampledBound overall_impl(const Interconnection& ic, const CertifyOptions& options,
                          const SampleSet& set) {
    std::vector<const StatePoint*> pts;
    pts.reserve(set.box.size());
    for (const StatePoint& p : set.box) pts.push_back(&p);
    for (const auto& per_sys : set.manifold)
        for (const StatePoint& p : per_sys) pts.push_back(&p);
    SampledBound b = max_over(SampledBound::Kind::measure_max, pts, [&](const StatePoint& p) {
        return mu(blended_jacobian(ic, p, options.eps, options.zeta), options.norm);
    });
    b.threshold = 0.0;
    b.pass = b.value < 0.0;
    return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public per-check entry points (each builds its own sample set).
// ---------------------------------------------------------------------------

SampledBound check_mode_contraction(const Interconnection& ic, int sys, ModeTag mode,
                                    const CertifyOptions& options) {
    const SampleSet set = build_samples(ic, options.plan, options.t);
    return contraction_impl(ic, sys, mode, options, set);
}

SampledBound check_manifold(const Interconnection& ic, int sys, const CertifyOptions& options) {
    const SampleSet set = build_samples(ic, options.plan, options.t);
    return manifold_impl(ic, sys, options, set);
}

SampledBound check_interconnection_bound(const Interconnection& ic, int sys, ModeTag mode,
                                         const CertifyOptions& options) {
    const SampleSet set = build_samples(ic, options.plan, options.t);
    return coupling_impl(ic, sys, mode, options, set);
}

SampledBound check_relaxed_blend(const Interconnection& ic, int sys,
                                 const CertifyOptions& options) {
    const SampleSet set = build_samples(ic, options.plan, options.t);
    return relaxed_impl(ic, sys, options, set);
}

double small_gain(double k, double m, double pF, double pG) {
    if (!(pF > 0.0) || !(pG > 0.0))
        throw ConfigError("small_gain requires positive contraction rates");
    return (k * m) / (pF * pG);
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

namespace {

SampledBound failed_bound(SampledBound::Kind kind) {
    SampledBound b;
    b.kind = kind;
    b.value = std::numeric_limits<double>::quiet_NaN();
    b.pass = false;
    b.samples = 0;
    return b;
}

}  // namespace

CertReport certify(const Interconnection& ic, const CertifyOptions& options) {
    CertReport report;
    report.name = ic.name;
    report.topology = ic.topology;
    report.norm = options.norm;
    report.state_names = ic.state_names;
    report.plan = options.plan;

    const SampleSet set = build_samples(ic, options.plan, options.t);

    // Whether any field or surface is genuinely time-varying.
    bool time_varying = false;
    for (const SwitchedSystem& sys : ic.systems) {
        for (const Mode* m : {&sys.mode_pos, &sys.mode_neg})
            for (const Expr& e : m->field)
                for (const std::string& v : e.variables()) time_varying |= v == "t";
    }
    if (time_varying)
        report.notes.push_back("fields reference t; conditions sampled at fixed t = " +
                               std::to_string(options.t));

    struct PerSystem {
        std::optional<double> rate;      // min over modes of -max mu, when both pass
        std::optional<double> coupling;  // max over modes of the gain bound
        bool contraction_pass = true;
    };
    std::vector<PerSystem> per(static_cast<std::size_t>(ic.system_count()));

    for (int sys = 0; sys < ic.system_count(); ++sys) {
        const std::string prefix = "sys" + std::to_string(sys + 1) + ".";
        PerSystem& acc = per[static_cast<std::size_t>(sys)];
        double worst_rate = std::numeric_limits<double>::infinity();

        for (ModeTag mode : {ModeTag::pos, ModeTag::neg}) {
            Condition c;
            c.name = prefix + "mode_" + mode_name(mode) + ".contraction";
            try {
                c.bound = contraction_impl(ic, sys, mode, options, set);
            } catch (const ConfigError& e) {
                c.bound = failed_bound(SampledBound::Kind::measure_max);
                report.notes.push_back(c.name + ": " + e.what());
            }
            acc.contraction_pass &= c.bound.pass;
            worst_rate = std::min(worst_rate, -c.bound.value);
            report.conditions.push_back(std::move(c));
        }
        if (acc.contraction_pass) acc.rate = worst_rate;

        Condition cm;
        cm.name = prefix + "manifold";
        try {
            cm.bound = manifold_impl(ic, sys, options, set);
        } catch (const ConfigError& e) {
            cm.bound = failed_bound(SampledBound::Kind::residual_max);
            report.notes.push_back(cm.name + ": " + e.what());
        }
        report.conditions.push_back(std::move(cm));

        // Coupling gain bounds: system II of a cascade, both systems of a
        // feedback loop.
        const bool wants_coupling =
            (ic.topology == Topology::feedback) || (ic.topology == Topology::cascade && sys == 1);
        if (wants_coupling) {
            double worst_gain = 0.0;
            for (ModeTag mode : {ModeTag::pos, ModeTag::neg}) {
                Condition c;
                c.name = prefix + "mode_" + mode_name(mode) + ".coupling";
                try {
                    c.bound = coupling_impl(ic, sys, mode, options, set);
                } catch (const ConfigError& e) {
                    c.bound = failed_bound(SampledBound::Kind::norm_max);
                    report.notes.push_back(c.name + ": " + e.what());
                }
                worst_gain = std::max(worst_gain, c.bound.value);
                report.conditions.push_back(std::move(c));
            }
            acc.coupling = worst_gain;
        }

        // Diagnostic fallback: when a mode fails on its own, report whether
        // the blended Jacobian still contracts.
        if (!acc.contraction_pass) {
            Condition c;
            c.name = prefix + "relaxed_blend";
            c.bound = relaxed_impl(ic, sys, options, set);
            report.notes.push_back(c.name +
                                   ": diagnostic only; a negative value means the blended field "
                                   "contracts even though a single mode does not");
            report.conditions.push_back(std::move(c));
        }
    }

    report.rates.p = per[0].rate;
    if (ic.system_count() > 1) report.rates.q = per[1].rate;

    if (ic.topology == Topology::feedback) {
        Condition c;
        c.name = "small_gain";
        if (per[0].rate && per[1].rate && per[0].coupling && per[1].coupling) {
            const double gamma =
                small_gain(*per[0].coupling, *per[1].coupling, *per[0].rate, *per[1].rate);
            c.bound.kind = SampledBound::Kind::norm_max;
            c.bound.value = gamma;
            c.bound.threshold = 1.0;
            c.bound.pass = gamma < 1.0;
            c.bound.samples = 0;
            report.rates.gamma_product = gamma;
        } else {
            c.bound = failed_bound(SampledBound::Kind::norm_max);
            c.bound.threshold = 1.0;
            report.notes.push_back(
                "small_gain: not evaluated because a mode contraction condition failed");
        }
        report.conditions.push_back(std::move(c));
    }

    report.pass = true;
    for (const Condition& c : report.conditions) report.pass &= c.bound.pass;

    if (report.pass) {
        switch (ic.topology) {
            case Topology::single:
                report.rates.eta = report.rates.p;
                break;
            case Topology::cascade:
                report.rates.eta = std::min(*report.rates.p, *report.rates.q);
                break;
            case Topology::feedback: {
                // The loop conditions alone fix no overall rate; report the
                // sampled contraction rate of the full regularized Jacobian,
                // the classical certificate for the coupled system.
                const SampledBound overall = overall_impl(ic, options, set);
                if (overall.pass) report.rates.eta = -overall.value;
                report.notes.push_back(
                    "rates.eta (feedback): sampled contraction rate of the full regularized "
                    "Jacobian over the region");
                break;
            }
        }
    }

    report.notes.push_back(
        "bounds are sampled estimates over the user-supplied region box; forward invariance "
        "of the box is the caller's assertion");
    report.notes.push_back(
        "manifold condition uses the rank-one jump form (f_pos - f_neg) outer grad H");

    return report;
}

std::string report_json(const CertReport& report,
                        const std::map<std::string, std::string>& provenance) {
    json doc;
    doc["name"] = report.name;
    doc["topology"] = topology_name(report.topology);
    doc["norm"] = norm_name(report.norm);
    doc["verdict"] = report.pass ? "pass" : "fail";

    json jconds = json::array();
    for (const Condition& c : report.conditions) {
        json jc;
        jc["name"] = c.name;
        jc["value"] = c.bound.value;
        if (c.bound.threshold) jc["threshold"] = *c.bound.threshold;
        else jc["threshold"] = nullptr;
        jc["pass"] = c.bound.pass;
        jc["samples"] = c.bound.samples;
        if (c.bound.argmax.x.empty()) {
            jc["argmax"] = nullptr;
        } else {
            json jp = json::object();
            jp["t"] = c.bound.argmax.t;
            for (std::size_t i = 0; i < c.bound.argmax.x.size(); ++i) {
                const std::string key = i < report.state_names.size()
                                            ? report.state_names[i]
                                            : "x" + std::to_string(i + 1);
                jp[key] = c.bound.argmax.x[i];
            }
            jc["argmax"] = std::move(jp);
        }
        jconds.push_back(std::move(jc));
    }
    doc["conditions"] = std::move(jconds);

    json jrates;
    jrates["p"] = report.rates.p ? json(*report.rates.p) : json(nullptr);
    jrates["q"] = report.rates.q ? json(*report.rates.q) : json(nullptr);
    jrates["eta"] = report.rates.eta ? json(*report.rates.eta) : json(nullptr);
    jrates["gamma_product"] =
        report.rates.gamma_product ? json(*report.rates.gamma_product) : json(nullptr);
    doc["rates"] = std::move(jrates);

    json jplan;
    jplan["grid"] = report.plan.grid;
    jplan["samples"] = report.plan.samples;
    jplan["seed"] = report.plan.seed;
    doc["plan"] = std::move(jplan);

    doc["notes"] = report.notes;

    json jprov = json::object();
    for (const auto& [k, v] : provenance) jprov[k] = v;
    doc["provenance"] = std::move(jprov);

    return doc.dump(2) + "\n";
}

}  // namespace incstab
