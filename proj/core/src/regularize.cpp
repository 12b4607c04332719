#include "incstab/regularize.hpp"

#include <cmath>

#include "incstab/errors.hpp"

namespace incstab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_eps(double eps) {
    if (!(eps > 0.0)) throw ConfigError("regularization requires eps > 0");
}

}  // namespace

TransitionKind parse_transition(const std::string& s) {
    if (s == "sine") return TransitionKind::sine;
    if (s == "linear") return TransitionKind::linear;
    throw ConfigError("unknown transition kind '" + s + "' (expected sine or linear)");
}

std::string transition_name(TransitionKind k) {
    return k == TransitionKind::sine ? "sine" : "linear";
}

double zeta(double r, TransitionKind kind) {
    if (r >= 1.0) return 1.0;
    if (r <= -1.0) return -1.0;
    return kind == TransitionKind::sine ? std::sin(kPi * r / 2.0) : r;
}

Dual zeta(const Dual& r, TransitionKind kind) {
    if (r.value >= 1.0) return {1.0, 0.0};
    if (r.value <= -1.0) return {-1.0, 0.0};
    if (kind == TransitionKind::sine)
        return {std::sin(kPi * r.value / 2.0),
                (kPi / 2.0) * std::cos(kPi * r.value / 2.0) * r.deriv};
    return {r.value, r.deriv};
}

double zeta_slope(double r, TransitionKind kind, bool* one_sided) {
    if (one_sided != nullptr) *one_sided = false;
    if (kind == TransitionKind::sine) {
        if (r >= 1.0 || r <= -1.0) return 0.0;
        return (kPi / 2.0) * std::cos(kPi * r / 2.0);
    }
    // Linear kind: slope 1 inside, 0 outside, kink exactly at |r| = 1.
    if (r == 1.0 || r == -1.0) {
        if (one_sided != nullptr) *one_sided = true;
        return 1.0;
    }
    if (r > 1.0 || r < -1.0) return 0.0;
    return 1.0;
}

Weights psi_gamma(double manifold_value, double eps, TransitionKind kind) {
    require_eps(eps);
    Weights w;
    w.psi = 0.5 * (1.0 + zeta(manifold_value / eps, kind));
    w.gamma = 1.0 - w.psi;
    return w;
}

Weights psi_gamma(const Interconnection& ic, int sys, const StatePoint& p, double eps,
                  TransitionKind kind) {
    return psi_gamma(ic.manifold_value(sys, p), eps, kind);
}

std::vector<double> blended_field(const Interconnection& ic, int sys, const StatePoint& p,
                                  double eps, TransitionKind kind) {
    const Weights w = psi_gamma(ic, sys, p, eps, kind);
    // Outside the layer the weights are exactly {1, 0} or {0, 1}; multiply-add
    // with the complement weight zero reproduces the pure mode bitwise.
    const std::vector<double> fp = ic.field_eval(sys, ModeTag::pos, p);
    const std::vector<double> fn = ic.field_eval(sys, ModeTag::neg, p);
    std::vector<double> out(fp.size());
    if (w.psi == 1.0) return fp;
    if (w.gamma == 1.0) return fn;
    for (std::size_t i = 0; i < fp.size(); ++i) out[i] = w.psi * fp[i] + w.gamma * fn[i];
    return out;
}

ChiValue chi(const Interconnection& ic, int sys, const StatePoint& p, double eps,
             TransitionKind kind) {
    require_eps(eps);
    const double r = ic.manifold_value(sys, p) / eps;
    ChiValue out;
    out.value = zeta_slope(r, kind, &out.one_sided) / (2.0 * eps);
    return out;
}

// ---------------------------------------------------------------------------
// Whole-interconnection regularized field, double and dual flavors.
// ---------------------------------------------------------------------------

namespace {

template <class T>
std::vector<T> blended_all_impl(const Interconnection& ic, std::span<const T> slot_values,
                                double eps, TransitionKind kind) {
    std::vector<T> out(static_cast<std::size_t>(ic.dim()));
    for (int si = 0; si < ic.system_count(); ++si) {
        const SwitchedSystem& sys = ic.systems[static_cast<std::size_t>(si)];
        const T h = sys.manifold.eval(slot_values);
        T r = h;
        r /= T(eps);
        const T z = zeta(r, kind);
        T psi = (T(1.0) + z) * T(0.5);
        T gamma = T(1.0) - psi;
        for (int i = 0; i < sys.dim(); ++i) {
            const T fp = sys.mode_pos.field[static_cast<std::size_t>(i)].eval(slot_values);
            const T fn = sys.mode_neg.field[static_cast<std::size_t>(i)].eval(slot_values);
            out[static_cast<std::size_t>(sys.slots[static_cast<std::size_t>(i)])] =
                psi * fp + gamma * fn;
        }
    }
    return out;
}

// double needs the same generic ops as Dual for the template above
template <>
std::vector<double> blended_all_impl<double>(const Interconnection& ic,
                                             std::span<const double> slot_values, double eps,
                                             TransitionKind kind) {
    std::vector<double> out(static_cast<std::size_t>(ic.dim()));
    for (int si = 0; si < ic.system_count(); ++si) {
        const SwitchedSystem& sys = ic.systems[static_cast<std::size_t>(si)];
        const double h = sys.manifold.eval(slot_values);
        const double psi = 0.5 * (1.0 + zeta(h / eps, kind));
        const double gamma = 1.0 - psi;
        for (int i = 0; i < sys.dim(); ++i) {
            const double fp = sys.mode_pos.field[static_cast<std::size_t>(i)].eval(slot_values);
            const double fn = sys.mode_neg.field[static_cast<std::size_t>(i)].eval(slot_values);
            double v;
            if (psi == 1.0) v = fp;
            else if (gamma == 1.0) v = fn;
            else v = psi * fp + gamma * fn;
            out[static_cast<std::size_t>(sys.slots[static_cast<std::size_t>(i)])] = v;
        }
    }
    return out;
}

}  // namespace

std::vector<double> blended_field_all(const Interconnection& ic, const StatePoint& p, double eps,
                                      TransitionKind kind) {
    require_eps(eps);
    const std::vector<double> vals = ic.slots(p);
    return blended_all_impl<double>(ic, vals, eps, kind);
}

std::vector<double> blended_jvp(const Interconnection& ic, const StatePoint& p,
                                std::span<const double> direction, double eps,
                                TransitionKind kind) {
    require_eps(eps);
    if (static_cast<int>(direction.size()) != ic.dim())
        throw ConfigError("jvp direction dimension mismatch");
    const std::vector<double> vals = ic.slots(p);
    std::vector<Dual> duals(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) duals[i] = Dual(vals[i]);
    for (int i = 0; i < ic.dim(); ++i)
        duals[static_cast<std::size_t>(i)].deriv = direction[static_cast<std::size_t>(i)];
    const std::vector<Dual> f = blended_all_impl<Dual>(ic, std::span<const Dual>(duals), eps, kind);
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].deriv;
    return out;
}

Matrix blended_jacobian(const Interconnection& ic, const StatePoint& p, double eps,
                        TransitionKind kind) {
    require_eps(eps);
    const int n = ic.dim();
    Matrix out(n, n);
    std::vector<double> dir(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        dir[static_cast<std::size_t>(j)] = 1.0;
        const std::vector<double> col = blended_jvp(ic, p, dir, eps, kind);
        for (int i = 0; i < n; ++i) out(i, j) = col[static_cast<std::size_t>(i)];
        dir[static_cast<std::size_t>(j)] = 0.0;
    }
    return out;
}

Matrix blended_block_jacobian(const Interconnection& ic, int sys, const StatePoint& p, double eps,
                              TransitionKind kind, Block wrt) {
    const Weights w = psi_gamma(ic, sys, p, eps, kind);
    Matrix jp = ic.mode_jacobian(sys, ModeTag::pos, p, wrt);
    Matrix jn = ic.mode_jacobian(sys, ModeTag::neg, p, wrt);
    jp *= w.psi;
    jn *= w.gamma;
    return jp + jn;
}

}  // namespace incstab
