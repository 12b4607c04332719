#include "incstab/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "incstab/errors.hpp"

namespace incstab {

using nlohmann::json;

Topology parse_topology(const std::string& s) {
    if (s == "single") return Topology::single;
    if (s == "cascade") return Topology::cascade;
    if (s == "feedback") return Topology::feedback;
    throw ConfigError("unknown topology '" + s + "'");
}

std::string topology_name(Topology t) {
    switch (t) {
        case Topology::single: return "single";
        case Topology::cascade: return "cascade";
        case Topology::feedback: return "feedback";
    }
    return "?";
}

std::string mode_name(ModeTag m) { return m == ModeTag::pos ? "pos" : "neg"; }

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

int Interconnection::find_state(const std::string& state) const {
    for (int i = 0; i < dim(); ++i)
        if (state_names[static_cast<std::size_t>(i)] == state) return i;
    throw ConfigError("unknown state '" + state + "'");
}

std::vector<std::string> Interconnection::variable_order() const {
    std::vector<std::string> order = state_names;
    order.emplace_back("t");
    return order;
}

std::vector<double> Interconnection::slots(const StatePoint& p) const {
    if (static_cast<int>(p.x.size()) != dim())
        throw ConfigError("state point dimension mismatch");
    std::vector<double> s = p.x;
    s.push_back(p.t);
    return s;
}

double Interconnection::manifold_value(int sys, const StatePoint& p) const {
    return systems[static_cast<std::size_t>(sys)].manifold.eval(std::span<const double>(slots(p)));
}

std::vector<double> Interconnection::manifold_gradient(int sys, const StatePoint& p) const {
    const SwitchedSystem& s = systems[static_cast<std::size_t>(sys)];
    std::vector<Dual> duals;
    const std::vector<double> vals = slots(p);
    duals.reserve(vals.size());
    for (double v : vals) duals.emplace_back(v);
    std::vector<double> grad(static_cast<std::size_t>(s.dim()), 0.0);
    for (int j = 0; j < s.dim(); ++j) {
        const int slot = s.slots[static_cast<std::size_t>(j)];
        duals[static_cast<std::size_t>(slot)].deriv = 1.0;
        grad[static_cast<std::size_t>(j)] = s.manifold.eval(std::span<const Dual>(duals)).deriv;
        duals[static_cast<std::size_t>(slot)].deriv = 0.0;
    }
    return grad;
}

ModeTag Interconnection::active_mode(int sys, const StatePoint& p,
                                     std::optional<ModeTag> previous) const {
    const double h = manifold_value(sys, p);
    if (h > 0.0) return ModeTag::pos;
    if (h < 0.0) return ModeTag::neg;
    return previous.value_or(ModeTag::pos);
}

std::vector<double> Interconnection::field_eval(int sys, ModeTag mode, const StatePoint& p) const {
    const SwitchedSystem& s = systems[static_cast<std::size_t>(sys)];
    const Mode& m = mode == ModeTag::pos ? s.mode_pos : s.mode_neg;
    const std::vector<double> vals = slots(p);
    std::vector<double> out(m.field.size());
    for (std::size_t i = 0; i < m.field.size(); ++i)
        out[i] = m.field[i].eval(std::span<const double>(vals));
    return out;
}

std::vector<int> Interconnection::other_slots(int sys) const {
    std::vector<int> out;
    for (int k = 0; k < system_count(); ++k) {
        if (k == sys) continue;
        const SwitchedSystem& s = systems[static_cast<std::size_t>(k)];
        out.insert(out.end(), s.slots.begin(), s.slots.end());
    }
    return out;
}

Matrix Interconnection::mode_jacobian(int sys, ModeTag mode, const StatePoint& p, Block wrt) const {
    if (wrt == Block::other && topology == Topology::single)
        throw ConfigError("Block::other is undefined for a single topology");

    const SwitchedSystem& s = systems[static_cast<std::size_t>(sys)];
    const Mode& m = mode == ModeTag::pos ? s.mode_pos : s.mode_neg;
    const std::vector<int> cols = wrt == Block::own ? s.slots : other_slots(sys);

    std::vector<Dual> duals;
    const std::vector<double> vals = slots(p);
    duals.reserve(vals.size());
    for (double v : vals) duals.emplace_back(v);

    Matrix out(s.dim(), static_cast<int>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        duals[static_cast<std::size_t>(cols[j])].deriv = 1.0;
        for (std::size_t i = 0; i < m.field.size(); ++i)
            out(static_cast<int>(i), static_cast<int>(j)) =
                m.field[i].eval(std::span<const Dual>(duals)).deriv;
        duals[static_cast<std::size_t>(cols[j])].deriv = 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config ingestion
// ---------------------------------------------------------------------------

namespace {

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (std::isalpha(static_cast<unsigned char>(s[0])) == 0) return false;
    for (char c : s)
        if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '_') return false;
    return true;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (allowed.count(it.key()) == 0)
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

const json& require_key(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing key '" + key + "' in " + where);
    return *it;
}

Expr parse_expr_or_rethrow(const std::string& src, const std::string& where) {
    try {
        return Expr::parse(src);
    } catch (const ParseError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

void check_reference_scope(const Expr& e, const std::vector<std::string>& allowed,
                           const std::string& where, const char* violation_kind) {
    for (const std::string& v : e.variables()) {
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
            throw ConfigError(std::string(violation_kind) + ": '" + v +
                              "' may not appear in " + where);
    }
}

}  // namespace

Interconnection load_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown_keys(doc, {"name", "topology", "systems", "region"}, "config root");

    Interconnection ic;
    const json& jname = require_key(doc, "name", "config root");
    if (!jname.is_string()) throw ConfigError("'name' must be a string");
    ic.name = jname.get<std::string>();

    const json& jtop = require_key(doc, "topology", "config root");
    if (!jtop.is_string()) throw ConfigError("'topology' must be a string");
    ic.topology = parse_topology(jtop.get<std::string>());

    const json& jsystems = require_key(doc, "systems", "config root");
    if (!jsystems.is_array()) throw ConfigError("'systems' must be an array");
    const std::size_t expected = ic.topology == Topology::single ? 1 : 2;
    if (jsystems.size() != expected)
        throw ConfigError("topology '" + topology_name(ic.topology) + "' requires exactly " +
                          std::to_string(expected) + " system(s), got " +
                          std::to_string(jsystems.size()));

    // First pass: states, so cross-system references can be validated.
    std::set<std::string> seen;
    for (std::size_t si = 0; si < jsystems.size(); ++si) {
        const std::string where = "systems[" + std::to_string(si) + "]";
        const json& jsys = jsystems[si];
        if (!jsys.is_object()) throw ConfigError(where + " must be an object");
        reject_unknown_keys(jsys, {"states", "manifold", "mode_pos", "mode_neg"}, where);
        if (jsys.find("mode_pos") == jsys.end() || jsys.find("mode_neg") == jsys.end())
            throw ConfigError(where + ": exactly two modes required (mode_pos and mode_neg)");

        const json& jstates = require_key(jsys, "states", where);
        if (!jstates.is_array() || jstates.empty())
            throw ConfigError(where + ": 'states' must be a non-empty array");

        SwitchedSystem sys;
        for (const json& js : jstates) {
            if (!js.is_string()) throw ConfigError(where + ": state names must be strings");
            const std::string s = js.get<std::string>();
            if (!valid_identifier(s))
                throw ConfigError(where + ": invalid state identifier '" + s + "'");
            if (s == "t") throw ConfigError(where + ": 't' is reserved for time");
            if (!seen.insert(s).second)
                throw ConfigError("state '" + s + "' declared more than once");
            sys.states.push_back(s);
            sys.slots.push_back(static_cast<int>(ic.state_names.size()));
            ic.state_names.push_back(s);
        }
        ic.systems.push_back(std::move(sys));
    }

    // Second pass: expressions, scope rules, binding.
    const std::vector<std::string> order = ic.variable_order();
    for (std::size_t si = 0; si < jsystems.size(); ++si) {
        const std::string where = "systems[" + std::to_string(si) + "]";
        const json& jsys = jsystems[si];
        SwitchedSystem& sys = ic.systems[si];

        const json& jman = require_key(jsys, "manifold", where);
        if (!jman.is_string()) throw ConfigError(where + ": 'manifold' must be a string");
        sys.manifold = parse_expr_or_rethrow(jman.get<std::string>(), where + ".manifold");
        // H may depend only on the owning system's states; in particular no t.
        check_reference_scope(sys.manifold, sys.states, where + ".manifold",
                              "manifold scope violation");
        sys.manifold.bind(order);

        // Scope permitted for mode fields. System I of a cascade must not see
        // its partner; everything else may reference both systems and t.
        std::vector<std::string> allowed;
        if (ic.topology == Topology::cascade && si == 0) {
            allowed = sys.states;
        } else {
            allowed = ic.state_names;
        }
        allowed.emplace_back("t");

        for (const char* key : {"mode_pos", "mode_neg"}) {
            const json& jmode = require_key(jsys, key, where);
            if (!jmode.is_array())
                throw ConfigError(where + ": '" + key + "' must be an array of expressions");
            if (jmode.size() != sys.states.size())
                throw ConfigError(where + ": '" + key + "' must have one expression per state (" +
                                  std::to_string(sys.states.size()) + ")");
            Mode mode;
            for (std::size_t fi = 0; fi < jmode.size(); ++fi) {
                if (!jmode[fi].is_string())
                    throw ConfigError(where + ": mode expressions must be strings");
                const std::string ctx = where + "." + key + "[" + std::to_string(fi) + "]";
                Expr e = parse_expr_or_rethrow(jmode[fi].get<std::string>(), ctx);
                check_reference_scope(e, allowed, ctx, "topology violation");
                e.bind(order);
                mode.field.push_back(std::move(e));
            }
            (std::string(key) == "mode_pos" ? sys.mode_pos : sys.mode_neg) = std::move(mode);
        }
    }

    // Region box: every state present, finite, non-degenerate.
    const json& jregion = require_key(doc, "region", "config root");
    if (!jregion.is_object()) throw ConfigError("'region' must be an object");
    for (auto it = jregion.begin(); it != jregion.end(); ++it) {
        if (std::find(ic.state_names.begin(), ic.state_names.end(), it.key()) ==
            ic.state_names.end())
            throw ConfigError("region mentions unknown state '" + it.key() + "'");
    }
    ic.region.resize(ic.state_names.size());
    for (std::size_t i = 0; i < ic.state_names.size(); ++i) {
        const std::string& s = ic.state_names[i];
        auto it = jregion.find(s);
        if (it == jregion.end()) throw ConfigError("region must bound state '" + s + "'");
        const json& jiv = *it;
        if (!jiv.is_array() || jiv.size() != 2 || !jiv[0].is_number() || !jiv[1].is_number())
            throw ConfigError("region['" + s + "'] must be [lo, hi]");
        const double lo = jiv[0].get<double>();
        const double hi = jiv[1].get<double>();
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw ConfigError("region must be a finite box ('" + s + "' is unbounded)");
        if (!(lo < hi))
            throw ConfigError("region['" + s + "'] must satisfy lo < hi");
        ic.region[i] = Interval{lo, hi};
    }

    return ic;
}

std::string serialize(const Interconnection& ic) {
    json doc;
    doc["name"] = ic.name;
    doc["topology"] = topology_name(ic.topology);
    json jsystems = json::array();
    for (const SwitchedSystem& sys : ic.systems) {
        json jsys;
        jsys["states"] = sys.states;
        jsys["manifold"] = sys.manifold.str();
        json pos = json::array();
        for (const Expr& e : sys.mode_pos.field) pos.push_back(e.str());
        json neg = json::array();
        for (const Expr& e : sys.mode_neg.field) neg.push_back(e.str());
        jsys["mode_pos"] = std::move(pos);
        jsys["mode_neg"] = std::move(neg);
        jsystems.push_back(std::move(jsys));
    }
    doc["systems"] = std::move(jsystems);
    json jregion;
    for (std::size_t i = 0; i < ic.state_names.size(); ++i)
        jregion[ic.state_names[i]] = {ic.region[i].lo, ic.region[i].hi};
    doc["region"] = std::move(jregion);
    return doc.dump(2) + "\n";
}

}  // namespace incstab
