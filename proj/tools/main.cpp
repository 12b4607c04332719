// Command-line front end: certification checks, event-driven/regularized
// simulation, variational runs, trajectory-pair studies, regularization
// error studies, decay-rate fits, and self-contained example reproduction.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "embedded_configs.hpp"
#include "incstab/certify.hpp"
#include "incstab/errors.hpp"
#include "incstab/io.hpp"
#include "incstab/model.hpp"
#include "incstab/rates.hpp"
#include "incstab/regularize.hpp"
#include "incstab/sim.hpp"

namespace {

using namespace incstab;
using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitVerdictFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("file not found: '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Interconnection load_config_file(const std::string& path) { return load_config(read_file(path)); }

std::map<std::string, double> parse_assignments(const std::string& text, const char* flag) {
    std::map<std::string, double> out;
    if (text.empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError(std::string(flag) + " expects name=value pairs, got '" + item + "'");
        const std::string name = item.substr(0, eq);
        try {
            out[name] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError(std::string(flag) + ": bad value in '" + item + "'");
        }
    }
    return out;
}

// Unmentioned states start at 0.
std::vector<double> initial_state(const Interconnection& ic, const std::string& spec,
                                  const char* flag) {
    std::vector<double> x(static_cast<std::size_t>(ic.dim()), 0.0);
    for (const auto& [name, value] : parse_assignments(spec, flag))
        x[static_cast<std::size_t>(ic.find_state(name))] = value;
    return x;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    atomic_write_file(out_path, content);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct CertFlags {
    std::string norm = "2";
    int grid = 64;
    int samples = 1000;
    std::uint64_t seed = 42;
    double eps = 1e-3;
    std::string zeta = "sine";
    bool strict = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--norm", norm, "Measure/operator norm: 1, 2 or inf")
            ->check(CLI::IsMember({"1", "2", "inf"}))
            ->capture_default_str();
        cmd->add_option("--grid", grid, "Grid resolution per dimension")->capture_default_str();
        cmd->add_option("--samples", samples, "Extra uniform random samples")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "RNG seed for the random samples")->capture_default_str();
        cmd->add_option("--eps", eps, "Boundary-layer half-width")->capture_default_str();
        cmd->add_option("--zeta", zeta, "Transition kind: sine or linear")
            ->check(CLI::IsMember({"sine", "linear"}))
            ->capture_default_str();
        cmd->add_flag("--strict", strict, "Evaluate both modes over the whole box");
    }

    [[nodiscard]] CertifyOptions options() const {
        CertifyOptions o;
        o.norm = parse_norm(norm);
        o.plan.grid = grid;
        o.plan.samples = samples;
        o.plan.seed = seed;
        o.eps = eps;
        o.zeta = parse_transition(zeta);
        o.strict = strict;
        return o;
    }

    void provenance(std::map<std::string, std::string>& p) const {
        p["norm"] = norm;
        p["grid"] = std::to_string(grid);
        p["samples"] = std::to_string(samples);
        p["seed"] = std::to_string(seed);
        p["eps"] = format_double(eps);
        p["zeta"] = zeta;
        p["strict"] = strict ? "true" : "false";
    }
};

struct SimFlags {
    double eps = 1e-3;
    std::string zeta = "sine";
    double dt = 1e-3;
    double t0 = 0.0;
    double tf = 5.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--eps", eps, "Boundary-layer half-width")->capture_default_str();
        cmd->add_option("--zeta", zeta, "Transition kind: sine or linear")
            ->check(CLI::IsMember({"sine", "linear"}))
            ->capture_default_str();
        cmd->add_option("--dt", dt, "Fixed integration step")->capture_default_str();
        cmd->add_option("--t0", t0, "Start time")->capture_default_str();
        cmd->add_option("--tf", tf, "End time")->capture_default_str();
    }

    void fill(SimConfig& cfg) const {
        cfg.eps = eps;
        cfg.zeta = parse_transition(zeta);
        cfg.dt = dt;
        cfg.t0 = t0;
        cfg.tf = tf;
    }

    void provenance(std::map<std::string, std::string>& p) const {
        p["eps"] = format_double(eps);
        p["zeta"] = zeta;
        p["dt"] = format_double(dt);
        p["t0"] = format_double(t0);
        p["tf"] = format_double(tf);
    }
};

// ---------------------------------------------------------------------------
// Subcommand runners
// ---------------------------------------------------------------------------

int run_check(const std::string& config_path, const CertFlags& flags, const std::string& out) {
    const Interconnection ic = load_config_file(config_path);
    const CertReport report = certify(ic, flags.options());
    std::map<std::string, std::string> prov;
    flags.provenance(prov);
    prov["config"] = config_path;
    emit(out, report_json(report, prov));
    return report.pass ? kExitPass : kExitVerdictFail;
}

int run_simulate(const std::string& config_path, const std::string& method,
                 const std::string& ic_spec, const SimFlags& flags, const std::string& out) {
    const Interconnection ic = load_config_file(config_path);
    SimConfig cfg;
    flags.fill(cfg);
    cfg.method = parse_method(method);
    cfg.x0 = initial_state(ic, ic_spec, "--ic");
    const Trace trace = cfg.method == SimMethod::event ? integrate_event(ic, cfg)
                                                       : integrate_regularized(ic, cfg);
    emit(out, trace_csv(trace));
    return kExitPass;
}

int run_variational(const std::string& config_path, const std::string& ic_spec,
                    const std::string& dic_spec, const SimFlags& flags, const std::string& out) {
    const Interconnection ic = load_config_file(config_path);
    SimConfig cfg;
    flags.fill(cfg);
    cfg.method = SimMethod::regularized;
    cfg.x0 = initial_state(ic, ic_spec, "--ic");
    cfg.dx0 = initial_state(ic, dic_spec, "--dic");
    const Trace trace = integrate_variational(ic, cfg);
    emit(out, trace_csv(trace));
    return kExitPass;
}

int run_pair(const std::string& config_path, const std::string& method, const std::string& ic_spec,
             const std::string& ic2_spec, const std::string& norm, const SimFlags& flags,
             const std::string& out) {
    const Interconnection ic = load_config_file(config_path);
    SimConfig cfg;
    flags.fill(cfg);
    cfg.method = parse_method(method);
    const std::vector<double> a = initial_state(ic, ic_spec, "--ic");
    const std::vector<double> b = initial_state(ic, ic2_spec, "--ic2");
    cfg.x0 = a;
    const DistanceSeries series = pair_trace(ic, cfg, a, b, parse_norm(norm));
    emit(out, distance_csv(series));
    return kExitPass;
}

int run_epsstudy(const std::string& config_path, const std::string& ic_spec, int levels,
                 const std::string& norm, const SimFlags& flags, const std::string& out) {
    const Interconnection ic = load_config_file(config_path);
    SimConfig cfg;
    flags.fill(cfg);
    cfg.method = SimMethod::event;
    cfg.x0 = initial_state(ic, ic_spec, "--ic");
    const std::vector<double> schedule = geometric_eps_schedule(flags.eps, levels);
    const EpsStudy study = eps_error_study(ic, cfg, schedule, parse_norm(norm));

    json doc;
    doc["eps_levels"] = study.eps_levels;
    doc["max_errors"] = study.max_errors;
    doc["ratios"] = study.ratios;
    std::map<std::string, std::string> prov;
    flags.provenance(prov);
    prov["config"] = config_path;
    prov["levels"] = std::to_string(levels);
    prov["norm"] = norm;
    prov["ic"] = ic_spec;
    json jp = json::object();
    for (const auto& [k, v] : prov) jp[k] = v;
    doc["provenance"] = std::move(jp);
    emit(out, doc.dump(2) + "\n");
    return kExitPass;
}

struct RateOutcome {
    RateFit fit;
    std::optional<EnvelopeResult> envelope;
    bool pass = true;
};

json rate_json(const RateOutcome& r, double envelope_rate, double slack,
               const std::map<std::string, std::string>& prov) {
    json doc;
    doc["fit"] = {{"K", r.fit.K},
                  {"c", r.fit.c},
                  {"residual", r.fit.residual},
                  {"window", {r.fit.t_lo, r.fit.t_hi}},
                  {"points", r.fit.points}};
    if (r.envelope) {
        doc["envelope"] = {{"pass", r.envelope->pass},
                           {"worst_ratio", r.envelope->worst_ratio},
                           {"worst_t", r.envelope->worst_t},
                           {"rate", envelope_rate},
                           {"slack", slack}};
    } else {
        doc["envelope"] = nullptr;
    }
    doc["pass"] = r.pass;
    json jp = json::object();
    for (const auto& [k, v] : prov) jp[k] = v;
    doc["provenance"] = std::move(jp);
    return doc;
}

// Fit plus optional envelope verification of one positive series. The
// envelope is anchored at the window start with unit prefactor and rate
// (certified - 0.05).
RateOutcome analyze_series(const std::vector<double>& times, const std::vector<double>& values,
                           std::optional<Window> window, std::optional<double> envelope_rate,
                           double slack) {
    RateOutcome out;
    const Window w = window ? *window : default_window(times);
    out.fit = fit_exponential(times, values, w.lo, w.hi);
    if (envelope_rate) {
        std::vector<double> wt;
        std::vector<double> wy;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] < w.lo || times[i] > w.hi) continue;
            wt.push_back(times[i]);
            wy.push_back(values[i]);
        }
        out.envelope = envelope_check(wt, wy, 1.0, *envelope_rate - 0.05, slack);
        out.pass = out.envelope->pass;
    }
    return out;
}

int run_rate(const std::string& csv_path, const std::string& window_spec, const std::string& norm,
             std::optional<double> envelope_rate, double slack, const std::string& out) {
    const CsvTable table = read_csv(csv_path);
    const int tcol = table.column_index("t");
    if (tcol < 0) throw ConfigError("'" + csv_path + "' has no 't' column");

    // Prefer the variational block, then an explicit distance column, then
    // the state columns.
    std::vector<int> value_cols;
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        if (table.columns[i].rfind("d_", 0) == 0) value_cols.push_back(static_cast<int>(i));
    if (value_cols.empty()) {
        const int dist = table.column_index("dist");
        if (dist >= 0) value_cols.push_back(dist);
    }
    if (value_cols.empty()) {
        for (std::size_t i = 0; i < table.columns.size(); ++i)
            if (static_cast<int>(i) != tcol) value_cols.push_back(static_cast<int>(i));
    }
    if (value_cols.empty()) throw ConfigError("'" + csv_path + "' has no value columns");

    const MeasureNorm p = parse_norm(norm);
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> row(value_cols.size());
    for (const auto& r : table.rows) {
        times.push_back(r[static_cast<std::size_t>(tcol)]);
        for (std::size_t i = 0; i < value_cols.size(); ++i)
            row[i] = r[static_cast<std::size_t>(value_cols[i])];
        values.push_back(vec_norm(row, p));
    }

    std::optional<Window> window;
    if (!window_spec.empty()) {
        const auto comma = window_spec.find(',');
        if (comma == std::string::npos) throw ConfigError("--window expects 'a,b'");
        try {
            window = Window{std::stod(window_spec.substr(0, comma)),
                            std::stod(window_spec.substr(comma + 1))};
        } catch (const std::exception&) {
            throw ConfigError("--window expects numeric 'a,b'");
        }
    }

    const RateOutcome outcome = analyze_series(times, values, window, envelope_rate, slack);
    std::map<std::string, std::string> prov;
    prov["input"] = csv_path;
    prov["norm"] = norm;
    prov["window"] = window_spec.empty() ? "default" : window_spec;
    prov["slack"] = format_double(slack);
    emit(out, rate_json(outcome, envelope_rate.value_or(0.0), slack, prov).dump(2) + "\n");
    return outcome.pass ? kExitPass : kExitVerdictFail;
}

// ---------------------------------------------------------------------------
// reproduce: certify -> variational run -> rate fit -> envelope check, all
// from an embedded configuration.
// ---------------------------------------------------------------------------

int run_reproduce(const std::string& which, const CertFlags& cert_flags, SimFlags sim_flags,
                  const std::string& ic_spec, const std::string& dic_spec,
                  const std::string& out_dir) {
    const char* config_text = nullptr;
    if (which == "case1") config_text = embedded::kCase1;
    else if (which == "case2") config_text = embedded::kCase2;
    else if (which == "case1_sys1") config_text = embedded::kCase1Sys1;
    else throw ConfigError("unknown case '" + which + "' (expected case1 or case2)");

    const Interconnection ic = load_config(config_text);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string base = (fs::path(out_dir) / which).string();

    std::map<std::string, std::string> prov;
    cert_flags.provenance(prov);
    sim_flags.provenance(prov);
    prov["case"] = which;
    prov["ic"] = ic_spec;
    prov["dic"] = dic_spec;

    // Stage 1: certification.
    const CertReport report = certify(ic, cert_flags.options());
    atomic_write_file(base + "_report.json", report_json(report, prov));

    // Stage 2: variational run on the regularized field.
    SimConfig cfg;
    sim_flags.fill(cfg);
    cfg.method = SimMethod::regularized;
    cfg.x0 = initial_state(ic, ic_spec, "--ic");
    cfg.dx0 = initial_state(ic, dic_spec, "--dic");
    const Trace trace = integrate_variational(ic, cfg);
    atomic_write_file(base + "_var.csv", trace_csv(trace));

    // Stage 3: decay-rate fit of the displacement norm plus the certified
    // envelope, on the default window.
    const MeasureNorm p = parse_norm(cert_flags.norm);
    std::vector<double> dn(trace.times.size());
    for (std::size_t k = 0; k < trace.times.size(); ++k)
        dn[k] = vec_norm(trace.dstates[k], p);

    bool stage_pass = report.pass;
    json jr;
    if (report.rates.eta) {
        const double rate = *report.rates.eta;
        const RateOutcome outcome =
            analyze_series(trace.times, dn, std::nullopt, rate, /*slack=*/0.05);

        const Window w = default_window(trace.times);
        bool monotone = true;
        bool positive = true;
        double prev = 0.0;
        bool started = false;
        for (std::size_t k = 0; k < trace.times.size(); ++k) {
            if (trace.times[k] < w.lo) continue;
            positive &= dn[k] > 0.0;
            if (started) monotone &= dn[k] < prev;
            prev = dn[k];
            started = true;
        }

        const bool c_ok = outcome.fit.c >= 0.95 * rate;
        stage_pass = stage_pass && outcome.pass && c_ok && monotone && positive;
        jr = rate_json(outcome, rate, 0.05, prov);
        jr["certified_rate"] = rate;
        jr["c_ok"] = c_ok;
        jr["decreasing_after_window_start"] = monotone;
        jr["strictly_positive"] = positive;
        jr["pass"] = outcome.pass && c_ok && monotone && positive;
    } else {
        stage_pass = false;
        jr["error"] = "certification did not produce an overall rate";
        jr["pass"] = false;
    }
    atomic_write_file(base + "_rate.json", jr.dump(2) + "\n");

    return stage_pass ? kExitPass : kExitVerdictFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certification and simulation toolkit for bimodal switched systems and their "
                 "interconnections"};
    app.require_subcommand(1);

    // check
    auto* check = app.add_subcommand("check", "Certify the stability conditions of a config");
    std::string check_config;
    std::string check_out;
    CertFlags check_flags;
    check->add_option("config", check_config, "Configuration JSON file")->required();
    check_flags.attach(check);
    check->add_option("--out", check_out, "Write the report here (default stdout)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Integrate a switched system");
    std::string sim_config;
    std::string sim_method = "event";
    std::string sim_ic;
    std::string sim_out;
    SimFlags sim_flags;
    simulate->add_option("config", sim_config, "Configuration JSON file")->required();
    simulate->add_option("--method", sim_method, "event or regularized")
        ->check(CLI::IsMember({"event", "regularized"}))
        ->capture_default_str();
    simulate->add_option("--ic", sim_ic, "Initial state, name=value[,name=value...]");
    sim_flags.attach(simulate);
    simulate->add_option("--out", sim_out, "Write the trace CSV here (default stdout)");

    // variational
    auto* var = app.add_subcommand("variational",
                                   "Integrate the regularized field plus its variational block");
    std::string var_config;
    std::string var_ic;
    std::string var_dic;
    std::string var_out;
    SimFlags var_flags;
    var->add_option("config", var_config, "Configuration JSON file")->required();
    var->add_option("--ic", var_ic, "Initial state");
    var->add_option("--dic", var_dic, "Initial displacement")->required();
    var_flags.attach(var);
    var->add_option("--out", var_out, "Write the trace CSV here (default stdout)");

    // pair
    auto* pair = app.add_subcommand("pair", "Distance between two runs of the same system");
    std::string pair_config;
    std::string pair_method = "regularized";
    std::string pair_ic;
    std::string pair_ic2;
    std::string pair_norm = "2";
    std::string pair_out;
    SimFlags pair_flags;
    pair->add_option("config", pair_config, "Configuration JSON file")->required();
    pair->add_option("--method", pair_method, "event or regularized")
        ->check(CLI::IsMember({"event", "regularized"}))
        ->capture_default_str();
    pair->add_option("--ic", pair_ic, "First initial state")->required();
    pair->add_option("--ic2", pair_ic2, "Second initial state")->required();
    pair->add_option("--norm", pair_norm, "Distance norm: 1, 2 or inf")
        ->check(CLI::IsMember({"1", "2", "inf"}))
        ->capture_default_str();
    pair_flags.attach(pair);
    pair->add_option("--out", pair_out, "Write the distance CSV here (default stdout)");

    // epsstudy
    auto* eps = app.add_subcommand("epsstudy",
                                   "Max error between event-driven and regularized runs across "
                                   "a geometric eps schedule");
    std::string eps_config;
    std::string eps_ic;
    std::string eps_norm = "2";
    std::string eps_out;
    int eps_levels = 4;
    SimFlags eps_flags;
    eps->add_option("config", eps_config, "Configuration JSON file")->required();
    eps->add_option("--ic", eps_ic, "Initial state");
    eps->add_option("--levels", eps_levels, "Number of eps levels (ratio 1/2)")
        ->capture_default_str();
    eps->add_option("--norm", eps_norm, "Error norm: 1, 2 or inf")
        ->check(CLI::IsMember({"1", "2", "inf"}))
        ->capture_default_str();
    eps_flags.attach(eps);
    eps->add_option("--out", eps_out, "Write the study JSON here (default stdout)");

    // rate
    auto* rate = app.add_subcommand("rate", "Fit K e^{-ct} to a trace CSV");
    std::string rate_csv;
    std::string rate_window;
    std::string rate_norm = "2";
    std::string rate_out;
    double rate_slack = 0.05;
    std::optional<double> rate_envelope;
    double rate_envelope_value = 0.0;
    rate->add_option("csv", rate_csv, "Trace or distance CSV")->required();
    rate->add_option("--window", rate_window, "Fit window 'a,b' (default: skip leading 10%)");
    rate->add_option("--norm", rate_norm, "Vector norm for multi-column series")
        ->check(CLI::IsMember({"1", "2", "inf"}))
        ->capture_default_str();
    auto* env_opt = rate->add_option("--envelope-rate", rate_envelope_value,
                                     "Also verify the e^{-(rate-0.05)t} envelope");
    rate->add_option("--slack", rate_slack, "Envelope slack")->capture_default_str();
    rate->add_option("--out", rate_out, "Write the fit JSON here (default stdout)");

    // reproduce
    auto* rep = app.add_subcommand("reproduce",
                                   "Run certify -> variational -> rate on a bundled example");
    std::string rep_case;
    std::string rep_out = ".";
    std::string rep_ic = "x1=1,x2=1";
    std::string rep_dic = "x1=1,x2=1";
    CertFlags rep_cert;
    SimFlags rep_sim;
    rep_sim.tf = 3.0;  // bundled scenario runs to t = 3
    rep->add_option("case", rep_case, "case1 or case2")->required();
    rep_cert.attach(rep);
    rep->add_option("--dt", rep_sim.dt, "Fixed integration step")->capture_default_str();
    rep->add_option("--t0", rep_sim.t0, "Start time")->capture_default_str();
    rep->add_option("--tf", rep_sim.tf, "End time")->capture_default_str();
    rep->add_option("--ic", rep_ic, "Initial state")->capture_default_str();
    rep->add_option("--dic", rep_dic, "Initial displacement")->capture_default_str();
    rep->add_option("--out", rep_out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*check) return run_check(check_config, check_flags, check_out);
        if (*simulate) return run_simulate(sim_config, sim_method, sim_ic, sim_flags, sim_out);
        if (*var) return run_variational(var_config, var_ic, var_dic, var_flags, var_out);
        if (*pair)
            return run_pair(pair_config, pair_method, pair_ic, pair_ic2, pair_norm, pair_flags,
                            pair_out);
        if (*eps) return run_epsstudy(eps_config, eps_ic, eps_levels, eps_norm, eps_flags, eps_out);
        if (*rate) {
            if (env_opt->count() > 0) rate_envelope = rate_envelope_value;
            return run_rate(rate_csv, rate_window, rate_norm, rate_envelope, rate_slack, rate_out);
        }
        if (*rep) {
            // reproduce shares the sine/eps defaults with certification.
            rep_sim.eps = rep_cert.eps;
            rep_sim.zeta = rep_cert.zeta;
            return run_reproduce(rep_case, rep_cert, rep_sim, rep_ic, rep_dic, rep_out);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const EvalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << " (last good t = " << e.last_good_time() << ")\n";
        return kExitNumeric;
    }
    return kExitUsage;
}
