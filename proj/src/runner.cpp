#include "capaf/runner.hpp"

#include "capaf/capfun.hpp"
#include "capaf/error.hpp"
#include "capaf/grid.hpp"
#include "capaf/mixedvol.hpp"
#include "capaf/reconstruct.hpp"
#include "capaf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

namespace capaf {

namespace {

using nlohmann::json;

std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (const char ch : s) {
        out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    }
    return out + "\"";
}

double rel_diff(double a, double b)
{
    const double m = std::max(std::abs(a), std::abs(b));
    return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

// slope of log(err) against log(h) by least squares
double loglog_slope(const std::vector<double>& h, const std::vector<double>& err)
{
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]);
        const double y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ScalarField horizontal(const CapGrid& g, int axis)
{
    return horizontal_linear(g, axis == 1 ? 1.0 : 0.0, axis == 2 ? 1.0 : 0.0).values;
}

json envelope(const RunConfig& c, const ToleranceProfile& tol, const std::string& identity)
{
    json j;
    j["command"] = c.command;
    j["config"] = to_json(c);
    j["tolerances"] = to_json(tol);
    j["identity"] = identity;
    return j;
}

CapGrid config_grid(const RunConfig& c) { return build_grid(c.theta, c.n_rho, c.n_phi, c.radial_order); }

RunResult run_gen(const RunConfig& c, const ToleranceProfile& tol)
{
    const CapGrid g = config_grid(c);
    RunResult r{"gen", envelope(c, tol, "A[h] = hess h + h sigma > 0 on C_theta and grad_mu h = cot(theta) h on the boundary"),
                "file,seed,min_eig,robin_max,final_amplitude\n", {}, true};
    const auto bodies = parallel_map<CapillaryBody>(c.count, [&](int i) {
        return random_body(g,
                           {.seed = c.seed + static_cast<std::uint64_t>(i), .base_radius = c.base_radius,
                            .amplitude = c.amplitude},
                           tol);
    });
    json list = json::array();
    for (int i = 0; i < c.count; ++i) {
        const CapillaryBody& b = bodies[static_cast<std::size_t>(i)];
        const std::string file = "body_" + std::to_string(c.seed + static_cast<std::uint64_t>(i)) + ".json";
        const double amp = b.provenance.params.value("final_amplitude", 0.0);
        const std::uint64_t seed = b.provenance.seed.value_or(0);
        list.push_back({{"file", file},
                        {"seed", seed},
                        {"min_eig", b.min_eig},
                        {"robin_max", b.support.robin_max},
                        {"final_amplitude", amp}});
        r.csv += file + "," + std::to_string(seed) + "," + fmt(b.min_eig) + "," + fmt(b.support.robin_max) +
                 "," + fmt(amp) + "\n";
        r.artifacts.push_back({file, body_to_json(b).dump(2) + "\n"});
    }
    r.report["bodies"] = list;
    r.report["passed"] = true;
    return r;
}

RunResult run_quermass(const RunConfig& c, const ToleranceProfile& tol)
{
    constexpr double kAt128 = 1e-6;
    RunResult r{"quermass",
                envelope(c, tol,
                         "V_j = V(h x (3-j), l x j); V_3 = b_theta = pi (1-cos theta)^2 (2+cos theta) / 3; "
                         "V_j(r C_theta) = r^(3-j) b_theta"),
                "file,k,value,reference,rel_err\n", {}, true};
    json list = json::array();
    for (const std::string& path : c.inputs) {
        const CapillaryBody body = load_body(path, tol);
        const CapGrid& g = body.grid();
        const double limit = grid_scaled(kAt128, g.n_rho(), 4);
        const QuermassReport q = quermass_report(body, c.radius);
        json entry = to_json(q);
        const std::string file = std::filesystem::path(path).filename().string();
        entry["file"] = file;
        const double v3_err = rel_diff(q.values[3], q.b_theta);
        bool ok = v3_err <= limit;
        if (c.radius > 0.0) {
            for (int k = 0; k < 4; ++k) {
                ok = ok && rel_diff(q.values[static_cast<std::size_t>(k)], q.references[static_cast<std::size_t>(k)]) <= limit;
            }
        }
        entry["v3_rel_err"] = v3_err;
        entry["threshold"] = limit;
        entry["passed"] = ok;
        r.passed = r.passed && ok;
        list.push_back(entry);
        std::istringstream rows(to_csv(q));
        std::string line;
        std::getline(rows, line);
        while (std::getline(rows, line)) {
            r.csv += file + "," + line + "\n";
        }
    }
    r.report["bodies"] = list;
    r.report["passed"] = r.passed;
    return r;
}

struct AfTrial {
    int index = 0;
    std::uint64_t seed_f = 0;
    std::uint64_t seed_f1 = 0;
    std::uint64_t seed_f2 = 0;
    AfResult result;
    bool ok = false;
};

RunResult run_af(const RunConfig& c, const ToleranceProfile& tol)
{
    const CapGrid g = config_grid(c);
    const double decomposition_limit = 1e-6;
    const double equality_limit = grid_scaled(tol.noise_budget, c.n_rho, c.radial_order);
    RunResult r{"af",
                envelope(c, tol,
                         "V(f,f1,f2)^2 >= V(f,f,f2) V(f1,f1,f2) for capillary f and capillary convex f1, f2; "
                         "equality iff f = a f1 + sum a_i <xi,E_i>"),
                "kind,index,seed_f,seed_f1,seed_f2,lhs,rhs,gap,relative_gap,verdict,decomposition_residual\n", {}, true};

    const auto random_trials = parallel_map<AfTrial>(c.trials, [&](int t) {
        AfTrial tr;
        tr.index = t;
        tr.seed_f = trial_seed(c.seed, static_cast<std::uint64_t>(t), 0);
        tr.seed_f1 = trial_seed(c.seed, static_cast<std::uint64_t>(t), 1);
        tr.seed_f2 = trial_seed(c.seed, static_cast<std::uint64_t>(t), 2);
        const WeightedSpace s = make_space(random_body(g, {.seed = tr.seed_f2}, tol));
        const ScalarField f1 = random_body(g, {.seed = tr.seed_f1}, tol).values();
        const ScalarField f = random_capillary(g, tr.seed_f, 3, 1.0, tol).values;
        tr.result = af_check(s, f, f1, tol);
        tr.ok = tr.result.gap >= -tol.noise_budget * std::abs(tr.result.rhs);
        return tr;
    });

    // equality family: f = a f1 + c1 <xi,E1> + c2 <xi,E2>; trial 0 is cap against cap
    const auto equality_trials = parallel_map<AfTrial>(c.equality_trials, [&](int t) {
        AfTrial tr;
        tr.index = t;
        tr.seed_f = trial_seed(c.seed, static_cast<std::uint64_t>(t), 10);
        tr.seed_f1 = trial_seed(c.seed, static_cast<std::uint64_t>(t), 11);
        tr.seed_f2 = trial_seed(c.seed, static_cast<std::uint64_t>(t), 12);
        const ScalarField l = ell_values(g);
        if (t == 0) {
            tr.seed_f = tr.seed_f1 = tr.seed_f2 = 0;
            tr.result = af_check(make_space(ell(g)), 2.0 * l, l, tol);
        } else {
            const WeightedSpace s = make_space(random_body(g, {.seed = tr.seed_f2}, tol));
            const ScalarField f1 = random_body(g, {.seed = tr.seed_f1}, tol).values();
            std::mt19937_64 rng(tr.seed_f);
            auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
            const double a = 0.5 + 1.5 * unit();
            const double c1 = 2.0 * unit() - 1.0;
            const double c2 = 2.0 * unit() - 1.0;
            const ScalarField f = a * f1 + c1 * horizontal(g, 1) + c2 * horizontal(g, 2);
            tr.result = af_check(s, f, f1, tol);
        }
        tr.ok = std::abs(tr.result.gap) <= equality_limit * std::abs(tr.result.rhs) &&
                tr.result.verdict == "equality within resolution" && tr.result.decomposition.has_value() &&
                tr.result.decomposition->residual_norm <= decomposition_limit;
        return tr;
    });

    auto rows = [&](const std::vector<AfTrial>& trials, const std::string& kind) {
        json list = json::array();
        for (const AfTrial& tr : trials) {
            json j = to_json(tr.result);
            j["index"] = tr.index;
            j["seeds"] = {{"f", tr.seed_f}, {"f1", tr.seed_f1}, {"f2", tr.seed_f2}};
            j["passed"] = tr.ok;
            list.push_back(j);
            const auto& d = tr.result.decomposition;
            r.csv += kind + "," + std::to_string(tr.index) + "," + std::to_string(tr.seed_f) + "," +
                     std::to_string(tr.seed_f1) + "," + std::to_string(tr.seed_f2) + "," + fmt(tr.result.lhs) + "," +
                     fmt(tr.result.rhs) + "," + fmt(tr.result.gap) + "," + fmt(tr.result.relative_gap) + "," +
                     tr.result.verdict + "," + (d ? fmt(d->residual_norm) : std::string("")) + "\n";
        }
        return list;
    };
    r.report["trials"] = rows(random_trials, "random");
    r.report["equality_trials"] = rows(equality_trials, "equality");

    int violations = 0;
    int equalities = 0;
    double min_rel = std::numeric_limits<double>::infinity();
    for (const AfTrial& tr : random_trials) {
        violations += tr.ok ? 0 : 1;
        equalities += tr.result.verdict == "equality within resolution" ? 1 : 0;
        min_rel = std::min(min_rel, tr.result.relative_gap);
    }
    int equality_failures = 0;
    double max_decomposition = 0.0;
    for (const AfTrial& tr : equality_trials) {
        equality_failures += tr.ok ? 0 : 1;
        if (tr.result.decomposition) {
            max_decomposition = std::max(max_decomposition, tr.result.decomposition->residual_norm);
        }
    }
    r.report["summary"] = {{"trials", c.trials},
                           {"violations", violations},
                           {"random_flagged_equality", equalities},
                           {"min_relative_gap", c.trials > 0 ? json(min_rel) : json(nullptr)},
                           {"equality_trials", c.equality_trials},
                           {"equality_failures", equality_failures},
                           {"max_decomposition_residual", max_decomposition}};
    r.report["thresholds"] = {{"violation", "gap < -noise_budget * |rhs|"},
                              {"equality_relative_gap", equality_limit},
                              {"decomposition_residual", decomposition_limit}};
    r.passed = violations == 0 && equality_failures == 0;
    r.report["passed"] = r.passed;
    return r;
}

RunResult run_chain(const RunConfig& c, const ToleranceProfile& tol)
{
    const CapGrid g = config_grid(c);
    const double cap_limit = grid_scaled(1e-6, c.n_rho, 4);
    RunResult r{"chain",
                envelope(c, tol,
                         "V_(j)^(k-i) >= V_(i)^(k-j) V_(k)^(j-i) for 0 <= i < j < k <= 3 and "
                         "V_k / b_theta >= (V_l / b_theta)^((3-k)/(3-l)); equality for caps"),
                "body,l,k,lhs,rhs,relative_slack,ok\n", {}, true};
    const auto reports = parallel_map<ChainReport>(c.trials + 1, [&](int t) {
        if (t == 0) {
            return quermass_chain(ell(g), tol);
        }
        const std::uint64_t s = trial_seed(c.seed, static_cast<std::uint64_t>(t - 1), 0);
        return quermass_chain(random_body(g, {.seed = s}, tol), tol);
    });
    json list = json::array();
    int failures = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    double cap_slack = 0.0;
    for (int t = 0; t <= c.trials; ++t) {
        const ChainReport& cr = reports[static_cast<std::size_t>(t)];
        json j = to_json(cr);
        const std::string label = t == 0 ? "cap" : std::to_string(trial_seed(c.seed, static_cast<std::uint64_t>(t - 1), 0));
        j["body"] = label;
        list.push_back(j);
        bool ok = cr.all_ok;
        for (const auto& e : cr.normalized) {
            r.csv += label + "," + std::to_string(e.l) + "," + std::to_string(e.k) + "," + fmt(e.lhs) + "," + fmt(e.rhs) +
                     "," + fmt(e.relative_slack) + "," + (e.ok ? "true" : "false") + "\n";
            if (t == 0) {
                cap_slack = std::max(cap_slack, std::abs(e.relative_slack));
            } else {
                min_slack = std::min(min_slack, e.relative_slack);
            }
        }
        if (t == 0) {
            for (const auto& e : cr.entries) {
                cap_slack = std::max(cap_slack, std::abs(e.relative_slack));
            }
            ok = ok && cap_slack <= cap_limit;
        }
        failures += ok ? 0 : 1;
    }
    r.report["bodies"] = list;
    r.report["summary"] = {{"bodies", c.trials},
                           {"failures", failures},
                           {"min_normalized_slack", c.trials > 0 ? json(min_slack) : json(nullptr)},
                           {"cap_max_abs_slack", cap_slack}};
    r.report["thresholds"] = {{"slack", "relative_slack >= -noise_budget"}, {"cap_equality", cap_limit}};
    r.passed = failures == 0;
    r.report["passed"] = r.passed;
    return r;
}

struct SpectrumChecks {
    json j;
    bool ok = false;
};

SpectrumChecks check_spectrum(const SpectrumReport& s, bool reference_is_cap)
{
    constexpr double kLambdaTol = 1e-3;
    constexpr double kMinGap = 0.9;
    constexpr double kKernelCos = 1.0 - 1e-6;
    SpectrumChecks out;
    const double lambda1 = s.lambda1_index >= 0 ? s.eigenvalues[static_cast<std::size_t>(s.lambda1_index)]
                                                : std::numeric_limits<double>::quiet_NaN();
    const bool lambda_ok = std::abs(lambda1 - 1.0) <= kLambdaTol;
    const bool gap_ok = s.lambda1_simple && s.gap >= kMinGap;
    const bool kernel_ok = s.kernel_indices.size() == 2;
    bool cos_ok = true;
    if (reference_is_cap) {
        for (const double cs : s.kernel_cosines) {
            cos_ok = cos_ok && cs >= kKernelCos;
        }
    }
    const bool band_ok = s.band_violations.empty();
    out.ok = lambda_ok && gap_ok && kernel_ok && cos_ok && band_ok;
    out.j = {{"lambda1", lambda1},
             {"lambda1_error", std::abs(lambda1 - 1.0)},
             {"lambda1_ok", lambda_ok},
             {"gap_ok", gap_ok},
             {"kernel_ok", kernel_ok},
             {"kernel_cosine_ok", cos_ok},
             {"band_ok", band_ok},
             {"thresholds",
              {{"lambda1", kLambdaTol}, {"gap", kMinGap}, {"kernel_cosine", reference_is_cap ? json(kKernelCos) : json(nullptr)}}}};
    return out;
}

RunResult run_spectrum(const RunConfig& c, const ToleranceProfile& tol)
{
    const CapGrid g = config_grid(c);
    RunResult r{"spectrum",
                envelope(c, tol,
                         "A f = lambda f on (C_theta, omega) with the Robin condition: lambda_1 = 1 simple (f = f2), "
                         "kernel = horizontal linears, no eigenvalue in (delta, 1 - delta)"),
                "", {}, true};
    const bool cap = c.f2 == "ell";
    const CapillaryBody f2 = cap ? ell(g) : random_body(g, {.seed = c.seed}, tol);
    const SpectrumReport s = spectrum(make_space(f2), {.method = c.method}, tol);
    const SpectrumChecks chk = check_spectrum(s, cap);
    r.report["spectrum"] = to_json(s);
    r.report["checks"] = chk.j;
    r.csv = to_csv(s);
    r.artifacts.push_back({"eigenvalues.csv", r.csv});
    r.passed = chk.ok;

    if (!c.sweep.empty()) {
        // pairs (h, |lambda_1 - 1|); errors at the rounding floor carry no order information
        constexpr double kFloor = 1e-11;
        constexpr double kMinOrder = 3.5;
        json pairs = json::array();
        std::vector<double> hs;
        std::vector<double> errs;
        std::string csv = "n,h,lambda1_error\n";
        for (const int n : c.sweep) {
            const CapGrid gn = build_grid(c.theta, n, n, c.radial_order);
            const CapillaryBody ref = cap ? ell(gn) : random_body(gn, {.seed = c.seed}, tol);
            const SpectrumReport sn = spectrum(make_space(ref), {.method = c.method}, tol);
            const double l1 = sn.lambda1_index >= 0 ? sn.eigenvalues[static_cast<std::size_t>(sn.lambda1_index)]
                                                    : std::numeric_limits<double>::quiet_NaN();
            const double err = std::abs(l1 - 1.0);
            pairs.push_back({{"n", n}, {"h", gn.d_rho()}, {"lambda1_error", err}});
            csv += std::to_string(n) + "," + fmt(gn.d_rho()) + "," + fmt(err) + "\n";
            if (err > kFloor) {
                hs.push_back(gn.d_rho());
                errs.push_back(err);
            }
        }
        json sweep = {{"pairs", pairs}, {"rounding_floor", kFloor}, {"min_order", kMinOrder}};
        if (hs.size() >= 2) {
            const double slope = loglog_slope(hs, errs);
            sweep["slope"] = slope;
            sweep["passed"] = slope >= kMinOrder;
            r.passed = r.passed && slope >= kMinOrder;
        } else {
            sweep["slope"] = nullptr;
            sweep["passed"] = true;
            sweep["note"] = "errors at the rounding floor on all but at most one grid";
        }
        r.report["sweep"] = sweep;
        r.artifacts.push_back({"sweep.csv", csv});
    }
    r.report["passed"] = r.passed;
    return r;
}

CapillaryBody config_body(const RunConfig& c, const ToleranceProfile& tol)
{
    if (!c.inputs.empty()) {
        return load_body(c.inputs.front(), tol);
    }
    return random_body(config_grid(c), {.seed = c.seed, .base_radius = c.base_radius, .amplitude = c.amplitude}, tol);
}

RunResult run_steiner(const RunConfig& c, const ToleranceProfile& tol)
{
    const CapillaryBody body = config_body(c, tol);
    const CapGrid& g = body.grid();
    const double limit = grid_scaled(1e-5, g.n_rho(), 4);
    RunResult r{"steiner", envelope(c, tol, "|K + t C_theta| = sum_k binom(3,k) V_k t^k"),
                "k,t,volume,coefficient,predicted,rel_err\n", {}, true};
    const std::vector<double> ts = c.t_samples.empty() ? default_steiner_samples() : c.t_samples;
    const SteinerFit fit = steiner_check(g, body.values(), ts);
    json j = {{"t_values", fit.t_values},       {"volumes", fit.volumes},       {"coefficients", fit.coefficients},
              {"predicted", fit.predicted},     {"rel_errors", fit.rel_errors}, {"fit_residual", fit.fit_residual},
              {"max_rel_error", fit.max_rel_error}};
    r.report["fit"] = j;
    r.report["thresholds"] = {{"max_rel_error", limit}};
    for (std::size_t k = 0; k < fit.coefficients.size(); ++k) {
        const std::string t = k < fit.t_values.size() ? fmt(fit.t_values[k]) : "";
        const std::string v = k < fit.volumes.size() ? fmt(fit.volumes[k]) : "";
        r.csv += std::to_string(k) + "," + t + "," + v + "," + fmt(fit.coefficients[k]) + "," + fmt(fit.predicted[k]) + "," +
                 fmt(fit.rel_errors[k]) + "\n";
    }
    for (std::size_t k = fit.coefficients.size(); k < fit.t_values.size(); ++k) {
        r.csv += "," + fmt(fit.t_values[k]) + "," + fmt(fit.volumes[k]) + ",,,\n";
    }
    r.passed = fit.max_rel_error <= limit;
    r.report["passed"] = r.passed;
    return r;
}

RunResult run_reconstruct(const RunConfig& c, const ToleranceProfile& tol)
{
    const CapillaryBody body = config_body(c, tol);
    const CapGrid& g = body.grid();
    RunResult r{"reconstruct",
                envelope(c, tol,
                         "X = grad h + h (xi - cos(theta) e); <nu,e> = -cos(theta) and <X,e> = 0 on the boundary; "
                         "3 |K| = int <X,nu> dA; parallel surface X + t (nu + cos(theta) e) has support h + t l"),
                "quantity,value,threshold,ok\n", {}, true};
    const EmbeddedPatch patch = embed(body);
    json summary = patch_summary(body, patch);
    const ParallelBody par = parallel_body(body, 0.5);
    summary["parallel_linearity_error"] = par.linearity_error;
    summary["parallel_displacement_error"] = par.displacement_error;

    const double scale = std::max(1.0, body.values().cwiseAbs().maxCoeff());
    struct Check {
        std::string name;
        double value;
        double limit;
        bool below;
    };
    const std::vector<Check> checks{
        {"contact_angle_residual", summary["contact_angle_residual"].get<double>(), 1e-12, true},
        {"planarity_residual", summary["planarity_residual"].get<double>(), grid_scaled(1e-5, g.n_rho(), 4) * scale, true},
        {"interior_min_height", summary["interior_min_height"].get<double>(), 0.0, false},
        {"degenerate_triangles", summary["degenerate_triangles"].get<double>(), 0.0, true},
        {"volume_rel_diff", summary["volume_rel_diff"].get<double>(), grid_scaled(1e-3, g.n_rho(), 2), true},
        {"boundary_form_rel_diff_k2", summary["boundary_form"][0]["rel_diff"].get<double>(), grid_scaled(1e-3, g.n_rho(), 2),
         true},
        {"boundary_form_rel_diff_k3", summary["boundary_form"][1]["rel_diff"].get<double>(), grid_scaled(1e-3, g.n_rho(), 2),
         true},
        {"parallel_linearity_error", par.linearity_error, 1e-12 * scale, true},
        {"principal_radius_min", summary["principal_radius_min"].get<double>(), 0.0, false},
    };
    json checks_json = json::array();
    for (const Check& k : checks) {
        const bool ok = k.below ? k.value <= k.limit : k.value > k.limit;
        r.passed = r.passed && ok;
        checks_json.push_back({{"quantity", k.name}, {"value", k.value}, {"threshold", k.limit}, {"passed", ok}});
        r.csv += k.name + "," + fmt(k.value) + "," + fmt(k.limit) + "," + (ok ? "true" : "false") + "\n";
    }
    r.report["summary"] = summary;
    r.report["checks"] = checks_json;
    r.artifacts.push_back({"patch.obj", mesh_to_obj(patch)});
    r.report["passed"] = r.passed;
    return r;
}

std::vector<std::string> report_files(const std::vector<std::string>& inputs)
{
    std::vector<std::string> files;
    for (const std::string& in : inputs) {
        const std::filesystem::path p(in);
        if (std::filesystem::is_directory(p)) {
            std::vector<std::string> found;
            for (const auto& e : std::filesystem::directory_iterator(p)) {
                const std::string name = e.path().filename().string();
                if (e.is_regular_file() && e.path().extension() == ".json" && name.find(".meta.") == std::string::npos &&
                    name.rfind("body_", 0) != 0 && name != "report.json") {
                    found.push_back(e.path().string());
                }
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(in);
        }
    }
    return files;
}

RunResult run_report(const RunConfig& c, const ToleranceProfile& tol)
{
    RunResult r{"report", envelope(c, tol, "aggregate of the identities checked by the listed reports"),
                "file,command,identity,passed\n", {}, true};
    json list = json::array();
    for (const std::string& path : report_files(c.inputs)) {
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorCode::Io, "cannot open '" + path + "'");
        }
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, "'" + path + "': " + e.what());
        }
        if (!j.is_object() || !j.contains("command") || !j.contains("passed")) {
            throw Error(ErrorCode::Parse, "'" + path + "' is not a capaf report");
        }
        const std::string file = std::filesystem::path(path).filename().string();
        const bool ok = j["passed"].get<bool>();
        r.passed = r.passed && ok;
        list.push_back({{"file", file},
                        {"command", j["command"]},
                        {"identity", j.value("identity", "")},
                        {"theta", j["config"].value("theta", json(nullptr))},
                        {"passed", ok}});
        r.csv += file + "," + j["command"].get<std::string>() + "," + csv_quote(j.value("identity", "")) + "," +
                 (ok ? "true" : "false") + "\n";
    }
    r.report["reports"] = list;
    r.report["passed"] = r.passed;
    return r;
}

bool needs_theta(const std::string& cmd)
{
    return cmd == "gen" || cmd == "af" || cmd == "chain" || cmd == "spectrum";
}

} // namespace

json to_json(const RunConfig& c)
{
    json j;
    j["command"] = c.command;
    j["theta"] = std::isnan(c.theta) ? json(nullptr) : json(c.theta);
    j["grid"] = {{"n_rho", c.n_rho}, {"n_phi", c.n_phi}, {"radial_order", c.radial_order}};
    j["seed"] = c.seed;
    j["trials"] = c.trials;
    j["equality_trials"] = c.equality_trials;
    j["count"] = c.count;
    j["amplitude"] = c.amplitude;
    j["base_radius"] = c.base_radius;
    j["radius"] = c.radius;
    j["f2"] = c.f2;
    j["method"] = c.method;
    j["sweep"] = c.sweep;
    j["t_samples"] = c.t_samples;
    json inputs = json::array();
    for (const std::string& in : c.inputs) {
        inputs.push_back(std::filesystem::path(in).filename().string());
    }
    j["inputs"] = inputs;
    j["tolerance_profile"] = c.tolerance_profile;
    return j;
}

void validate(const RunConfig& c)
{
    static const std::vector<std::string> commands{"gen",      "quermass", "af",          "chain",
                                                   "spectrum", "steiner",  "reconstruct", "report"};
    if (std::find(commands.begin(), commands.end(), c.command) == commands.end()) {
        throw Error(ErrorCode::Parse, "unknown command '" + c.command + "'");
    }
    ToleranceProfile::by_name(c.tolerance_profile);
    const bool body_from_file = (c.command == "steiner" || c.command == "reconstruct") && !c.inputs.empty();
    if (needs_theta(c.command) || ((c.command == "steiner" || c.command == "reconstruct") && !body_from_file)) {
        if (std::isnan(c.theta)) {
            throw Error(ErrorCode::Parse, c.command + " needs --theta");
        }
        build_grid(c.theta, c.n_rho, c.n_phi, c.radial_order);
    }
    if ((c.command == "quermass" || c.command == "report") && c.inputs.empty()) {
        throw Error(ErrorCode::Parse, c.command + " needs at least one input file");
    }
    for (const std::string& in : c.inputs) {
        if (!std::filesystem::exists(in)) {
            throw Error(ErrorCode::Io, "input '" + in + "' does not exist");
        }
    }
    if (c.trials < 0 || c.equality_trials < 0 || c.count < 0) {
        throw Error(ErrorCode::Parse, "counts must be nonnegative");
    }
    if (!(c.base_radius > 0.0) || c.amplitude < 0.0 || c.radius < 0.0) {
        throw Error(ErrorCode::Parse, "base radius must be positive, amplitude and radius nonnegative");
    }
    if (c.f2 != "ell" && c.f2 != "random") {
        throw Error(ErrorCode::Parse, "f2 must be 'ell' or 'random'");
    }
    if (c.method != "auto" && c.method != "dense" && c.method != "iterative") {
        throw Error(ErrorCode::Parse, "method must be auto, dense or iterative");
    }
    for (const int n : c.sweep) {
        build_grid(c.theta, n, n, c.radial_order);
    }
}

double grid_scaled(double at_128, int n_rho, int order)
{
    return at_128 * std::max(1.0, std::pow(128.0 / n_rho, order));
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream)
{
    std::uint64_t z = seed * 0x9e3779b97f4a7c15ULL + trial * 0xbf58476d1ce4e5b9ULL + stream * 0x94d049bb133111ebULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

int worker_count(int jobs)
{
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CAPAF_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            n = static_cast<int>(std::min<long>(v, 1024));
        }
    }
    return std::max(1, std::min(n, jobs));
}

RunResult run(const RunConfig& c)
{
    validate(c);
    const ToleranceProfile tol = ToleranceProfile::by_name(c.tolerance_profile);
    if (c.command == "gen") {
        return run_gen(c, tol);
    }
    if (c.command == "quermass") {
        return run_quermass(c, tol);
    }
    if (c.command == "af") {
        return run_af(c, tol);
    }
    if (c.command == "chain") {
        return run_chain(c, tol);
    }
    if (c.command == "spectrum") {
        return run_spectrum(c, tol);
    }
    if (c.command == "steiner") {
        return run_steiner(c, tol);
    }
    if (c.command == "reconstruct") {
        return run_reconstruct(c, tol);
    }
    return run_report(c, tol);
}

} // namespace capaf
