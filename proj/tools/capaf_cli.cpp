#include "capaf/error.hpp"
#include "capaf/runner.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitBreach = 2;
constexpr int kExitConfig = 3;

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) {
        throw capaf::Error(capaf::ErrorCode::Io, "cannot write '" + p.string() + "'");
    }
}

// "RxP" or "N"
bool parse_grid(const std::string& s, int& n_rho, int& n_phi)
{
    const auto x = s.find_first_of("xX");
    try {
        std::size_t used = 0;
        if (x == std::string::npos) {
            n_rho = n_phi = std::stoi(s, &used);
            return used == s.size();
        }
        n_rho = std::stoi(s.substr(0, x), &used);
        if (used != x) {
            return false;
        }
        const std::string rest = s.substr(x + 1);
        n_phi = std::stoi(rest, &used);
        return used == rest.size();
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Capillary mixed volumes: generate bodies, check identities and inequalities, emit reports"};
    app.require_subcommand(1);

    capaf::RunConfig cfg;
    std::string grid = "64x64";
    std::string out_dir;
    bool as_json = false;
    bool as_csv = false;

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"gen", "write seeded random capillary convex bodies"},
        {"quermass", "quermassintegrals of body files"},
        {"af", "random and equality-family trials of the mixed volume inequality"},
        {"chain", "quermassintegral chains and their normalized form"},
        {"spectrum", "leading eigenpairs of the weighted operator"},
        {"steiner", "Steiner polynomial fit against the quermassintegrals"},
        {"reconstruct", "embed a body, check capillarity, export OBJ"},
        {"report", "aggregate report files or directories"},
    };
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--theta", cfg.theta, "contact angle in (0, pi)");
        sub->add_option("--grid", grid, "grid as RxP (rings x azimuthal nodes) or N")->capture_default_str();
        sub->add_option("--radial-order", cfg.radial_order, "radial finite-difference order, 4 or 6")
            ->capture_default_str();
        sub->add_option("--seed", cfg.seed, "base seed")->capture_default_str();
        sub->add_option("--trials", cfg.trials, "number of random trials")->capture_default_str();
        sub->add_option("--out", out_dir, "output directory (default: report to stdout)");
        auto* j = sub->add_flag("--json", as_json, "JSON report (default)");
        auto* c = sub->add_flag("--csv", as_csv, "CSV report");
        j->excludes(c);
        sub->add_option("--tolerance-profile", cfg.tolerance_profile, "tolerance profile")
            ->check(CLI::IsMember({"strict", "default"}))
            ->capture_default_str();
        const std::string name = s.name;
        if (name == "gen") {
            sub->add_option("--count", cfg.count, "number of bodies")->capture_default_str();
        }
        if (name == "gen" || name == "steiner" || name == "reconstruct") {
            sub->add_option("--amplitude", cfg.amplitude, "perturbation amplitude")->capture_default_str();
            sub->add_option("--base-radius", cfg.base_radius, "radius of the underlying cap")->capture_default_str();
        }
        if (name == "quermass") {
            sub->add_option("--radius", cfg.radius, "reference radius of a scaled cap (fills the reference column)");
        }
        if (name == "af") {
            sub->add_option("--equality-trials", cfg.equality_trials, "equality-family trials")->capture_default_str();
        }
        if (name == "spectrum") {
            sub->add_option("--f2", cfg.f2, "reference body: ell or random")->capture_default_str();
            sub->add_option("--method", cfg.method, "auto, dense or iterative")->capture_default_str();
            sub->add_option("--sweep", cfg.sweep, "grid sizes of a refinement sweep")->delimiter(',');
        }
        if (name == "steiner") {
            sub->add_option("--t", cfg.t_samples, "Steiner sample distances")->delimiter(',');
        }
        if (name == "quermass" || name == "report" || name == "steiner" || name == "reconstruct") {
            sub->add_option("inputs", cfg.inputs, name == "report" ? "report files or directories" : "body files");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfig;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    if (!parse_grid(grid, cfg.n_rho, cfg.n_phi)) {
        std::cerr << "config error: --grid expects RxP, got '" << grid << "'\n";
        return kExitConfig;
    }

    try {
        capaf::validate(cfg);
    } catch (const capaf::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    capaf::RunResult result;
    try {
        result = capaf::run(cfg);
    } catch (const capaf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string text = as_csv ? result.csv : result.report.dump(2) + "\n";
    try {
        if (out_dir.empty()) {
            std::cout << text;
        } else {
            const std::filesystem::path dir(out_dir);
            std::filesystem::create_directories(dir);
            write_file(dir / (result.name + (as_csv ? ".csv" : ".json")), text);
            for (const capaf::Artifact& a : result.artifacts) {
                write_file(dir / a.file, a.contents);
            }
            const nlohmann::json meta = {{"report", result.name},
                                         {"started_utc", started},
                                         {"finished_utc", utc_now()},
                                         {"wall_seconds", wall},
                                         {"threads", capaf::worker_count(1 << 20)}};
            write_file(dir / (result.name + ".meta.json"), meta.dump(2) + "\n");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    if (!result.passed) {
        std::cerr << result.name << ": tolerance breach\n";
        return kExitBreach;
    }
    return kExitPass;
}
