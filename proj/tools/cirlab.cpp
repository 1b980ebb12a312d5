// cirlab: command-line front end for the CIR strong-convergence harness.
//
//   cirlab regimes --kappa 2 --theta 0.02 --sigma 0.2
//   cirlab paths   --scheme split_soft_zero --sigma 0.8 --dt-max 0.01 --paths 2 --out paths/
//   cirlab moments --scheme split_lie --sigma 0.2 --dt-max 0.01 --paths 1000
//   cirlab rates   --config campaign.json --out results/ --threads 4
//
// Exit codes: 0 success, 1 configuration error, 2 numerical-domain error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cirlab/campaign_io.hpp"
#include "cirlab/errors.hpp"
#include "cirlab/experiment.hpp"
#include "cirlab/mesh.hpp"
#include "cirlab/model.hpp"
#include "cirlab/schemes.hpp"
#include "cirlab/wiener.hpp"

namespace {

using namespace cirlab;

struct ModelFlags {
    double kappa = 2.0;
    double theta = 0.02;
    double x0 = 0.0;
    double horizon = 1.0;
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
    cmd->add_option("--kappa", m.kappa, "mean-reversion speed")->capture_default_str();
    cmd->add_option("--theta", m.theta, "long-run mean")->capture_default_str();
    cmd->add_option("--x0", m.x0, "initial state")->capture_default_str();
    cmd->add_option("--horizon", m.horizon, "final time T")->capture_default_str();
}

int resolve_threads(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("CIRLAB_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
        throw std::invalid_argument("CIRLAB_THREADS must be a positive integer");
    }
    return 0;
}

std::string fmt_g(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string describe_regime(const CirParams& p) {
    const TransformedParams tp = transform(p);
    const Regime r = classify_regime(p);
    const double kt = p.kappa * p.theta;
    const double s2 = p.sigma * p.sigma;

    std::vector<std::string> boundaries;
    if (detail::nearly_equal(kt, s2)) boundaries.emplace_back("kappa*theta == sigma^2");
    if (detail::nearly_equal(2.0 * kt, s2)) boundaries.emplace_back("2*kappa*theta == sigma^2");
    if (tp.alpha == 0.0) boundaries.emplace_back("alpha == 0");

    std::string line = "alpha=" + fmt_g(tp.alpha) + ", feller=" + (r.feller ? "true" : "false") +
                       ", regime=" + std::string(to_string(r.kind));
    if (!boundaries.empty()) {
        line += " (boundary: ";
        for (std::size_t i = 0; i < boundaries.size(); ++i) {
            if (i) line += ", ";
            line += boundaries[i];
        }
        line += ")";
    }
    return line;
}

int cmd_regimes(const ModelFlags& m, const std::vector<double>& sigmas) {
    CirParams p{m.kappa, m.theta, 1.0, m.x0, m.horizon};
    std::vector<std::pair<std::string, double>> rows;
    if (sigmas.empty()) {
        const double kt = m.kappa * m.theta;
        rows = {{"projected/truncated-euler limit", std::sqrt(2.0 * kt / 3.0)},
                {"splitting theory limit", std::sqrt(kt)},
                {"feller boundary", std::sqrt(2.0 * kt)},
                {"alpha = 0", 2.0 * std::sqrt(kt)}};
    } else {
        for (double s : sigmas) rows.emplace_back("", s);
    }
    for (const auto& [name, sigma] : rows) {
        p.sigma = sigma;
        p.validate();
        if (rows.size() > 1) std::cout << "sigma=" << fmt_g(sigma) << ": ";
        std::cout << describe_regime(p);
        if (!name.empty()) std::cout << " [" << name << "]";
        std::cout << "\n";
    }
    return 0;
}

struct RunFlags {
    std::string scheme = "split_lie";
    std::string controller;
    double sigma = 0.2;
    double dt_max = 0.01;
    double rho = 2.0;
    std::string preset = "desk";
    std::optional<double> dt_ref;
    std::size_t paths = 1;
    std::uint64_t seed = 20210101;
};

void add_run_flags(CLI::App* cmd, RunFlags& r) {
    cmd->add_option("--scheme", r.scheme, "scheme name")->capture_default_str();
    cmd->add_option("--controller", r.controller, "fixed | alpha_guard | soft_zero_hybrid | heuristic");
    cmd->add_option("--sigma", r.sigma, "volatility")->capture_default_str();
    cmd->add_option("--dt-max", r.dt_max, "maximum (or fixed) step")->capture_default_str();
    cmd->add_option("--rho", r.rho, "soft-zero rescaling factor")->capture_default_str();
    cmd->add_option("--preset", r.preset, "desk | paper")->capture_default_str();
    cmd->add_option("--dt-ref", r.dt_ref, "fine Wiener grid step (overrides --preset)");
    cmd->add_option("--seed", r.seed, "reproducibility seed")->capture_default_str();
}

MeshController controller_for(const RunFlags& r, SchemeId scheme) {
    if (r.controller.empty()) return default_controller(scheme, r.dt_max, r.rho);
    return {parse_controller(r.controller), r.dt_max, r.rho};
}

double dt_ref_for(const RunFlags& r) { return r.dt_ref ? *r.dt_ref : preset_dt_ref(r.preset); }

int cmd_paths(const ModelFlags& m, const RunFlags& r, const std::string& out_dir) {
    const CirParams p{m.kappa, m.theta, r.sigma, m.x0, m.horizon};
    const SchemeId scheme = parse_scheme(r.scheme);
    const MeshController controller = controller_for(r, scheme);
    const Candidate label = make_candidate(scheme, controller.kind);
    std::filesystem::create_directories(out_dir);

    for (std::size_t k = 0; k < r.paths; ++k) {
        const WienerGrid grid = generate(r.seed, k, dt_ref_for(r), p.horizon);
        const Trajectory traj = run_trajectory(scheme, controller, p, grid);
        std::string csv = "t,x,step_kind,dt\n";
        for (std::size_t n = 0; n < traj.times.size(); ++n) {
            const double dt = n == 0 ? 0.0 : traj.times[n] - traj.times[n - 1];
            const std::string_view kind = n == 0 ? "initial" : to_string(traj.step_kinds[n - 1]);
            csv += format_double(traj.times[n]) + "," + format_double(traj.states[n]) + "," +
                   std::string(kind) + "," + format_double(dt) + "\n";
        }
        const auto path = std::filesystem::path(out_dir) /
                          (label.label + "_path" + std::to_string(k) + ".csv");
        write_text_file(path, csv);
        std::cout << path.string() << " (" << traj.step_kinds.size() << " steps)\n";
    }
    return 0;
}

int cmd_moments(const ModelFlags& m, const RunFlags& r, int threads) {
    const CirParams p{m.kappa, m.theta, r.sigma, m.x0, m.horizon};
    const SchemeId scheme = parse_scheme(r.scheme);
    const MeshController controller = controller_for(r, scheme);
    GridConfig grid{dt_ref_for(r), r.seed, r.paths, 1, 0};
    ErrorOptions opts;
    opts.threads = threads;
    const MomentResult res = moment_check(scheme, controller, p, grid, opts);
    std::cout << "scheme=" << r.scheme << " sigma=" << fmt_g(r.sigma) << " paths=" << res.num_paths
              << "\nmean_XN=" << format_double(res.mean)
              << "\nstderr=" << format_double(res.std_error)
              << "\nbound=" << format_double(res.bound) << "\n"
              << (res.pass ? "PASS" : "FAIL") << ": mean <= bound + 3*stderr\n";
    return 0;
}

int cmd_rates(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::string> preset, std::optional<std::string> out_dir,
              int threads) {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (preset) cfg.dt_ref = preset_dt_ref(*preset);
    if (out_dir) cfg.output = *out_dir;

    RunClock clock;
    clock.started = std::chrono::system_clock::now();
    const CampaignResult result = run_campaign(cfg, Execution::Parallel, threads);
    clock.finished = std::chrono::system_clock::now();

    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& a : result.annotations) std::cerr << "note: " << a << "\n";
    const CampaignFiles files = write_campaign(cfg.output, cfg, result, clock, threads);
    std::cout << "wrote " << files.results.string() << ", " << files.rates.string() << ", "
              << files.manifest.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cirlab: strong-convergence laboratory for the CIR process"};
    app.require_subcommand(1);
    int threads_flag = 0;
    app.add_option("--threads", threads_flag, "worker threads (results never depend on it)");

    ModelFlags model;

    auto* regimes = app.add_subcommand("regimes", "classify sigma values against the key landmarks");
    std::vector<double> regime_sigmas;
    add_model_flags(regimes, model);
    regimes->add_option("--sigma", regime_sigmas, "sigma values (default: the landmarks)");

    RunFlags run;
    std::string paths_out = "paths";
    auto* paths = app.add_subcommand("paths", "simulate and dump trajectories as CSV");
    add_model_flags(paths, model);
    add_run_flags(paths, run);
    paths->add_option("--paths", run.paths, "number of paths")->capture_default_str();
    paths->add_option("--out", paths_out, "output directory")->capture_default_str();

    auto* moments = app.add_subcommand("moments", "first-moment bound check at T");
    add_model_flags(moments, model);
    add_run_flags(moments, run);
    std::size_t moment_paths = 1000;
    moments->add_option("--paths", moment_paths, "number of paths")->capture_default_str();
    moments->add_option("--threads", threads_flag, "worker threads");

    std::string config_path;
    std::optional<std::uint64_t> rates_seed;
    std::optional<std::string> rates_preset, rates_out;
    auto* rates = app.add_subcommand("rates", "run a convergence campaign");
    rates->add_option("--config", config_path, "campaign JSON")->required();
    rates->add_option("--seed", rates_seed, "override the config seed");
    rates->add_option("--preset", rates_preset, "desk | paper (sets dt_ref)");
    rates->add_option("--out", rates_out, "output directory");
    rates->add_option("--threads", threads_flag, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        const int threads = resolve_threads(threads_flag);
        if (regimes->parsed()) return cmd_regimes(model, regime_sigmas);
        if (paths->parsed()) return cmd_paths(model, run, paths_out);
        if (moments->parsed()) {
            run.paths = moment_paths;
            return cmd_moments(model, run, threads);
        }
        if (rates->parsed()) return cmd_rates(config_path, rates_seed, rates_preset, rates_out, threads);
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
