// wspec: spectral densities of Wishart matrices with non-identically
// distributed or Kronecker-correlated entries.
//
// Subcommands
//   replica   deterministic saddle-point density on a lambda grid
//   bp        message-passing density averaged over sampled matrices
//   exact     eigenvalue histogram from dense eigensolves
//   mp        closed-form MP law with v = <s><t>
//   trace     matrix-trace resolvent recursion on explicit factors
//   moments   closed-form <1/lambda>, <1/lambda^2> and portfolio quantities
//   compare   run several engines and report pairwise agreement
//
// Exit codes: 0 ok, 2 config error, 3 non-convergence above the configured
// failure fraction, 4 I/O error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "wspec/wspec.hpp"

namespace {

using namespace wspec;

struct CliOverrides {
    std::string config_path;
    std::string out;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::string grid;  // min:max:n
    std::optional<std::size_t> samples;
    std::optional<std::size_t> n;
    std::optional<std::size_t> threads;
};

void apply_overrides(RunConfig& cfg, const CliOverrides& cli) {
    if (!cli.out.empty()) cfg.output.path = cli.out;
    if (!cli.format.empty()) {
        if (cli.format == "csv")
            cfg.output.format = OutputFormat::csv;
        else if (cli.format == "json")
            cfg.output.format = OutputFormat::json;
        else
            throw ConfigError("--format: must be csv or json");
    }
    if (cli.seed) cfg.sampling.base_seed = *cli.seed;
    if (cli.epsilon) {
        if (!(*cli.epsilon > 0.0)) throw ConfigError("--epsilon: must be > 0");
        cfg.grid.epsilon = *cli.epsilon;
    }
    if (!cli.grid.empty()) {
        double lo = 0.0, hi = 0.0;
        unsigned long long n = 0;
        if (std::sscanf(cli.grid.c_str(), "%lf:%lf:%llu", &lo, &hi, &n) != 3)
            throw ConfigError("--grid: expected min:max:n");
        if (!(lo < hi) || n < 2) throw ConfigError("--grid: need min < max and n >= 2");
        cfg.grid.lambda_min = lo;
        cfg.grid.lambda_max = hi;
        cfg.grid.n_points = static_cast<std::size_t>(n);
    }
    if (cli.samples) {
        if (*cli.samples < 1) throw ConfigError("--samples: must be >= 1");
        cfg.sampling.n_samples = *cli.samples;
    }
    if (cli.n) {
        if (*cli.n < 2) throw ConfigError("--n: must be >= 2");
        cfg.sampling.n = *cli.n;
    }
    if (cli.threads) {
        if (*cli.threads < 1) throw ConfigError("--threads: must be >= 1");
        cfg.threads = *cli.threads;
    }
}

void write_curve(const DensityCurve& curve, const RunConfig& cfg,
                 const Json& extra_metadata = Json()) {
    if (cfg.output.format == OutputFormat::csv) {
        if (cfg.output.path.empty()) {
            write_curve_csv(curve, std::cout);
        } else {
            write_curve_csv(curve, cfg.output.path);
        }
        return;
    }
    Json doc = curve_to_json(curve, cfg.sampling.base_seed, true);
    if (!extra_metadata.is_null())
        for (const auto& item : extra_metadata.items())
            doc["metadata"][item.key()] = item.value();
    if (cfg.output.path.empty()) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::ofstream os(cfg.output.path);
        if (!os) throw IoError("cannot open for writing: " + cfg.output.path);
        os << doc.dump(2) << "\n";
        if (!os) throw IoError("failed while writing: " + cfg.output.path);
    }
}

/// Exit code 3 when too many grid points failed to converge.
int convergence_exit_code(const DensityCurve& curve, double max_failure_fraction) {
    const double total = static_cast<double>(curve.entries.size());
    if (total == 0.0) return 0;
    const double failed = total - static_cast<double>(curve.converged_count());
    return failed / total > max_failure_fraction ? 3 : 0;
}

/// Seed-averaged message-passing curve: sample i uses base_seed + i. A grid
/// point of the average is converged when at least
/// (1 - max_failure_fraction) of the samples converged there.
DensityCurve bp_average_curve(const RunConfig& cfg, const LambdaGrid& grid) {
    const std::size_t n_samples = cfg.sampling.n_samples;
    std::vector<DensityCurve> per_sample(n_samples);
    parallel_for(n_samples, cfg.threads, [&](std::size_t i) {
        const SampledEnsemble sample =
            sample_matrix(cfg.ensemble, cfg.sampling.n, cfg.sampling.base_seed + i);
        per_sample[i] = bp_density_curve(sample, grid, cfg.solver);
    });

    DensityCurve avg = per_sample.front();
    avg.ensemble = cfg.ensemble;
    const std::size_t n_points = avg.entries.size();
    for (std::size_t k = 0; k < n_points; ++k) {
        double rho_sum = 0.0;
        Complex chi_sum{};
        std::size_t n_conv = 0;
        std::size_t iter_sum = 0;
        for (const auto& curve : per_sample) {
            const auto& e = curve.entries[k];
            iter_sum += e.iterations;
            if (!e.converged) continue;
            ++n_conv;
            rho_sum += e.rho;
            chi_sum += e.chi_w;
        }
        auto& out = avg.entries[k];
        out.iterations = iter_sum / n_samples;
        const double quorum =
            (1.0 - cfg.max_failure_fraction) * static_cast<double>(n_samples);
        out.converged = n_conv > 0 && static_cast<double>(n_conv) + 1e-12 >= quorum;
        if (out.converged) {
            out.rho = rho_sum / static_cast<double>(n_conv);
            out.chi_w = chi_sum / static_cast<double>(n_conv);
        } else {
            out.rho = std::numeric_limits<double>::quiet_NaN();
            out.chi_w = Complex{};
        }
    }
    return avg;
}

std::vector<double> histogram_edges(const RunConfig& cfg) {
    std::vector<double> edges(cfg.grid.n_points + 1);
    for (std::size_t i = 0; i <= cfg.grid.n_points; ++i)
        edges[i] = cfg.grid.lambda_min +
                   (cfg.grid.lambda_max - cfg.grid.lambda_min) *
                       static_cast<double>(i) / static_cast<double>(cfg.grid.n_points);
    return edges;
}

int run_replica(const RunConfig& cfg) {
    DensityCurve curve;
    if (!cfg.solver.warm_start && cfg.threads > 1) {
        // independent points: dispatch the grid to the worker pool
        const LambdaGrid grid = cfg.grid.make();
        require_valid(grid);
        curve.method = MethodTag::replica;
        curve.ensemble = cfg.ensemble;
        curve.epsilon = cfg.grid.epsilon;
        curve.entries.resize(grid.points.size());
        parallel_for(grid.points.size(), cfg.threads, [&](std::size_t i) {
            LambdaGrid single;
            single.points = {grid.points[i]};
            const DensityCurve one =
                replica_density_curve(cfg.ensemble, single, cfg.solver);
            curve.entries[i] = one.entries.front();
        });
        curve.sort_ascending();
    } else {
        curve = replica_density_curve(cfg.ensemble, cfg.grid.make(), cfg.solver);
    }
    write_curve(curve, cfg);
    return convergence_exit_code(curve, cfg.max_failure_fraction);
}

int run_bp(const RunConfig& cfg) {
    DensityCurve curve = bp_average_curve(cfg, cfg.grid.make());
    write_curve(curve, cfg,
                Json{{"n", cfg.sampling.n}, {"n_samples", cfg.sampling.n_samples}});
    return convergence_exit_code(curve, cfg.max_failure_fraction);
}

int run_exact(const RunConfig& cfg) {
    const std::vector<double> edges = histogram_edges(cfg);
    const Histogram hist = empirical_density(cfg.ensemble, cfg.sampling.n,
                                             cfg.sampling.n_samples,
                                             cfg.sampling.base_seed, edges);
    DensityCurve curve = histogram_to_curve(hist, cfg.ensemble);
    write_curve(curve, cfg,
                Json{{"n", cfg.sampling.n},
                     {"n_samples", cfg.sampling.n_samples},
                     {"histogram", Json{{"bin_edges", hist.bin_edges},
                                        {"mass", hist.mass},
                                        {"std_error", hist.std_error}}}});
    return 0;
}

int run_mp(const RunConfig& cfg) {
    const double v = cfg.ensemble.mean_variance();
    DensityCurve curve = mp_density_curve(cfg.ensemble.alpha, v, cfg.grid.make());
    curve.ensemble = cfg.ensemble;
    write_curve(curve, cfg,
                Json{{"mp", Json{{"v", v}, {"atom_at_zero", mp_atom(cfg.ensemble.alpha)}}}});
    return 0;
}

int run_trace(const RunConfig& cfg) {
    const CovarianceFactors factors =
        build_covariance_factors(cfg.ensemble, cfg.sampling.n, cfg.sampling.base_seed);
    const Matrix m = factors.m.dense();
    const Matrix theta = factors.theta.dense();

    LambdaGrid grid = cfg.grid.make();
    require_valid(grid);
    std::vector<SpectralPoint> order = grid.points;
    std::sort(order.begin(), order.end(),
              [](const SpectralPoint& a, const SpectralPoint& b) {
                  return a.lambda > b.lambda;
              });
    DensityCurve curve;
    curve.method = MethodTag::trace_form;
    curve.ensemble = cfg.ensemble;
    curve.epsilon = cfg.grid.epsilon;
    std::optional<Complex> warm;
    for (const auto& pt : order) {
        CurveEntry entry;
        entry.lambda = pt.lambda;
        try {
            const SolveResult res = trace_form_resolvent(m, theta, pt, cfg.solver, warm);
            entry.chi_w = res.params.chi_w;
            entry.iterations = res.iterations;
            entry.converged = res.converged;
            if (res.converged) entry.rho = density_from_chi(res.params);
            if (cfg.solver.warm_start) warm = res.params.chi_t;
        } catch (const SingularShift&) {
            entry.converged = false;
        } catch (const SingularDenominator&) {
            entry.converged = false;
        } catch (const NonFiniteIterate&) {
            entry.converged = false;
        }
        curve.entries.push_back(entry);
    }
    curve.sort_ascending();
    write_curve(curve, cfg, Json{{"n", cfg.sampling.n}});
    return convergence_exit_code(curve, cfg.max_failure_fraction);
}

int run_moments(const RunConfig& cfg) {
    if (cfg.ensemble.structure != CovarianceCase::row_variance)
        throw ConfigError("moments: closed forms cover case 1 (row variances) only");
    const InverseMoments im = inverse_moments_case1(cfg.ensemble.law_s, cfg.ensemble.alpha);
    const PortfolioQuantities pq =
        portfolio_quantities(cfg.ensemble.law_s, cfg.ensemble.alpha);
    const Json doc{{"alpha", cfg.ensemble.alpha},
                   {"law_s", law_to_json(cfg.ensemble.law_s)},
                   {"inverse_lambda_mean", im.m1},
                   {"inverse_lambda_sq_mean", im.m2},
                   {"epsilon_min", pq.epsilon_min},
                   {"q_w", pq.q_w},
                   {"version", kVersion}};
    if (cfg.output.path.empty()) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::ofstream os(cfg.output.path);
        if (!os) throw IoError("cannot open for writing: " + cfg.output.path);
        os << doc.dump(2) << "\n";
    }
    return 0;
}

int run_compare(const RunConfig& cfg) {
    const LambdaGrid grid = cfg.grid.make();
    std::vector<DensityCurve> curves;
    std::vector<std::string> labels;

    DensityCurve replica = replica_density_curve(cfg.ensemble, grid, cfg.solver);
    replica.ensemble = cfg.ensemble;
    curves.push_back(replica);
    labels.emplace_back("replica");

    curves.push_back(mp_density_curve(cfg.ensemble.alpha, cfg.ensemble.mean_variance(), grid));
    labels.emplace_back("mp");

    if (cfg.sampling.n_samples >= 1) {
        RunConfig bp_cfg = cfg;
        if (bp_cfg.grid.epsilon < 1e-3) bp_cfg.grid.epsilon = 1e-3;
        LambdaGrid bp_grid = bp_cfg.grid.make();
        curves.push_back(bp_average_curve(bp_cfg, bp_grid));
        labels.emplace_back("bp");

        const Histogram hist =
            empirical_density(cfg.ensemble, cfg.sampling.n, cfg.sampling.n_samples,
                              cfg.sampling.base_seed, histogram_edges(cfg));
        curves.push_back(histogram_to_curve(hist, cfg.ensemble));
        labels.emplace_back("exact");
    }

    const CompareReport report = compare(curves, grid);
    Json doc = report_to_json(report, labels);
    doc["config"] = config_to_json(cfg);

    // closed-form moment cross-checks, available off the replica curve
    Json checks = Json::object();
    try {
        checks["mass"] = curve_mass(replica);
        checks["first_moment"] = trapezoid_integrate(replica, [](double l) { return l; });
        checks["first_moment_identity"] = cfg.ensemble.alpha *
                                          cfg.ensemble.law_s.mean() *
                                          cfg.ensemble.law_t.mean();
        if (cfg.ensemble.structure == CovarianceCase::row_variance &&
            cfg.ensemble.alpha > 1.0) {
            const InverseMoments im =
                inverse_moments_case1(cfg.ensemble.law_s, cfg.ensemble.alpha);
            checks["inverse_lambda_mean_closed"] = im.m1;
            checks["inverse_lambda_sq_mean_closed"] = im.m2;
            checks["inverse_lambda_mean_curve"] =
                trapezoid_integrate(replica, [](double l) { return 1.0 / l; });
            checks["inverse_lambda_sq_mean_curve"] =
                trapezoid_integrate(replica, [](double l) { return 1.0 / (l * l); });
        }
    } catch (const InsufficientGrid&) {
    }
    doc["moment_checks"] = checks;

    if (cfg.output.path.empty()) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::ofstream os(cfg.output.path);
        if (!os) throw IoError("cannot open for writing: " + cfg.output.path);
        os << doc.dump(2) << "\n";
    }
    for (std::size_t i = 0; i < curves.size(); ++i)
        if (convergence_exit_code(curves[i], cfg.max_failure_fraction) != 0) return 3;
    return 0;
}

int dispatch(Command command, const CliOverrides& cli) {
    RunConfig cfg = parse_config_file(cli.config_path);
    if (cfg.command_set && cfg.command != command)
        throw ConfigError("config.command disagrees with the chosen subcommand");
    cfg.command = command;
    apply_overrides(cfg, cli);
    resolve_defaults(cfg);
    std::cerr << "effective config: " << config_to_json(cfg).dump() << "\n";
    switch (command) {
        case Command::replica: return run_replica(cfg);
        case Command::bp: return run_bp(cfg);
        case Command::exact: return run_exact(cfg);
        case Command::mp: return run_mp(cfg);
        case Command::trace: return run_trace(cfg);
        case Command::moments: return run_moments(cfg);
        case Command::compare: return run_compare(cfg);
    }
    throw ConfigError("unknown command");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wishart spectral density toolkit"};
    app.set_version_flag("--version", std::string("wspec ") + wspec::kVersion);
    app.require_subcommand(1);

    CliOverrides cli;
    std::vector<std::pair<CLI::App*, wspec::Command>> commands;
    for (auto [name, cmd, help] :
         {std::tuple<const char*, wspec::Command, const char*>{
              "replica", wspec::Command::replica, "saddle-point density curve"},
          {"bp", wspec::Command::bp, "message-passing density on sampled matrices"},
          {"exact", wspec::Command::exact, "dense-eigensolve histogram"},
          {"mp", wspec::Command::mp, "closed-form MP law"},
          {"trace", wspec::Command::trace, "matrix-trace resolvent recursion"},
          {"moments", wspec::Command::moments, "closed-form moment identities"},
          {"compare", wspec::Command::compare, "multi-engine agreement report"}}) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", cli.config_path, "JSON run configuration")->required();
        sub->add_option("--out", cli.out, "output path (default: stdout)");
        sub->add_option("--format", cli.format, "csv or json");
        sub->add_option("--seed", cli.seed, "base seed override");
        sub->add_option("--epsilon", cli.epsilon, "resolvent regularizer override");
        sub->add_option("--grid", cli.grid, "lambda grid as min:max:n");
        sub->add_option("--samples", cli.samples, "number of sampled matrices");
        sub->add_option("--n", cli.n, "matrix rows N");
        sub->add_option("--threads", cli.threads, "worker threads for sampling loops");
        commands.emplace_back(sub, cmd);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& [sub, cmd] : commands)
            if (sub->parsed()) return dispatch(cmd, cli);
        throw wspec::ConfigError("no subcommand given");
    } catch (const wspec::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const wspec::IoError& err) {
        std::cerr << "io error: " << err.what() << "\n";
        return 4;
    } catch (const wspec::DomainError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "numerical failure: " << err.what() << "\n";
        return 3;
    }
}
