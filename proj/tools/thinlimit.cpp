// thinlimit: membrane-limit energies on shrinking tubular neighborhoods.
//
//   thinlimit envelope --config cfg.json --out envelope.csv
//   thinlimit minimize --config cfg.json --mode membrane|bulk [--h 0.2]
//   thinlimit sweep    --config cfg.json [--out dir]
//   thinlimit verify   geometry|density|envelope|gradient [--config cfg.json]
//
// Exit codes: 0 pass, 2 config error, 3 numeric error, 4 verification failure.

#include <iostream>

#include "CLI11.hpp"

#include "thinlimit/experiments.hpp"
#include "thinlimit/report_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVerify = 4;

thinlimit::ExperimentConfig load_config(const std::string& path, long long seed_override,
                                        bool reproducible) {
    thinlimit::ExperimentConfig cfg = path.empty()
                                          ? thinlimit::ExperimentConfig::defaults()
                                          : thinlimit::ExperimentConfig::from_file(path);
    if (seed_override >= 0) {
        cfg.seed = static_cast<uint64_t>(seed_override);
        cfg.optimizer.seed = cfg.seed;
    }
    if (reproducible) cfg.reproducible = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thinlimit: membrane limit of non-Euclidean elasticity"};
    app.require_subcommand(1);

    std::string config_path, out_path, mode = "membrane", suite;
    double h = 0.0;
    long long seed = -1;
    bool reproducible = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON, schema 1)");
        cmd->add_option("--seed", seed, "override the config seed");
        cmd->add_flag("--reproducible", reproducible,
                      "serial deterministic reductions and restarts");
    };

    CLI::App* envelope = app.add_subcommand("envelope", "build the relaxed-density table");
    add_common(envelope);
    envelope->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* minimize = app.add_subcommand("minimize", "minimize one energy case");
    add_common(minimize);
    minimize->add_option("--mode", mode, "membrane or bulk")
        ->check(CLI::IsMember({"membrane", "bulk"}));
    minimize->add_option("--h", h, "half-thickness for bulk mode");
    minimize->add_option("--out", out_path, "output directory override");

    CLI::App* sweep = app.add_subcommand("sweep", "run the h -> 0 convergence sweep");
    add_common(sweep);
    sweep->add_option("--out", out_path, "output directory override");

    CLI::App* verify = app.add_subcommand("verify", "run a module invariant battery");
    add_common(verify);
    verify->add_option("suite", suite, "geometry|density|envelope|gradient")->required();
    verify->add_option("--out", out_path, "verdict JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        thinlimit::ExperimentConfig cfg = load_config(config_path, seed, reproducible);
        if (!out_path.empty() && (minimize->parsed() || sweep->parsed()))
            cfg.output_dir = out_path;

        if (envelope->parsed()) {
            thinlimit::EnvelopeTable table =
                thinlimit::build_envelope_table(cfg.density, cfg.envelope);
            thinlimit::write_envelope_csv(table, out_path);
            std::cout << "envelope table written to " << out_path << "\n";
            return kExitOk;
        }

        if (minimize->parsed()) {
            thinlimit::CaseMode cm = (mode == "bulk") ? thinlimit::CaseMode::bulk
                                                      : thinlimit::CaseMode::membrane;
            if (cm == thinlimit::CaseMode::bulk && !(h > 0)) {
                std::cerr << "minimize: bulk mode requires --h > 0\n";
                return kExitConfig;
            }
            thinlimit::CaseResult res = thinlimit::run_case(cfg, cm, h);
            std::cout << mode << " energy " << thinlimit::format_double(res.reported_energy)
                      << " grad_norm " << thinlimit::format_double(res.minimize.grad_norm)
                      << " iters " << res.minimize.iterations
                      << (res.minimize.converged ? "" : " (not converged)") << "\n"
                      << "results in " << cfg.output_dir.string() << "\n";
            return kExitOk;
        }

        if (sweep->parsed()) {
            thinlimit::SweepReport rep = thinlimit::run_gamma_sweep(cfg);
            std::cout << "min_I " << thinlimit::format_double(rep.min_I) << "\n";
            for (const auto& r : rep.rows)
                std::cout << "h " << thinlimit::format_double(r.h) << "  inf_Ih "
                          << thinlimit::format_double(r.inf_Ih) << "  gap "
                          << thinlimit::format_double(r.gap) << "  lp "
                          << thinlimit::format_double(r.lp_distance) << "\n";
            std::cout << "report: " << rep.csv_path.string() << "\n";
            if (!rep.complete) {
                std::cerr << "sweep incomplete: at least one case failed\n";
                return kExitNumeric;
            }
            return kExitOk;
        }

        if (verify->parsed()) {
            thinlimit::VerifyOutcome out = thinlimit::run_verify(suite, cfg);
            nlohmann::ordered_json doc;
            doc["suite"] = out.suite;
            doc["pass"] = out.pass;
            doc["details"] = out.details;
            if (!out_path.empty())
                thinlimit::write_json_file(out_path, doc);
            std::cout << doc.dump(2) << "\n";
            return out.pass ? kExitOk : kExitVerify;
        }
    } catch (const thinlimit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const thinlimit::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const thinlimit::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const thinlimit::ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const thinlimit::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
