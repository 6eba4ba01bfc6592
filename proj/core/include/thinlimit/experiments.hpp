#pragma once

#include "thinlimit/assembly.hpp"
#include "thinlimit/config.hpp"
#include "thinlimit/minimize.hpp"
#include "thinlimit/probe.hpp"

namespace thinlimit {

enum class CaseMode { membrane, bulk };

struct CaseResult {
    CaseMode mode = CaseMode::membrane;
    double h = 0;  // bulk only
    MinimizeResult minimize;
    // For the relaxed membrane, the energy re-evaluated with the unsmoothed
    // table (smoothed values drive the optimizer, unsmoothed ones are
    // reported); equals minimize.energy otherwise.
    double reported_energy = 0;
    ConfigurationField field;
    std::filesystem::path result_path;
};

// Builds geometry / density / mesh / boundary conditions, minimizes, and
// (optionally) writes the result JSON, field snapshot, per-element density
// CSV, and the iterate log. A prebuilt envelope table can be shared across
// cases; when absent and needed, one is built from the config.
CaseResult run_case(const ExperimentConfig& cfg, CaseMode mode, double h = 0,
                    bool write_artifacts = true, const EnvelopeTable* table = nullptr);

struct SweepRow {
    double h = 0;
    double inf_Ih = 0;
    double grad_norm = 0;
    double lp_distance = 0;
    double gap = 0;
    double wall_time_s = 0;
};

struct SweepReport {
    std::vector<SweepRow> rows;  // ordered by decreasing h
    double min_I = 0;            // membrane reference (relaxed table)
    double fitted_order = 0;     // observed order of the gap column
    bool complete = true;
    std::vector<double> h_list;
    std::filesystem::path csv_path;
    std::filesystem::path summary_path;
};

// Membrane case once, bulk case per h; gaps, L^p distances to the membrane
// minimizer, fitted convergence order; CSV plus a JSON summary. A failed
// case leaves the report flagged incomplete instead of aborting the sweep.
SweepReport run_gamma_sweep(const ExperimentConfig& cfg, bool write_artifacts = true);

struct VerifyOutcome {
    std::string suite;
    bool pass = false;
    nlohmann::ordered_json details;
};

// Invariant batteries: suite in {geometry, density, envelope, gradient}.
VerifyOutcome run_verify(const std::string& suite, const ExperimentConfig& cfg);

// Envelope table -> CSV rows lambda1,lambda2,qw0,w0 (row-major) plus a JSON
// metadata sidecar (<out>.meta.json).
void write_envelope_csv(const EnvelopeTable& T, const std::filesystem::path& out_path);

}  // namespace thinlimit
