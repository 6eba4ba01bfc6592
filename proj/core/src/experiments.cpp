#include "thinlimit/experiments.hpp"

#include <cmath>
#include <sstream>

#include "thinlimit/report_io.hpp"

namespace thinlimit {

using nlohmann::ordered_json;

namespace {

ordered_json field_snapshot(const ConfigurationField& F, const Matrix& nodes,
                            const Eigen::MatrixXi& elements) {
    ordered_json doc;
    doc["host"] = F.host;
    doc["n"] = F.n;
    ordered_json jn = ordered_json::array();
    for (int i = 0; i < nodes.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < nodes.cols(); ++j) row.push_back(nodes(i, j));
        jn.push_back(row);
    }
    doc["nodes"] = jn;
    ordered_json je = ordered_json::array();
    for (int i = 0; i < elements.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < elements.cols(); ++j) row.push_back(elements(i, j));
        je.push_back(row);
    }
    doc["elements"] = je;
    ordered_json jv = ordered_json::array();
    for (int i = 0; i < F.values.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < F.values.cols(); ++j) row.push_back(F.values(i, j));
        jv.push_back(row);
    }
    doc["values"] = jv;
    doc["fixed"] = F.fixed;
    return doc;
}

void write_iterate_log(const MinimizeResult& res, const std::filesystem::path& path) {
    CsvWriter csv({"iter", "energy", "grad_norm", "step"});
    for (const IterRow& r : res.log)
        csv.add_row(std::vector<double>{static_cast<double>(r.iter), r.energy, r.grad_norm,
                                        r.step});
    csv.write(path);
}

std::string case_tag(CaseMode mode, double h) {
    if (mode == CaseMode::membrane) return "membrane";
    std::ostringstream os;
    os << "bulk_h" << format_double(h);
    return os.str();
}

}  // namespace

CaseResult run_case(const ExperimentConfig& cfg, CaseMode mode, double h,
                    bool write_artifacts, const EnvelopeTable* table) {
    CaseResult out;
    out.mode = mode;
    out.h = h;

    SurfaceMesh smesh = triangulate_chart(cfg.metric.chart_domain, cfg.resolution);

    EnvelopeTable local_table;
    if (mode == CaseMode::membrane && cfg.relaxed && !table) {
        local_table = build_envelope_table(cfg.density, cfg.envelope);
        table = &local_table;
    }

    OptimizerParams opt = cfg.optimizer;
    opt.parallel_restarts = !cfg.reproducible;

    if (mode == CaseMode::membrane) {
        ConfigurationField F0 = apply_boundary_conditions(smesh, cfg.boundary);
        MembraneEnergy smoothed(cfg.metric, cfg.density, smesh, table,
                                cfg.relaxed ? MembraneDensityKind::relaxed_smoothed
                                            : MembraneDensityKind::w0);
        int clamps = 0;
        EnergyFn fn = [&](const ConfigurationField& F, Matrix* g) {
            int c = 0;
            double v = smoothed.value_and_gradient(F, g, &c);
            clamps += c;
            return v;
        };
        auto [F, res] = minimize_energy(fn, F0, opt);
        res.clamp_warnings = clamps;
        out.minimize = res;
        out.field = std::move(F);
        if (cfg.relaxed) {
            MembraneEnergy reporting(cfg.metric, cfg.density, smesh, table,
                                     MembraneDensityKind::relaxed);
            out.reported_energy = reporting.value_and_gradient(out.field, nullptr, nullptr);
        } else {
            out.reported_energy = res.energy;
        }
        if (write_artifacts) {
            auto dir = cfg.output_dir;
            ordered_json doc;
            doc["mode"] = "membrane";
            doc["relaxed"] = cfg.relaxed;
            doc["energy"] = out.minimize.energy;
            doc["reported_energy"] = out.reported_energy;
            doc["grad_norm"] = out.minimize.grad_norm;
            doc["iterations"] = out.minimize.iterations;
            doc["converged"] = out.minimize.converged;
            doc["best_restart"] = out.minimize.best_restart;
            doc["clamp_warnings"] = out.minimize.clamp_warnings;
            doc["wall_time_s"] = out.minimize.wall_time_s;
            doc["seed"] = cfg.seed;
            out.result_path = dir / "membrane_result.json";
            write_json_file(out.result_path, doc);
            write_json_file(dir / "membrane_field.json",
                            field_snapshot(out.field, smesh.nodes, smesh.triangles));
            write_iterate_log(out.minimize, dir / "membrane_iterates.csv");
        }
        return out;
    }

    if (!(h > 0)) throw UsageError("run_case: bulk mode requires h > 0");
    if (h > cfg.metric.z_range)
        throw UsageError("run_case: h exceeds the metric working z-range");
    BulkMesh bmesh = extrude_bulk_mesh(smesh, h, cfg.n_layers);
    ConfigurationField f0 = apply_boundary_conditions(bmesh, cfg.boundary);
    BulkEnergy energy(cfg.metric, cfg.density, bmesh, FrameKind::transported);
    EnergyFn fn = [&](const ConfigurationField& f, Matrix* g) {
        return energy.value_and_gradient(f, g);
    };
    auto [f, res] = minimize_energy(fn, f0, opt);
    out.minimize = res;
    out.field = std::move(f);
    out.reported_energy = res.energy;
    if (write_artifacts) {
        auto dir = cfg.output_dir;
        std::string tag = case_tag(mode, h);
        ordered_json doc;
        doc["mode"] = "bulk";
        doc["h"] = h;
        doc["n_layers"] = cfg.n_layers;
        doc["energy"] = out.minimize.energy;
        doc["grad_norm"] = out.minimize.grad_norm;
        doc["iterations"] = out.minimize.iterations;
        doc["converged"] = out.minimize.converged;
        doc["best_restart"] = out.minimize.best_restart;
        doc["wall_time_s"] = out.minimize.wall_time_s;
        doc["seed"] = cfg.seed;
        out.result_path = dir / (tag + "_result.json");
        write_json_file(out.result_path, doc);
        write_json_file(dir / (tag + "_field.json"),
                        field_snapshot(out.field, bmesh.nodes, bmesh.tets));
        write_iterate_log(out.minimize, dir / (tag + "_iterates.csv"));
    }
    return out;
}

SweepReport run_gamma_sweep(const ExperimentConfig& cfg, bool write_artifacts) {
    if (cfg.h_list.empty()) throw UsageError("run_gamma_sweep: h_list must be nonempty");
    SweepReport report;
    report.h_list = cfg.h_list;

    EnvelopeTable table;
    const EnvelopeTable* table_ptr = nullptr;
    if (cfg.relaxed) {
        table = build_envelope_table(cfg.density, cfg.envelope);
        table_ptr = &table;
    }

    // Membrane reference uses the relaxed functional; bulk runs use the
    // unrelaxed density. The limit resolves exactly this asymmetry.
    CaseResult membrane = run_case(cfg, CaseMode::membrane, 0, write_artifacts, table_ptr);
    report.min_I = membrane.reported_energy;

    SurfaceMesh smesh = triangulate_chart(cfg.metric.chart_domain, cfg.resolution);

    for (double h : cfg.h_list) {
        SweepRow row;
        row.h = h;
        try {
            CaseResult bulk = run_case(cfg, CaseMode::bulk, h, write_artifacts, nullptr);
            row.inf_Ih = bulk.minimize.energy;
            row.grad_norm = bulk.minimize.grad_norm;
            row.wall_time_s = bulk.minimize.wall_time_s;
            row.gap = std::abs(bulk.minimize.energy - report.min_I);
            BulkMesh bmesh = extrude_bulk_mesh(smesh, h, cfg.n_layers);
            row.lp_distance =
                lp_distance(cfg.metric, bmesh, bulk.field, membrane.field, cfg.lp_exponent);
        } catch (const std::exception&) {
            report.complete = false;
            row.inf_Ih = row.grad_norm = row.lp_distance = row.gap = row.wall_time_s =
                std::numeric_limits<double>::quiet_NaN();
        }
        report.rows.push_back(row);
    }

    std::vector<double> hs, gaps;
    for (const SweepRow& r : report.rows)
        if (std::isfinite(r.gap)) {
            hs.push_back(r.h);
            gaps.push_back(r.gap);
        }
    report.fitted_order = (hs.size() >= 2) ? fit_observed_order(hs, gaps) : 0.0;

    if (write_artifacts) {
        CsvWriter csv({"h", "inf_Ih", "grad_norm", "lp_distance", "gap", "wall_time_s"});
        for (const SweepRow& r : report.rows)
            csv.add_row(std::vector<double>{r.h, r.inf_Ih, r.grad_norm, r.lp_distance, r.gap,
                                            r.wall_time_s});
        report.csv_path = cfg.output_dir / "sweep.csv";
        csv.write(report.csv_path);

        ordered_json summary;
        summary["schema"] = 1;
        summary["min_I"] = report.min_I;
        summary["fitted_order"] = report.fitted_order;
        summary["complete"] = report.complete;
        summary["h_list"] = report.h_list;
        summary["h_list_note"] =
            "h sequence is a configuration choice; defaults {0.4, 0.2, 0.1, 0.05}";
        summary["n_layers"] = cfg.n_layers;
        summary["resolution"] = cfg.resolution;
        summary["seed"] = cfg.seed;
        report.summary_path = cfg.output_dir / "sweep_summary.json";
        write_json_file(report.summary_path, summary);
    }
    return report;
}

void write_envelope_csv(const EnvelopeTable& T, const std::filesystem::path& out_path) {
    if (T.mode != EnvelopeTable::Mode::singular_value)
        throw UsageError("write_envelope_csv: singular_value tables only");
    CsvWriter csv({"lambda1", "lambda2", "qw0", "w0"});
    const int rows = static_cast<int>(T.values.rows());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < T.grid_n; ++j) {
            double l1 = T.node_lambda(T.m_dim == 2 ? i : j);
            double l2 = T.m_dim == 2 ? T.node_lambda(j) : 0.0;
            csv.add_row(std::vector<double>{l1, l2, T.values(i, j), T.w0_values(i, j)});
        }
    csv.write(out_path);

    ordered_json meta;
    meta["density_id"] = T.density_id;
    meta["mode"] = "singular_value";
    meta["grid_n"] = T.grid_n;
    meta["lambda_max"] = T.lambda_max;
    meta["params"] = {{"depth", T.params.depth},
                      {"n_directions", T.params.n_directions},
                      {"n_t", T.params.n_t},
                      {"n_s", T.params.n_s},
                      {"s_min", T.params.s_min},
                      {"seed", T.params.seed}};
    std::filesystem::path meta_path = out_path;
    meta_path += ".meta.json";
    write_json_file(meta_path, meta);
}

////////////////////////////////////////////////////////////////////////////
// Verification suites.
////////////////////////////////////////////////////////////////////////////

namespace {

VerifyOutcome verify_geometry(const ExperimentConfig& cfg) {
    VerifyOutcome out;
    out.suite = "geometry";
    ordered_json& d = out.details;
    bool ok = true;

    // Flat metric: every deviation vanishes to quadrature tolerance.
    MetricField flat = MetricField::flat(2);
    GeometryDiagnosticsReport fr = geometry_diagnostics(flat, {0.2, 0.1}, {});
    double flat_worst = 0;
    for (const auto& r : fr.rows)
        flat_worst = std::max({flat_worst, r.frame_deviation, r.metric_deviation,
                               r.volume_deviation, r.rescale_error});
    d["flat_worst_deviation"] = flat_worst;
    ok = ok && flat_worst < 1e-10;

    // Cap metric: first-order (or better) convergence of all four quantities.
    MetricField cap = MetricField::spherical_cap(2.0);
    GeometryDiagnosticsReport cr = geometry_diagnostics(cap, {0.2, 0.1, 0.05}, {});
    d["cap_order_frame"] = cr.order_frame;
    d["cap_order_metric"] = cr.order_metric;
    d["cap_order_volume"] = cr.order_volume;
    d["cap_order_rescale"] = cr.order_rescale;
    ok = ok && cr.order_frame >= 0.9 && cr.order_metric >= 0.9 && cr.order_volume >= 0.9 &&
         cr.order_rescale >= 0.9;

    // Transport isometry and Christoffel symmetry at sampled points.
    double worst_gram = 0, worst_sym = 0;
    Rng rng(cfg.seed + 17);
    std::uniform_real_distribution<double> ud(0.05, 0.95);
    for (int s = 0; s < 20; ++s) {
        Vector x(2);
        x << ud(rng), ud(rng);
        double z = (ud(rng) - 0.5) * 0.4;
        AdaptedFrame f = transport_normal(cap, x, z);
        worst_gram = std::max(
            worst_gram,
            (frame_gram(cap, f) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff());
        auto gamma = christoffel(cap, x, z);
        for (const Matrix& G : gamma)
            worst_sym = std::max(worst_sym, (G - G.transpose()).cwiseAbs().maxCoeff());
    }
    d["transport_gram_deviation"] = worst_gram;
    d["christoffel_asymmetry"] = worst_sym;
    ok = ok && worst_gram < 1e-10 && worst_sym == 0.0;

    out.pass = ok;
    return out;
}

VerifyOutcome verify_density(const ExperimentConfig& cfg) {
    VerifyOutcome out;
    out.suite = "density";
    ordered_json& d = out.details;

    DensitySpec D = cfg.density;
    DensityConditionsReport rep = verify_density_conditions(D, 10000, cfg.seed);
    d["conditions_pass"] = rep.pass;
    d["C_growth_emp"] = rep.C_growth_emp;
    d["alpha_emp"] = rep.alpha_emp;
    d["C_lipschitz_emp"] = rep.C_lipschitz_emp;
    d["C0_growth_emp"] = rep.C0_growth_emp;
    d["alpha0_emp"] = rep.alpha0_emp;
    if (!rep.witness.empty()) d["witness"] = rep.witness;

    // W|_S(Q) >= W0(tangential block of Q) on random full matrices.
    Rng rng(cfg.seed + 5);
    Vector x0 = Vector::Constant(2, 0.5);
    double worst_gap = 0;
    for (int i = 0; i < 2000; ++i) {
        Matrix Q = random_matrix_in_ball(rng, D.n_dim, D.n_dim, 5.0);
        double w = eval_W_on_S(D, x0, Q);
        double w0 = (D.kind == DensityKind::dist2_so)
                        ? w0_closed_form(Q.leftCols(D.m_dim))
                        : fiber_minimize_W0(D, x0, Q.leftCols(D.m_dim)).value;
        worst_gap = std::max(worst_gap, w0 - w);
    }
    d["ww0_worst_violation"] = worst_gap;
    bool ww0_ok = worst_gap <= 1e-12;

    out.pass = rep.pass && ww0_ok;
    return out;
}

VerifyOutcome verify_envelope(const ExperimentConfig& cfg) {
    VerifyOutcome out;
    out.suite = "envelope";
    ordered_json& d = out.details;
    bool ok = true;

    std::vector<EnvelopeTable> tables = build_envelope_table_depths(cfg.density, cfg.envelope);
    const EnvelopeTable& T = tables.back();

    double lower_violation = (T.values - T.w0_values).maxCoeff();
    d["lower_bound_excess"] = lower_violation;
    ok = ok && lower_violation <= 1e-9;

    double min_value = T.values.minCoeff();
    d["min_value"] = min_value;
    ok = ok && min_value >= -1e-9;

    double asym = (T.values - T.values.transpose()).cwiseAbs().maxCoeff();
    d["swap_asymmetry"] = asym;
    ok = ok && asym == 0.0;

    if (tables.size() >= 2) {
        const EnvelopeTable& prev = tables[tables.size() - 2];
        double depth_violation = (T.values - prev.values).maxCoeff();
        d["depth_monotonicity_excess"] = depth_violation;
        ok = ok && depth_violation <= 1e-9;
    }

    int short_n = static_cast<int>(1.0 / T.grid_spacing());
    double short_max = T.values.topLeftCorner(short_n + 1, short_n + 1).maxCoeff();
    d["short_region_max"] = short_max;
    ok = ok && short_max <= 1e-3;

    out.pass = ok;
    return out;
}

VerifyOutcome verify_gradient(const ExperimentConfig& cfg) {
    VerifyOutcome out;
    out.suite = "gradient";
    ordered_json& d = out.details;

    ExperimentConfig c = cfg;
    c.resolution = 8;
    c.n_layers = 2;
    SurfaceMesh smesh = triangulate_chart(c.metric.chart_domain, c.resolution);
    BulkMesh bmesh = extrude_bulk_mesh(smesh, 0.2, c.n_layers);

    Rng rng(cfg.seed + 23);
    std::normal_distribution<double> nd(0.0, 0.1);
    auto randomize = [&](ConfigurationField& F) {
        for (int i = 0; i < F.num_nodes(); ++i)
            if (!F.fixed[i])
                for (int j = 0; j < F.n; ++j) F.values(i, j) += nd(rng);
    };

    ConfigurationField f0 = apply_boundary_conditions(bmesh, c.boundary);
    randomize(f0);
    BulkEnergy bulk(c.metric, c.density, bmesh, FrameKind::transported);
    double bulk_err = gradient_check(
        [&](const ConfigurationField& f, Matrix* g) { return bulk.value_and_gradient(f, g); },
        f0, 5, cfg.seed + 31);
    d["bulk_max_rel_error"] = bulk_err;

    ConfigurationField F0 = apply_boundary_conditions(smesh, c.boundary);
    randomize(F0);
    MembraneEnergy memw0(c.metric, c.density, smesh, nullptr, MembraneDensityKind::w0);
    double mem_err = gradient_check(
        [&](const ConfigurationField& F, Matrix* g) {
            return memw0.value_and_gradient(F, g, nullptr);
        },
        F0, 5, cfg.seed + 37);
    d["membrane_w0_max_rel_error"] = mem_err;

    LaminationParams lp = cfg.envelope;
    lp.grid_n = 61;
    lp.n_directions = 24;
    EnvelopeTable table = build_envelope_table(c.density, lp);
    MembraneEnergy memrel(c.metric, c.density, smesh, &table,
                          MembraneDensityKind::relaxed_smoothed);
    double rel_err = gradient_check(
        [&](const ConfigurationField& F, Matrix* g) {
            return memrel.value_and_gradient(F, g, nullptr);
        },
        F0, 5, cfg.seed + 41);
    d["membrane_relaxed_max_rel_error"] = rel_err;

    out.pass = bulk_err < 1e-5 && mem_err < 1e-5 && rel_err < 1e-3;
    return out;
}

}  // namespace

VerifyOutcome run_verify(const std::string& suite, const ExperimentConfig& cfg) {
    if (suite == "geometry") return verify_geometry(cfg);
    if (suite == "density") return verify_density(cfg);
    if (suite == "envelope") return verify_envelope(cfg);
    if (suite == "gradient") return verify_gradient(cfg);
    throw UsageError("run_verify: unknown suite '" + suite +
                     "' (expected geometry|density|envelope|gradient)");
}

}  // namespace thinlimit
