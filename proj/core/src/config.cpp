#include "thinlimit/config.hpp"

#include <fstream>

namespace thinlimit {

using nlohmann::ordered_json;

namespace {

const ordered_json* find(const ordered_json& doc, const std::string& key) {
    auto it = doc.find(key);
    return it == doc.end() ? nullptr : &*it;
}

double get_number(const ordered_json& doc, const std::string& path, const std::string& key,
                  double fallback, bool required = false) {
    const ordered_json* v = find(doc, key);
    if (!v) {
        if (required) throw ConfigError(path + "." + key, "missing required field");
        return fallback;
    }
    if (!v->is_number()) throw ConfigError(path + "." + key, "expected a number");
    return v->get<double>();
}

int get_int(const ordered_json& doc, const std::string& path, const std::string& key,
            int fallback) {
    const ordered_json* v = find(doc, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
    return v->get<int>();
}

bool get_bool(const ordered_json& doc, const std::string& path, const std::string& key,
              bool fallback) {
    const ordered_json* v = find(doc, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(path + "." + key, "expected a boolean");
    return v->get<bool>();
}

std::string get_string(const ordered_json& doc, const std::string& path,
                       const std::string& key, const std::string& fallback) {
    const ordered_json* v = find(doc, key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(path + "." + key, "expected a string");
    return v->get<std::string>();
}

Vector get_vector(const ordered_json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    Vector out(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(path, "expected an array of numbers");
        out[i] = v[i].get<double>();
    }
    return out;
}

Matrix get_matrix(const ordered_json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected an array of rows");
    size_t cols = 0;
    Matrix out;
    for (size_t i = 0; i < v.size(); ++i) {
        Vector row = get_vector(v[i], path);
        if (i == 0) {
            cols = row.size();
            out.resize(v.size(), cols);
        } else if (static_cast<size_t>(row.size()) != cols) {
            throw ConfigError(path, "ragged matrix rows");
        }
        out.row(i) = row.transpose();
    }
    return out;
}

MetricField parse_metric(const ordered_json* m, const Rect& domain) {
    if (!m) return MetricField::flat(2, domain);
    std::string kind = get_string(*m, "metric", "kind", "flat");
    int m_dim = get_int(*m, "metric", "m_dim", 2);
    if (m_dim < 1 || m_dim > 2) throw ConfigError("metric.m_dim", "must be 1 or 2");
    MetricField M;
    if (kind == "flat") {
        M = MetricField::flat(m_dim, domain);
    } else if (kind == "spherical_cap") {
        M = MetricField::spherical_cap(get_number(*m, "metric", "radius", 2.0), m_dim, domain);
    } else if (kind == "exponential_growth") {
        M = MetricField::exponential_growth(get_number(*m, "metric", "rate", 0.5), m_dim,
                                            domain);
    } else if (kind == "custom_poly") {
        Vector cx = Vector::Zero(m_dim);
        if (const ordered_json* v = find(*m, "cx")) cx = get_vector(*v, "metric.cx");
        if (cx.size() != m_dim) throw ConfigError("metric.cx", "length must equal m_dim");
        M = MetricField::custom_poly(get_number(*m, "metric", "c0", 1.0), cx,
                                     get_number(*m, "metric", "cz", 0.0), m_dim, domain);
    } else {
        throw ConfigError("metric.kind", "unknown metric kind '" + kind + "'");
    }
    double zr = get_number(*m, "metric", "z_range", M.z_range);
    if (!(zr > 0)) throw ConfigError("metric.z_range", "must be positive");
    M.z_range = zr;
    return M;
}

DensitySpec parse_density(const ordered_json* d, int m_dim) {
    DensitySpec D = DensitySpec::dist2_so_proto(m_dim);
    if (!d) return D;
    std::string kind = get_string(*d, "density", "kind", "dist2_so");
    if (kind == "custom")
        throw ConfigError("density.kind",
                          "custom densities are supplied programmatically through the "
                          "library API, not from config");
    if (kind != "dist2_so") throw ConfigError("density.kind", "unknown kind '" + kind + "'");
    D.p = get_number(*d, "density", "p", 2.0);
    D.alpha = get_number(*d, "density", "alpha", 0.5);
    D.beta = get_number(*d, "density", "beta", 3.0);
    D.C = get_number(*d, "density", "C", 2.0);
    D.frame_indifferent = get_bool(*d, "density", "frame_indifferent", true);
    try {
        D.validate();
    } catch (const UsageError& e) {
        throw ConfigError("density", e.what());
    }
    return D;
}

BoundaryData parse_boundary(const ordered_json* b, int n_dim, int m_dim,
                            std::string& desc) {
    if (!b) {
        desc = "flat_stretch";
        return boundary_preset(desc);
    }
    if (const ordered_json* preset = find(*b, "preset")) {
        if (!preset->is_string()) throw ConfigError("boundary.preset", "expected a string");
        desc = preset->get<std::string>();
        return boundary_preset(desc);
    }
    const ordered_json* A = find(*b, "A");
    if (!A) throw ConfigError("boundary.A", "missing affine matrix (or use a preset)");
    Matrix Am = get_matrix(*A, "boundary.A");
    if (Am.rows() != n_dim || Am.cols() != m_dim)
        throw ConfigError("boundary.A", "must be n x m");
    Vector offset = Vector::Zero(n_dim);
    if (const ordered_json* o = find(*b, "offset")) {
        offset = get_vector(*o, "boundary.offset");
        if (offset.size() != n_dim) throw ConfigError("boundary.offset", "must have length n");
    }
    Vector slope = Vector::Zero(n_dim);
    slope[n_dim - 1] = 1.0;
    if (const ordered_json* s = find(*b, "b")) {
        slope = get_vector(*s, "boundary.b");
        if (slope.size() != n_dim) throw ConfigError("boundary.b", "must have length n");
    }
    desc = "affine";
    return BoundaryData::affine_data(Am, offset, slope);
}

}  // namespace

BoundaryData boundary_preset(const std::string& name) {
    Matrix A(3, 2);
    Vector offset = Vector::Zero(3);
    Vector b(3);
    if (name == "flat_stretch") {
        // Tangential 1.2x stretch with an incompatible normal slope; the
        // bulk pays a boundary layer that vanishes linearly in h.
        A << 1.2, 0, 0, 1.0, 0, 0;
        b << 0, 0, 1.1;
    } else if (name == "flat_short") {
        A << 0.8, 0, 0, 0.9, 0, 0;
        b << 0, 0, 1.0;
    } else if (name == "flat_compatible") {
        A << 1.0, 0, 0, 1.0, 0, 0;
        b << 0, 0, 1.0;
    } else {
        throw ConfigError("boundary.preset", "unknown preset '" + name + "'");
    }
    return BoundaryData::affine_data(A, offset, b);
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.boundary = boundary_preset(cfg.boundary_desc);
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json(const ordered_json& doc) {
    if (!doc.is_object()) throw ConfigError("(root)", "config must be a JSON object");
    const ordered_json* schema = find(doc, "schema");
    if (!schema || !schema->is_number_integer() || schema->get<int>() != 1)
        throw ConfigError("schema", "missing or unsupported schema version (expected 1)");

    ExperimentConfig cfg;
    cfg.seed = static_cast<uint64_t>(get_number(doc, "", "seed", 1234));

    Rect domain = Rect::unit_square();
    if (const ordered_json* d = find(doc, "domain")) {
        if (const ordered_json* lo = find(*d, "lo")) domain.lo = get_vector(*lo, "domain.lo");
        if (const ordered_json* hi = find(*d, "hi")) domain.hi = get_vector(*hi, "domain.hi");
        if (domain.lo.size() != domain.hi.size())
            throw ConfigError("domain", "lo/hi dimension mismatch");
        for (int i = 0; i < domain.lo.size(); ++i)
            if (!(domain.hi[i] > domain.lo[i]))
                throw ConfigError("domain", "hi must exceed lo per axis");
    }

    cfg.metric = parse_metric(find(doc, "metric"), domain);
    cfg.density = parse_density(find(doc, "density"), cfg.metric.m_dim);
    cfg.boundary =
        parse_boundary(find(doc, "boundary"), cfg.density.n_dim, cfg.density.m_dim,
                       cfg.boundary_desc);

    if (const ordered_json* m = find(doc, "mesh")) {
        cfg.resolution = get_int(*m, "mesh", "resolution", cfg.resolution);
        cfg.n_layers = get_int(*m, "mesh", "n_layers", cfg.n_layers);
        if (cfg.resolution < 2) throw ConfigError("mesh.resolution", "must be >= 2");
        if (cfg.n_layers < 2 || cfg.n_layers % 2 != 0)
            throw ConfigError("mesh.n_layers", "must be even and >= 2");
    }

    if (const ordered_json* h = find(doc, "h_list")) {
        Vector v = get_vector(*h, "h_list");
        cfg.h_list.assign(v.data(), v.data() + v.size());
        if (cfg.h_list.empty()) throw ConfigError("h_list", "must be nonempty");
        for (size_t i = 0; i + 1 < cfg.h_list.size(); ++i)
            if (!(cfg.h_list[i] > cfg.h_list[i + 1]))
                throw ConfigError("h_list", "must be strictly decreasing");
        if (!(cfg.h_list.back() > 0)) throw ConfigError("h_list", "values must be positive");
        if (cfg.h_list.front() > cfg.metric.z_range)
            throw ConfigError("h_list", "largest h exceeds the metric working z-range");
    }

    if (const ordered_json* e = find(doc, "envelope")) {
        cfg.envelope.depth = get_int(*e, "envelope", "depth", cfg.envelope.depth);
        cfg.envelope.n_directions =
            get_int(*e, "envelope", "n_directions", cfg.envelope.n_directions);
        cfg.envelope.n_t = get_int(*e, "envelope", "n_t", cfg.envelope.n_t);
        cfg.envelope.n_s = get_int(*e, "envelope", "n_s", cfg.envelope.n_s);
        cfg.envelope.lambda_max =
            get_number(*e, "envelope", "lambda_max", cfg.envelope.lambda_max);
        cfg.envelope.grid_n = get_int(*e, "envelope", "grid_n", cfg.envelope.grid_n);
        cfg.envelope.seed =
            static_cast<uint64_t>(get_number(*e, "envelope", "seed", 0));
        try {
            cfg.envelope.validate();
        } catch (const UsageError& err) {
            throw ConfigError("envelope", err.what());
        }
    }

    if (const ordered_json* o = find(doc, "optimizer")) {
        cfg.optimizer.max_iters = get_int(*o, "optimizer", "max_iters", cfg.optimizer.max_iters);
        cfg.optimizer.grad_tol = get_number(*o, "optimizer", "grad_tol", cfg.optimizer.grad_tol);
        cfg.optimizer.memory = get_int(*o, "optimizer", "memory", cfg.optimizer.memory);
        cfg.optimizer.restarts = get_int(*o, "optimizer", "restarts", cfg.optimizer.restarts);
        try {
            cfg.optimizer.validate();
        } catch (const UsageError& err) {
            throw ConfigError("optimizer", err.what());
        }
    }
    cfg.optimizer.seed = cfg.seed;

    cfg.relaxed = get_bool(doc, "", "relaxed", cfg.relaxed);
    cfg.lp_exponent = get_number(doc, "", "lp_exponent", cfg.lp_exponent);
    if (!(cfg.lp_exponent > 1.0)) throw ConfigError("lp_exponent", "must exceed 1");
    cfg.output_dir = get_string(doc, "", "output_dir", cfg.output_dir.string());
    cfg.reproducible = get_bool(doc, "", "reproducible", cfg.reproducible);
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("(file)", "cannot open config file " + path.string());
    ordered_json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ConfigError("(file)", std::string("JSON parse failure: ") + e.what());
    }
    return from_json(doc);
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
    ordered_json doc;
    doc["schema"] = schema;
    doc["seed"] = seed;
    doc["metric"] = {{"kind", metric.kind}, {"m_dim", metric.m_dim},
                     {"z_range", metric.z_range}};
    doc["density"] = {{"kind", density.kind == DensityKind::dist2_so ? "dist2_so" : "custom"},
                      {"p", density.p},
                      {"alpha", density.alpha},
                      {"beta", density.beta},
                      {"C", density.C},
                      {"frame_indifferent", density.frame_indifferent}};
    doc["boundary"] = {{"desc", boundary_desc}};
    doc["mesh"] = {{"resolution", resolution}, {"n_layers", n_layers}};
    doc["h_list"] = h_list;
    doc["envelope"] = {{"depth", envelope.depth},
                       {"n_directions", envelope.n_directions},
                       {"n_t", envelope.n_t},
                       {"n_s", envelope.n_s},
                       {"lambda_max", envelope.lambda_max},
                       {"grid_n", envelope.grid_n},
                       {"seed", envelope.seed}};
    doc["optimizer"] = {{"max_iters", optimizer.max_iters},
                        {"grad_tol", optimizer.grad_tol},
                        {"memory", optimizer.memory},
                        {"restarts", optimizer.restarts}};
    doc["relaxed"] = relaxed;
    doc["lp_exponent"] = lp_exponent;
    doc["output_dir"] = output_dir.string();
    doc["reproducible"] = reproducible;
    return doc;
}

}  // namespace thinlimit
