#pragma once

#include <filesystem>

#include "json.hpp"

#include "thinlimit/density.hpp"
#include "thinlimit/envelope.hpp"
#include "thinlimit/fields.hpp"
#include "thinlimit/optimizer.hpp"

namespace thinlimit {

// Experiment description parsed from a schema-versioned JSON document.
// Validation happens before any run; violations throw ConfigError with the
// offending field path.
struct ExperimentConfig {
    int schema = 1;
    uint64_t seed = 1234;

    MetricField metric = MetricField::flat(2);
    DensitySpec density = DensitySpec::dist2_so_proto(2);
    BoundaryData boundary;
    std::string boundary_desc = "flat_stretch";

    int resolution = 24;
    int n_layers = 4;
    std::vector<double> h_list = {0.4, 0.2, 0.1, 0.05};

    LaminationParams envelope;
    OptimizerParams optimizer;

    bool relaxed = true;
    double lp_exponent = 2.0;
    std::filesystem::path output_dir = "out";
    bool reproducible = false;

    static ExperimentConfig from_json(const nlohmann::ordered_json& doc);
    static ExperimentConfig from_file(const std::filesystem::path& path);
    static ExperimentConfig defaults();

    nlohmann::ordered_json to_json() const;  // round-trippable description
};

// Named boundary presets addressable from config.
BoundaryData boundary_preset(const std::string& name);

}  // namespace thinlimit
