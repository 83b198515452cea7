#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fockctl/baselines.hpp"
#include "fockctl/env.hpp"
#include "fockctl/ppo.hpp"

namespace fockctl {

struct BaselineConfig {
    std::string strategy = "strong";  // "strong" | "greedy"
    int runs = 5000;
    int cutoff = 70;
    int max_iters = 50;
    GreedyConfig greedy{};
};

struct SweepAxis {
    std::string path;  // dotted config path, e.g. "channels.gamma_meas_T"
    std::vector<double> values;
};

struct SweepSpec {
    std::vector<SweepAxis> axes;
    std::vector<std::uint64_t> seeds{0};
    int n_traj = 50;
    bool greedy = false;  // also run the greedy baseline per cell
};

/// Everything needed to reproduce a run. Times are dimensionless with
/// T_max = 1: the config stores the products gamma_meas * T_max and
/// beta_max * T_max, and dt = 1 / n_max.
struct RunConfig {
    std::string run_id = "run";
    std::uint64_t seed = 0;
    std::string out_dir;
    EnvConfig env;
    PpoConfig ppo;
    BaselineConfig baseline;
    SweepSpec sweep;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// Parse a config file, apply dotted-path overrides ("a.b.c=value"),
    /// validate. Throws std::invalid_argument naming the offending field.
    static RunConfig load(const std::string& path,
                          const std::vector<std::string>& overrides = {});
    static RunConfig from_json_with_overrides(nlohmann::json j,
                                              const std::vector<std::string>& overrides);

    void validate() const;
    /// FNV-1a hash of the canonical serialized form.
    std::string fingerprint() const;
};

}  // namespace fockctl
