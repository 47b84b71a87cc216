#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wp/dist.hpp"
#include "wp/rule.hpp"
#include "wp/tree.hpp"

namespace wp {

// Parse a q0 spec: "delta:SYM", "uniform", or "SYM=w,SYM=w,...".
Dist parse_q0(const std::string& spec, const Alphabet& alphabet);

// Story rendering for CSV cells (symbol names joined by '-').
std::string story_to_string(const Story& s, const Alphabet& alphabet);
std::string story_code_to_string(std::uint64_t code, int length, const Alphabet& alphabet);

struct ExperimentConfig {
    std::string name;
    std::string rule_path;
    std::string q0_spec = "delta:1";
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    double d = 4.0;
    double d_min = 0.0, d_max = 0.0, d_step = 0.05;
    double tol = 1e-12;
    double scan_tol = 1e-3;
    double eta = 0.1;
    double delta = 0.01;
    double delta0 = 1e-4;
    int t0 = 3;
    int t_max = 1000;
    int max_iter = 100000;
    std::int64_t trials = 10000;
    std::vector<std::int64_t> n_list;
    int seeds = 10;
    int threads = 1;
};

// Named experiments: convergence, core-threshold, subcriticality,
// model-compare, match-prob, cascades. Writes CSV outputs plus a manifest
// (config echo, seed, version, per-file content hash) into out_dir.
// Throws validation_error for unknown names or missing parameters.
void run_experiment(const ExperimentConfig& config);

}  // namespace wp
