// Command-line front end for the warning-propagation toolkit.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wp/cascade.hpp"
#include "wp/change.hpp"
#include "wp/errors.hpp"
#include "wp/experiment.hpp"
#include "wp/graph.hpp"
#include "wp/halfedge.hpp"
#include "wp/parallel.hpp"
#include "wp/version.hpp"

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

struct CommonArgs {
    std::string rule_path;
    std::string q0_spec = "delta:1";
    double d = 4.0;
    std::uint64_t seed = 0;
    int threads = 1;
};

int cmd_run(const CommonArgs& common, std::int64_t n, int t_max, const std::string& stories_out) {
    const wp::UpdateRule rule = wp::UpdateRule::load(common.rule_path);
    const wp::Dist q0 = wp::parse_q0(common.q0_spec, rule.alphabet());
    wp::MessagedGraph g = wp::gen_gnp(n, common.d, common.seed);
    wp::init_messages(g, q0, common.seed);
    const bool want_stories = !stories_out.empty();
    if (want_stories) {
        const wp::StoryGraph sg = wp::wp_run_with_stories(std::move(g), rule, t_max,
                                                          wp::resolve_threads(common.threads));
        std::cout << "round,changes\n";
        for (std::size_t r = 0; r < sg.stats.changes_per_round.size(); ++r)
            std::cout << (r + 1) << ',' << sg.stats.changes_per_round[r] << '\n';
        wp::save_stories(sg, rule.alphabet(), stories_out);
    } else {
        const wp::RunStats stats = wp::wp_run(g, rule, t_max, wp::resolve_threads(common.threads));
        std::cout << "round,changes\n";
        for (std::size_t r = 0; r < stats.changes_per_round.size(); ++r)
            std::cout << (r + 1) << ',' << stats.changes_per_round[r] << '\n';
    }
    return 0;
}

int cmd_fixedpoint(const CommonArgs& common, double tol, int max_iter) {
    const wp::UpdateRule rule = wp::UpdateRule::load(common.rule_path);
    const wp::Dist q0 = wp::parse_q0(common.q0_spec, rule.alphabet());
    const wp::FixedPointReport report = wp::iterate_to_fixed_point(rule, common.d, q0, tol,
                                                                   max_iter);
    std::cout << "converged=" << report.converged << "\n";
    std::cout << "iterations=" << report.iterations << "\n";
    std::cout << "final_step_tv=" << fmt(report.final_step_tv) << "\n";
    for (int j = 0; j < rule.alphabet().size(); ++j)
        std::cout << "limit[" << rule.alphabet().name(j) << "]=" << fmt(report.limit[j]) << "\n";
    const double factor = wp::stability_estimate(rule, common.d, report.limit);
    std::cout << "contraction_factor=" << fmt(factor) << "\n";
    std::cout << "stability=" << (factor < 1.0 ? "stable" : "not-contracting") << "\n";
    return 0;
}

int cmd_threshold(const CommonArgs& common, double d_min, double d_max, double eta, double tol) {
    const wp::UpdateRule rule = wp::UpdateRule::load(common.rule_path);
    const wp::Dist q0 = wp::parse_q0(common.q0_spec, rule.alphabet());
    const wp::ThresholdResult r = wp::threshold_scan(rule, d_min, d_max, q0, tol, eta);
    if (!r.found) {
        std::cout << "threshold=none\n";
        return 0;
    }
    std::cout << "threshold=" << fmt(r.d_star) << "\n";
    std::cout << "bracket=[" << fmt(r.bracket_lo) << "," << fmt(r.bracket_hi) << "]\n";
    std::cout << "transition=" << (r.discontinuous ? "discontinuous" : "continuous") << "\n";
    std::cout << "jump=" << fmt(r.jump) << "\n";
    return 0;
}

int cmd_story(const CommonArgs& common, int t, std::int64_t samples) {
    const wp::UpdateRule rule = wp::UpdateRule::load(common.rule_path);
    const wp::Dist q0 = wp::parse_q0(common.q0_spec, rule.alphabet());
    std::map<std::uint64_t, std::int64_t> histogram;
    for (std::int64_t i = 0; i < samples; ++i) {
        wp::Rng rng(wp::derive_seed(common.seed, wp::stream::story,
                                    static_cast<std::uint64_t>(i)));
        ++histogram[wp::encode_story(wp::sample_story(rule, common.d, q0, t, rng),
                                     rule.alphabet().size())];
    }
    std::cout << "story,count\n";
    for (const auto& [code, count] : histogram)
        std::cout << wp::story_code_to_string(code, t + 1, rule.alphabet()) << ',' << count
                  << '\n';
    return 0;
}

int cmd_subcrit(const CommonArgs& common, std::int64_t trials, double tol,
                const std::string& change_spec, const std::string& matrix_out) {
    const wp::UpdateRule rule = wp::UpdateRule::load(common.rule_path);
    const wp::Dist q0 = wp::parse_q0(common.q0_spec, rule.alphabet());
    const wp::FixedPointReport fp = wp::iterate_to_fixed_point(rule, common.d, q0, tol, 100000);
    const wp::TypedMatrices tm = wp::estimate_transition_matrix(
        rule, common.d, fp.limit, trials, common.seed, wp::resolve_threads(common.threads));
    const wp::SubcriticalityReport report = wp::spectral_radius(tm.full);

    std::cout << "rho=" << fmt(report.rho) << "\n";
    std::cout << "ci=[" << fmt(report.ci_lo) << "," << fmt(report.ci_hi) << "]\n";
    std::cout << "gamma=" << fmt(report.gamma) << "\n";
    const char* verdict = report.verdict == wp::Verdict::subcritical      ? "subcritical"
                          : report.verdict == wp::Verdict::supercritical ? "supercritical"
                                                                         : "critical-band";
    std::cout << "verdict=" << verdict << "\n";
    for (std::size_t i = 0; i < report.alpha.size(); ++i)
        std::cout << "alpha[" << tm.full.type_names[i] << "]=" << fmt(report.alpha[i]) << "\n";

    std::vector<wp::ChangePair> roots = tm.change_pairs;
    if (!change_spec.empty()) {
        const auto comma = change_spec.find(',');
        if (comma == std::string::npos)
            throw wp::validation_error("--change wants OLD,NEW symbol names");
        roots = {wp::ChangePair{
            static_cast<std::uint8_t>(rule.alphabet().index_of(change_spec.substr(0, comma))),
            static_cast<std::uint8_t>(rule.alphabet().index_of(change_spec.substr(comma + 1)))}};
    }
    for (const wp::ChangePair cp : roots) {
        const wp::ChangeTreeStats stats = wp::simulate_change_tree(
            rule, common.d, fp.limit, cp, 50, 100000, trials, common.seed,
            wp::resolve_threads(common.threads));
        std::cout << "extinct_by_50[" << rule.alphabet().name(cp.from) << "->"
                  << rule.alphabet().name(cp.to) << "]=" << fmt(stats.extinct_by_gen.back())
                  << "\n";
    }

    if (!matrix_out.empty()) {
        std::ofstream csv(matrix_out);
        if (!csv) throw wp::input_error("cannot open " + matrix_out);
        csv << "from_type,to_type,mean,stderr\n";
        for (std::size_t parent = 0; parent < tm.full.dim; ++parent)
            for (std::size_t child = 0; child < tm.full.dim; ++child)
                csv << tm.full.type_names[parent] << ',' << tm.full.type_names[child] << ','
                    << fmt(tm.full.at(child, parent)) << ',' << fmt(tm.full.se_at(child, parent))
                    << '\n';
    }
    return 0;
}

int cmd_halfedge(const CommonArgs& common, int t0, std::int64_t n, bool require_match,
                 const std::string& emit_graph) {
    const wp::UpdateRule rule = wp::UpdateRule::load(common.rule_path);
    const wp::Dist q0 = wp::parse_q0(common.q0_spec, rule.alphabet());
    const wp::HalfEdgeEnsemble ens =
        require_match
            ? wp::generate_conditioned_ensemble(rule, common.d, q0, t0, n, common.seed)
            : wp::generate_ensemble(rule, common.d, q0, t0, n, common.seed,
                                    wp::resolve_threads(common.threads));
    const wp::StoryStats stats = wp::story_statistics(ens);

    std::map<std::uint64_t, double> nu;
    bool exact = true;
    try {
        nu = wp::story_distribution_exact(rule, common.d, q0, t0).prob;
    } catch (const wp::feasibility_error&) {
        exact = false;
    }
    std::cout << "in_story,out_story,count,expected\n";
    const double dn = common.d * static_cast<double>(n);
    for (const auto& [key, count] : stats.counts) {
        double expected = 0.0;
        if (exact) {
            const auto a = nu.find(key.first);
            const auto b = nu.find(key.second);
            expected = a != nu.end() && b != nu.end() ? dn * a->second * b->second : 0.0;
        }
        std::cout << wp::story_code_to_string(key.first, t0 + 1, rule.alphabet()) << ','
                  << wp::story_code_to_string(key.second, t0 + 1, rule.alphabet()) << ',' << count
                  << ',' << fmt(expected) << '\n';
    }
    std::cout << "total=" << stats.total << "\n";
    std::cout << "statistics_match=" << wp::statistics_match(stats) << "\n";

    if (!emit_graph.empty()) {
        const wp::MatchedGraph mg = wp::sample_matching(ens, common.seed);
        wp::save_edge_list(mg.g, emit_graph);
        std::cout << "emitted_edges=" << mg.g.num_edges() << "\n";
        std::cout << "wp_consistent=" << wp::verify_wp_consistency(mg, rule) << "\n";
    }
    return 0;
}

int cmd_cascade(const CommonArgs& common, std::int64_t n, int t0, double delta0) {
    const wp::UpdateRule rule = wp::UpdateRule::load(common.rule_path);
    const wp::Dist q0 = wp::parse_q0(common.q0_spec, rule.alphabet());
    const int k = rule.alphabet().size();

    const wp::FixedPointReport fp = wp::iterate_to_fixed_point(rule, common.d, q0, 1e-12, 100000);
    std::vector<double> alpha(static_cast<std::size_t>(k) * k, 1.0 / static_cast<double>(k * k));
    try {
        const wp::TypedMatrices tm = wp::estimate_transition_matrix(rule, common.d, fp.limit,
                                                                    20000, common.seed);
        alpha = wp::spectral_radius(tm.aggregated).alpha;
    } catch (const wp::input_error&) {
        // no potential changes: uniform weights
    }

    wp::MessagedGraph g = wp::gen_gnp(n, common.d, common.seed);
    wp::init_messages(g, q0, common.seed);
    const wp::StoryGraph sg =
        wp::wp_run_with_stories(std::move(g), rule, t0 + 1000, wp::resolve_threads(common.threads));
    if (!sg.at_fixed_point()) throw wp::state_error("run did not reach a fixed point");
    const wp::CascadeReport mark = wp::run_marking_on(sg, rule, t0, delta0, alpha);

    std::map<std::int64_t, std::int64_t> histogram;
    for (std::int64_t s : mark.component_sizes) ++histogram[s];
    std::cout << "component_size,count\n";
    for (const auto& [size, count] : histogram) std::cout << size << ',' << count << '\n';
    const char* stop = mark.stop == wp::StopCondition::exhaustion   ? "exhaustion"
                       : mark.stop == wp::StopCondition::expansion ? "expansion"
                                                                   : "explosion";
    std::cout << "stop=" << stop << " marked=" << mark.total_marked
              << " duplicates=" << mark.duplicates << " freaks=" << mark.freaks << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Warning propagation toolkit"};
    app.set_version_flag("--version", wp::kVersion);
    app.require_subcommand(1);

    CommonArgs common;
    std::int64_t n = 1000, samples = 10000, trials = 10000;
    int t_max = 1000, t = 3, t0 = 3, max_iter = 100000;
    double tol = 1e-12, d_min = 0.5, d_max = 8.0, eta = 0.1, delta0 = 1e-4;
    std::string stories_out, matrix_out, change_spec, emit_graph;
    bool require_match = false;

    auto add_common = [&](CLI::App* cmd, bool with_seed) {
        cmd->add_option("--rule", common.rule_path, "rule spec file (JSON)")->required();
        cmd->add_option("--q0", common.q0_spec, "initial message law (delta:SYM|uniform|SYM=w,..)");
        cmd->add_option("--d", common.d, "mean degree");
        cmd->add_option("--threads", common.threads, "worker threads (WP_THREADS overrides)");
        if (with_seed) cmd->add_option("--seed", common.seed, "master seed")->required();
    };

    CLI::App* run = app.add_subcommand("run", "generate G(n,d/n) and run message passing");
    add_common(run, true);
    run->add_option("--n", n, "vertex count")->required();
    run->add_option("--tmax", t_max, "round cap");
    run->add_option("--stories", stories_out, "write per-edge stories to this file");

    CLI::App* fixedpoint = app.add_subcommand("fixedpoint", "iterate the distributional operator");
    add_common(fixedpoint, false);
    fixedpoint->add_option("--tol", tol, "TV tolerance");
    fixedpoint->add_option("--max-iter", max_iter, "iteration cap");

    CLI::App* threshold = app.add_subcommand("threshold", "bisection scan for the d threshold");
    add_common(threshold, false);
    threshold->add_option("--dmin", d_min, "lower end")->required();
    threshold->add_option("--dmax", d_max, "upper end")->required();
    threshold->add_option("--eta", eta, "jump size for the indicator");
    threshold->add_option("--tol", tol, "fixed-point TV tolerance");

    CLI::App* story = app.add_subcommand("story", "sample tree stories, print the histogram");
    add_common(story, true);
    story->add_option("--t", t, "story horizon")->required();
    story->add_option("--samples", samples, "number of stories");

    CLI::App* subcrit = app.add_subcommand("subcrit", "change process transition matrix analysis");
    add_common(subcrit, true);
    subcrit->add_option("--trials", trials, "Monte Carlo trials per type");
    subcrit->add_option("--tol", tol, "fixed-point TV tolerance");
    subcrit->add_option("--change", change_spec, "restrict survival runs to OLD,NEW");
    subcrit->add_option("--matrix", matrix_out, "dump the typed matrix CSV here");

    CLI::App* halfedge = app.add_subcommand("halfedge", "half-edge ensemble statistics");
    add_common(halfedge, true);
    halfedge->add_option("--t0", t0, "story horizon")->required();
    halfedge->add_option("--n", n, "vertex count")->required();
    halfedge->add_flag("--require-match", require_match, "regenerate until statistics match");
    halfedge->add_option("--emit-graph", emit_graph, "sample a matching, write its edge list");

    CLI::App* cascade = app.add_subcommand("cascade", "post-t0 change cascades and marking");
    add_common(cascade, true);
    cascade->add_option("--n", n, "vertex count")->required();
    cascade->add_option("--t0", t0, "marking start round")->required();
    cascade->add_option("--delta0", delta0, "marking budget parameter");

    wp::ExperimentConfig config;
    std::string n_csv;
    CLI::App* experiment = app.add_subcommand("experiment", "named experiment harness");
    experiment->add_option("--name", config.name, "experiment name")->required();
    experiment->add_option("--rule", config.rule_path, "rule spec file")->required();
    experiment->add_option("--seed", config.seed, "master seed")->required();
    experiment->add_option("--out", config.out_dir, "output directory");
    experiment->add_option("--q0", config.q0_spec, "initial message law");
    experiment->add_option("--d", config.d, "mean degree");
    experiment->add_option("--dmin", config.d_min, "grid lower end");
    experiment->add_option("--dmax", config.d_max, "grid upper end");
    experiment->add_option("--dstep", config.d_step, "grid step");
    experiment->add_option("--tol", config.tol, "fixed-point tolerance");
    experiment->add_option("--eta", config.eta, "threshold jump size");
    experiment->add_option("--delta", config.delta, "convergence accuracy");
    experiment->add_option("--delta0", config.delta0, "marking budget parameter");
    experiment->add_option("--t0", config.t0, "story horizon / marking start");
    experiment->add_option("--tmax", config.t_max, "round cap");
    experiment->add_option("--trials", config.trials, "Monte Carlo trials");
    experiment->add_option("--n", n_csv, "vertex counts, comma separated");
    experiment->add_option("--seeds", config.seeds, "number of seeds");
    experiment->add_option("--threads", config.threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(common, n, t_max, stories_out);
        if (fixedpoint->parsed()) return cmd_fixedpoint(common, tol, max_iter);
        if (threshold->parsed()) return cmd_threshold(common, d_min, d_max, eta, tol);
        if (story->parsed()) return cmd_story(common, t, samples);
        if (subcrit->parsed()) return cmd_subcrit(common, trials, tol, change_spec, matrix_out);
        if (halfedge->parsed()) return cmd_halfedge(common, t0, n, require_match, emit_graph);
        if (cascade->parsed()) return cmd_cascade(common, n, t0, delta0);
        if (experiment->parsed()) {
            if (!n_csv.empty()) {
                std::stringstream ss(n_csv);
                std::string item;
                while (std::getline(ss, item, ',')) config.n_list.push_back(std::stoll(item));
            }
            config.threads = wp::resolve_threads(config.threads);
            wp::run_experiment(config);
            return 0;
        }
    } catch (const wp::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
