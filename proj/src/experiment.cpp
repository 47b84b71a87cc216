#include "wp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wp/cascade.hpp"
#include "wp/change.hpp"
#include "wp/errors.hpp"
#include "wp/graph.hpp"
#include "wp/halfedge.hpp"
#include "wp/poisson.hpp"
#include "wp/version.hpp"

namespace wp {

Dist parse_q0(const std::string& spec, const Alphabet& alphabet) {
    const int k = alphabet.size();
    if (spec == "uniform") return Dist::uniform(k);
    if (spec.rfind("delta:", 0) == 0)
        return Dist::delta(k, alphabet.index_of(spec.substr(6)));

    std::vector<double> w(static_cast<std::size_t>(k), 0.0);
    std::stringstream ss(spec);
    std::string item;
    bool any = false;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw validation_error("bad q0 spec entry '" + item +
                                   "' (want SYM=WEIGHT, delta:SYM or uniform)");
        const int idx = alphabet.index_of(item.substr(0, eq));
        w[static_cast<std::size_t>(idx)] = std::stod(item.substr(eq + 1));
        any = true;
    }
    if (!any) throw validation_error("empty q0 spec");
    double sum = 0.0;
    for (double x : w) sum += x;
    if (sum <= 0.0) throw validation_error("q0 weights must have positive sum");
    for (double& x : w) x /= sum;
    return Dist(std::move(w));
}

std::string story_to_string(const Story& s, const Alphabet& alphabet) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += '-';
        out += alphabet.name(s[i]);
    }
    return out;
}

std::string story_code_to_string(std::uint64_t code, int length, const Alphabet& alphabet) {
    return story_to_string(decode_story(code, length, alphabet.size()), alphabet);
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

std::uint64_t fnv1a_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

// Collects output files and writes the manifest at the end of a run.
class OutputSet {
  public:
    OutputSet(const ExperimentConfig& config) : config_(config), dir_(config.out_dir) {
        fs::create_directories(dir_);
    }

    std::ofstream open(const std::string& name) {
        files_.push_back(name);
        std::ofstream out(dir_ / name);
        if (!out) throw input_error("cannot open output file: " + (dir_ / name).string());
        return out;
    }

    void finalize() {
        json manifest;
        manifest["experiment"] = config_.name;
        manifest["version"] = kVersion;
        manifest["seed"] = config_.seed;
        json cfg;
        cfg["rule"] = config_.rule_path;
        cfg["q0"] = config_.q0_spec;
        cfg["d"] = config_.d;
        cfg["d_min"] = config_.d_min;
        cfg["d_max"] = config_.d_max;
        cfg["d_step"] = config_.d_step;
        cfg["tol"] = config_.tol;
        cfg["eta"] = config_.eta;
        cfg["delta"] = config_.delta;
        cfg["delta0"] = config_.delta0;
        cfg["t0"] = config_.t0;
        cfg["t_max"] = config_.t_max;
        cfg["trials"] = config_.trials;
        cfg["n"] = config_.n_list;
        cfg["seeds"] = config_.seeds;
        manifest["config"] = cfg;
        json outputs = json::array();
        for (const std::string& f : files_) {
            json entry;
            entry["file"] = f;
            entry["bytes"] = static_cast<std::int64_t>(fs::file_size(dir_ / f));
            char hex[32];
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a_file(dir_ / f)));
            entry["fnv64"] = hex;
            outputs.push_back(entry);
        }
        manifest["outputs"] = outputs;
        std::ofstream out(dir_ / "manifest.json");
        out << manifest.dump(2) << "\n";
    }

  private:
    const ExperimentConfig& config_;
    fs::path dir_;
    std::vector<std::string> files_;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw validation_error(what);
}

const char* stop_name(StopCondition s) {
    switch (s) {
        case StopCondition::exhaustion: return "exhaustion";
        case StopCondition::expansion: return "expansion";
        case StopCondition::explosion: return "explosion";
    }
    return "?";
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::subcritical: return "subcritical";
        case Verdict::critical_band: return "critical-band";
        case Verdict::supercritical: return "supercritical";
    }
    return "?";
}

// Minimal t with |{e : message at t differs from the fixed point}| < delta*n.
int convergence_t0(const StoryGraph& sg, double delta) {
    const double budget = delta * static_cast<double>(sg.g.n);
    for (int t = 0; t <= sg.horizon(); ++t) {
        if (static_cast<double>(changes_between(sg, t, sg.horizon())) < budget) return t;
    }
    return sg.horizon();
}

void experiment_convergence(const UpdateRule& rule, const ExperimentConfig& cfg, OutputSet& out) {
    require(!cfg.n_list.empty(), "convergence needs --n");
    const Dist q0 = parse_q0(cfg.q0_spec, rule.alphabet());
    auto summary = out.open("convergence_summary.csv");
    summary << "n,rounds,fixed_point,t0\n";
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        const std::int64_t n = cfg.n_list[i];
        const std::uint64_t run_seed = derive_seed(cfg.seed, stream::trial, i);
        MessagedGraph g = gen_gnp(n, cfg.d, run_seed);
        init_messages(g, q0, run_seed);
        const StoryGraph sg = wp_run_with_stories(std::move(g), rule, cfg.t_max, cfg.threads);
        auto csv = out.open("convergence_n" + std::to_string(n) + ".csv");
        csv << "round,changes,changed_after\n";
        for (int t = 0; t <= sg.horizon(); ++t) {
            const std::int64_t per_round =
                t == 0 ? 0 : sg.stats.changes_per_round[static_cast<std::size_t>(t) - 1];
            csv << t << ',' << per_round << ',' << changes_between(sg, t, sg.horizon()) << '\n';
        }
        summary << n << ',' << sg.stats.rounds << ',' << (sg.at_fixed_point() ? 1 : 0) << ','
                << (sg.at_fixed_point() ? convergence_t0(sg, cfg.delta) : -1) << '\n';
    }
}

void experiment_core_threshold(const UpdateRule& rule, const ExperimentConfig& cfg,
                               OutputSet& out) {
    require(cfg.d_min < cfg.d_max, "core-threshold needs --dmin < --dmax");
    require(rule.kind() == RuleKind::kcore, "core-threshold expects a kcore rule");
    const Dist q0 = parse_q0(cfg.q0_spec, rule.alphabet());
    const ThresholdResult scan =
        threshold_scan(rule, cfg.d_min, cfg.d_max, q0, cfg.scan_tol, cfg.eta, cfg.tol,
                       cfg.max_iter);
    auto scan_csv = out.open("core_threshold_scan.csv");
    scan_csv << "found,d_star,bracket_lo,bracket_hi,discontinuous,jump\n";
    scan_csv << (scan.found ? 1 : 0) << ',' << fmt(scan.d_star) << ',' << fmt(scan.bracket_lo)
             << ',' << fmt(scan.bracket_hi) << ',' << (scan.discontinuous ? 1 : 0) << ','
             << fmt(scan.jump) << '\n';

    const std::int64_t n = cfg.n_list.empty() ? 100000 : cfg.n_list[0];
    auto grid = out.open("core_threshold_grid.csv");
    grid << "d,seed,core_fraction\n";
    std::int64_t row = 0;
    for (double d = cfg.d_min; d <= cfg.d_max + 1e-12; d += cfg.d_step) {
        for (int s = 0; s < cfg.seeds; ++s) {
            const MessagedGraph g =
                gen_gnp(n, d, derive_seed(cfg.seed, stream::trial, static_cast<std::uint64_t>(row)));
            const auto core = peel_kcore(g, rule.kcore_k());
            grid << fmt(d) << ',' << s << ','
                 << fmt(static_cast<double>(core.size()) / static_cast<double>(n)) << '\n';
            ++row;
        }
    }
}

void write_matrix_csv(std::ofstream csv, const TransitionMatrix& m) {
    csv << "from_type,to_type,mean,stderr\n";
    for (std::size_t parent = 0; parent < m.dim; ++parent) {
        for (std::size_t child = 0; child < m.dim; ++child) {
            csv << m.type_names[parent] << ',' << m.type_names[child] << ','
                << fmt(m.at(child, parent)) << ',' << fmt(m.se_at(child, parent)) << '\n';
        }
    }
}

void experiment_subcriticality(const UpdateRule& rule, const ExperimentConfig& cfg,
                               OutputSet& out) {
    const Dist q0 = parse_q0(cfg.q0_spec, rule.alphabet());
    const FixedPointReport fp = iterate_to_fixed_point(rule, cfg.d, q0, cfg.tol, cfg.max_iter);
    const TypedMatrices tm =
        estimate_transition_matrix(rule, cfg.d, fp.limit, cfg.trials, cfg.seed, cfg.threads);
    const SubcriticalityReport full = spectral_radius(tm.full);
    const SubcriticalityReport agg = spectral_radius(tm.aggregated);

    write_matrix_csv(out.open("subcrit_matrix_full.csv"), tm.full);
    write_matrix_csv(out.open("subcrit_matrix_aggregated.csv"), tm.aggregated);

    auto report = out.open("subcrit_report.txt");
    report << "fixed_point_converged=" << fp.converged << "\n";
    for (int j = 0; j < rule.alphabet().size(); ++j)
        report << "p[" << rule.alphabet().name(j) << "]=" << fmt(fp.limit[j]) << "\n";
    auto emit = [&](const char* tag, const SubcriticalityReport& r,
                    const std::vector<std::string>& names) {
        report << tag << "_rho=" << fmt(r.rho) << "\n";
        report << tag << "_ci=[" << fmt(r.ci_lo) << "," << fmt(r.ci_hi) << "]\n";
        report << tag << "_gamma=" << fmt(r.gamma) << "\n";
        report << tag << "_verdict=" << verdict_name(r.verdict) << "\n";
        for (std::size_t i = 0; i < r.alpha.size(); ++i)
            report << tag << "_alpha[" << names[i] << "]=" << fmt(r.alpha[i]) << "\n";
    };
    emit("full", full, tm.full.type_names);
    emit("aggregated", agg, tm.aggregated.type_names);

    auto survival = out.open("subcrit_survival.csv");
    survival << "change,generation,extinct_fraction,mean_population\n";
    for (std::size_t ci = 0; ci < tm.change_pairs.size(); ++ci) {
        const ChangePair cp = tm.change_pairs[ci];
        const ChangeTreeStats stats =
            simulate_change_tree(rule, cfg.d, fp.limit, cp, 50, 100000, cfg.trials,
                                 derive_seed(cfg.seed, stream::trial, 1000 + ci), cfg.threads);
        const std::string name =
            rule.alphabet().name(cp.from) + "->" + rule.alphabet().name(cp.to);
        for (int gen = 0; gen <= stats.max_gen; ++gen)
            survival << name << ',' << gen << ','
                     << fmt(stats.extinct_by_gen[static_cast<std::size_t>(gen)]) << ','
                     << fmt(stats.mean_population[static_cast<std::size_t>(gen)]) << '\n';
    }
}

void experiment_model_compare(const UpdateRule& rule, const ExperimentConfig& cfg,
                              OutputSet& out) {
    require(!cfg.n_list.empty(), "model-compare needs --n");
    const Dist q0 = parse_q0(cfg.q0_spec, rule.alphabet());
    const ModelComparison cmp =
        compare_models(rule, cfg.d, q0, cfg.t0, cfg.n_list[0], cfg.seed, cfg.threads);

    auto pairs = out.open("model_compare_pairs.csv");
    pairs << "in_story,out_story,g_count,he_count,expected\n";
    for (const PairComparison& pc : cmp.pairs) {
        pairs << story_code_to_string(pc.in_code, cfg.t0 + 1, rule.alphabet()) << ','
              << story_code_to_string(pc.out_code, cfg.t0 + 1, rule.alphabet()) << ','
              << pc.g_count << ',' << pc.he_count << ',' << fmt(pc.expected) << '\n';
    }

    auto summary = out.open("model_compare_summary.txt");
    summary << "model_l1_discrepancy=" << fmt(cmp.l1_discrepancy) << "\n";
    summary << "expected_exact=" << cmp.expected_exact << "\n";
    summary << "g_max_abs_dev=" << fmt(cmp.g_max_abs_dev) << "\n";
    summary << "he_max_abs_dev=" << fmt(cmp.he_max_abs_dev) << "\n";
    summary << "k0=" << fmt(cmp.k0) << "\n";
    summary << "g_high_degree=" << cmp.g_high_degree << "\n";
    summary << "he_high_degree=" << cmp.he_high_degree << "\n";
    summary << "incompilation_l1=" << fmt(cmp.incomp_l1) << "\n";
    summary << "g_rounds=" << cmp.g_rounds << "\n";
    summary << "g_fixed_point=" << cmp.g_fixed_point << "\n";
    summary << "he_statistics_match=" << cmp.he_a_holds << "\n";
}

void experiment_match_prob(const UpdateRule& rule, const ExperimentConfig& cfg, OutputSet& out) {
    require(!cfg.n_list.empty(), "match-prob needs --n");
    const Dist q0 = parse_q0(cfg.q0_spec, rule.alphabet());
    auto csv = out.open("match_prob.csv");
    csv << "n,trials,successes,p_hat,ci_lo,ci_hi\n";
    std::vector<double> log_n, log_p;
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        const std::int64_t n = cfg.n_list[i];
        const MatchProbEstimate est = estimate_match_probability(
            rule, cfg.d, q0, cfg.t0, n, cfg.trials, derive_seed(cfg.seed, stream::trial, i),
            cfg.threads);
        csv << n << ',' << est.trials << ',' << est.successes << ',' << fmt(est.p_hat) << ','
            << fmt(est.ci_lo) << ',' << fmt(est.ci_hi) << '\n';
        if (est.p_hat > 0.0) {
            log_n.push_back(std::log(static_cast<double>(n)));
            log_p.push_back(std::log(est.p_hat));
        }
    }

    auto summary = out.open("match_prob_summary.txt");
    const ClassReport classes = qr_classes(rule, cfg.d, q0, cfg.t0);
    summary << "q_t0=" << classes.per_t.back().q << "\n";
    summary << "r_before_t0=" << classes.r_before << "\n";
    summary << "exponent=" << fmt(classes.exponent) << "\n";
    if (log_n.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < log_n.size(); ++i) {
            mx += log_n[i];
            my += log_p[i];
        }
        mx /= static_cast<double>(log_n.size());
        my /= static_cast<double>(log_n.size());
        double num = 0, den = 0;
        for (std::size_t i = 0; i < log_n.size(); ++i) {
            num += (log_n[i] - mx) * (log_p[i] - my);
            den += (log_n[i] - mx) * (log_n[i] - mx);
        }
        summary << "log_slope=" << fmt(den > 0 ? num / den : 0.0) << "\n";
    }
}

void experiment_cascades(const UpdateRule& rule, const ExperimentConfig& cfg, OutputSet& out) {
    require(!cfg.n_list.empty(), "cascades needs --n");
    const Dist q0 = parse_q0(cfg.q0_spec, rule.alphabet());
    const std::int64_t n = cfg.n_list[0];
    const int k = rule.alphabet().size();

    // Perron weights for the expansion rule, from the aggregated matrix at
    // the fixed point. A rule with no potential changes gets uniform weights.
    const FixedPointReport fp = iterate_to_fixed_point(rule, cfg.d, q0, cfg.tol, cfg.max_iter);
    std::vector<double> alpha(static_cast<std::size_t>(k) * k,
                              1.0 / static_cast<double>(k * k));
    try {
        const TypedMatrices tm = estimate_transition_matrix(
            rule, cfg.d, fp.limit, std::min<std::int64_t>(cfg.trials, 20000), cfg.seed,
            cfg.threads);
        alpha = spectral_radius(tm.aggregated).alpha;
    } catch (const input_error&) {
    }

    auto components = out.open("cascades_components.csv");
    components << "seed,source,component_size\n";
    auto summary = out.open("cascades_summary.csv");
    summary << "seed,stop,marked,duplicates,freaks,spurious,track_changed,track_largest\n";
    for (int s = 0; s < cfg.seeds; ++s) {
        const std::uint64_t run_seed = derive_seed(cfg.seed, stream::trial, 5000 + s);
        MessagedGraph g = gen_gnp(n, cfg.d, run_seed);
        init_messages(g, q0, run_seed);
        const StoryGraph sg = wp_run_with_stories(std::move(g), rule, cfg.t_max, cfg.threads);
        const CascadeReport track = track_cascades(sg, cfg.t0);
        const CascadeReport mark = run_marking_on(sg, rule, cfg.t0, cfg.delta0, alpha);
        for (std::int64_t size : track.component_sizes)
            components << s << ",track," << size << '\n';
        for (std::int64_t size : mark.component_sizes) components << s << ",mark," << size << '\n';
        summary << s << ',' << stop_name(mark.stop) << ',' << mark.total_marked << ','
                << mark.duplicates << ',' << mark.freaks << ',' << mark.spurious << ','
                << track.total_marked << ','
                << (track.component_sizes.empty() ? 0 : track.component_sizes.front()) << '\n';
    }
}

}  // namespace

void run_experiment(const ExperimentConfig& config) {
    require(!config.name.empty(), "experiment name required");
    require(!config.rule_path.empty(), "rule file required");
    const UpdateRule rule = UpdateRule::load(config.rule_path);

    OutputSet out(config);
    if (config.name == "convergence")
        experiment_convergence(rule, config, out);
    else if (config.name == "core-threshold")
        experiment_core_threshold(rule, config, out);
    else if (config.name == "subcriticality")
        experiment_subcriticality(rule, config, out);
    else if (config.name == "model-compare")
        experiment_model_compare(rule, config, out);
    else if (config.name == "match-prob")
        experiment_match_prob(rule, config, out);
    else if (config.name == "cascades")
        experiment_cascades(rule, config, out);
    else
        throw validation_error("unknown experiment: '" + config.name + "'");
    out.finalize();
}

}  // namespace wp
