// Experiment harness CLI: prepares data, trains and serves explainable GNN
// targets, runs extraction attacks and baselines, and emits result tables.

#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsteal/client.hpp"
#include "gsteal/errors.hpp"
#include "gsteal/experiment.hpp"
#include "gsteal/server.hpp"
#include "gsteal/wire.hpp"

using namespace gsteal;

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    return load_experiment_config(path);
}

std::vector<double> parse_fractions(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

SplitResult split_for_seed(const ExperimentConfig& cfg, const Dataset& ds,
                           std::uint64_t seed) {
    SplitSpec spec = cfg.split;
    spec.seed = seed;
    return split(ds, spec);
}

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

int cmd_prepare(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    Dataset ds = prepare_dataset(cfg.dataset);
    std::string name = cfg.dataset.kind == "tu" ? cfg.dataset.tu_name : "MOTIF";
    save_tu_dataset(ds, out_dir, name);
    std::printf("wrote %zu graphs (%d classes, %d features) to %s/%s_*.txt\n",
                ds.graphs.size(), ds.num_classes, ds.feature_dim, out_dir.c_str(),
                name.c_str());
    return 0;
}

int cmd_train_target(const std::string& config_path, std::uint64_t seed,
                     const std::string& out_path) {
    ExperimentConfig cfg = load_config(config_path);
    Dataset ds = prepare_dataset(cfg.dataset);
    SplitResult parts = split_for_seed(cfg, ds, seed);
    ModelConfig tc = cfg.target;
    tc.feature_dim = ds.feature_dim;
    tc.num_classes = ds.num_classes;
    tc.seed = seed;
    std::vector<double> trace;
    ModelState state = train_model(tc, parts.target_train, parts.target_val,
                                   cfg.target_epochs, cfg.target_batch, &trace);
    save_model(state, out_path);
    double best = 0.0;
    for (double a : trace) best = std::max(best, a);
    std::printf("trained %s target (%d layers, %d hidden): best val auc %.4f -> %s\n",
                arch_name(tc.arch).c_str(), tc.num_layers, tc.hidden_dim, best,
                out_path.c_str());
    return 0;
}

int cmd_serve(const std::string& model_path, const std::string& explainer,
              long budget, const std::string& listen, bool hard_labels) {
    OracleConfig cfg;
    cfg.model_path = model_path;
    cfg.explainer = explainer_from_name(explainer);
    cfg.budget = budget;
    cfg.return_probs = !hard_labels;
    cfg.listen_address = listen;

    Oracle oracle(load_model(cfg.model_path), cfg.explainer, cfg.budget,
                  cfg.return_probs);
    OracleServer server(oracle, cfg.listen_address);
    server.start();
    std::printf("serving on %s (explainer %s, budget %ld, %s labels)\n",
                server.address().c_str(), explainer.c_str(), budget,
                hard_labels ? "hard" : "soft");
    std::fflush(stdout);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop) ::sleep(1);
    server.stop();
    std::printf("shut down; remaining budget %ld\n", oracle.remaining_budget());
    return 0;
}

int cmd_attack(const std::string& config_path, const std::string& method,
               std::uint64_t seed, const std::string& model_path,
               const std::string& remote, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    Dataset ds = prepare_dataset(cfg.dataset);
    SplitResult parts = split_for_seed(cfg, ds, seed);

    AttackConfig ac = method_attack_config(cfg, method);
    ac.seed = seed;
    ac.surrogate.seed = seed;
    ac.surrogate.feature_dim = ds.feature_dim;
    ac.surrogate.num_classes = ds.num_classes;

    long budget = cfg.budget_absolute >= 0
                      ? cfg.budget_absolute
                      : static_cast<long>(cfg.budget_fraction *
                                          static_cast<double>(parts.shadow.size()));

    TrainingSet ts;
    if (!remote.empty()) {
        OracleClient client = OracleClient::connect(remote);
        ts = collect_training_set(client, parts.shadow, budget, ac);
    } else {
        if (model_path.empty())
            throw ConfigError("attack: need --model or --remote");
        Oracle oracle(load_model(model_path), cfg.explainer, budget,
                      cfg.oracle_probs);
        ts = collect_training_set(oracle, parts.shadow, budget, ac);
    }
    ModelState surrogate = train_surrogate(ts, ac);

    std::filesystem::create_directories(out_dir);
    save_model(surrogate, out_dir + "/surrogate.model");
    dump_training_set(ts, out_dir + "/dump.jsonl");
    std::printf("attack %s/seed %llu: %zu queries, %zu augments (%zu skipped) -> %s\n",
                method.c_str(), static_cast<unsigned long long>(seed),
                ts.queried.size(), ts.augmented.size(), ts.skipped_augments,
                out_dir.c_str());
    return 0;
}

int cmd_evaluate(const std::string& config_path, std::uint64_t seed,
                 const std::string& target_path, const std::string& surrogate_path) {
    ExperimentConfig cfg = load_config(config_path);
    Dataset ds = prepare_dataset(cfg.dataset);
    SplitResult parts = split_for_seed(cfg, ds, seed);
    ModelState target = load_model(target_path);
    ModelState surrogate = load_model(surrogate_path);
    EvalResult r = evaluate_surrogate(target, surrogate, parts.test, cfg.explainer);
    std::printf("{\"auc\":%s,\"fidelity\":%s,\"rank_corr\":%s,"
                "\"rank_corr_skipped\":%zu,\"rank_corr_total\":%zu}\n",
                wire::format_double(r.auc).c_str(),
                wire::format_double(r.fidelity).c_str(),
                wire::format_double(r.rank_corr).c_str(), r.rank_corr_skipped,
                r.rank_corr_total);
    return 0;
}

void print_summary(const ExperimentConfig& cfg, const ExperimentResult& result) {
    std::printf("target auc %.4f\n", result.target_auc_mean);
    for (const std::string& m : cfg.methods) {
        const EvalReport& rep = result.by_method.at(m);
        std::printf("%-10s auc %.4f+-%.4f  fidelity %.4f+-%.4f  rank_corr %.4f+-%.4f\n",
                    m.c_str(), rep.auc.mean, rep.auc.std, rep.fidelity.mean,
                    rep.fidelity.std, rep.rank_corr.mean, rep.rank_corr.std);
    }
    for (const CellResult& c : result.cells)
        if (!c.ok)
            std::printf("FAILED %s/%llu: %s\n", c.method.c_str(),
                        static_cast<unsigned long long>(c.seed), c.error.c_str());
}

int cmd_sweep(const std::string& config_path, const std::string& fractions_csv,
              const std::string& out_override, int jobs, bool wire) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (jobs > 0) cfg.jobs = jobs;
    if (wire) cfg.wire = true;
    std::vector<double> fractions = fractions_csv.empty()
                                        ? std::vector<double>{cfg.budget_fraction}
                                        : parse_fractions(fractions_csv);
    auto results = sweep_budget(cfg, fractions);
    bool ok = true;
    for (const auto& [f, r] : results) {
        std::printf("== budget fraction %.2f ==\n", f);
        print_summary(cfg, r);
        ok = ok && r.all_ok;
    }
    return ok ? 0 : 1;
}

int cmd_cross(const std::string& config_path, const std::string& out_override,
              int jobs) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (jobs > 0) cfg.jobs = jobs;
    if (!cfg.cross_shadow)
        throw ConfigError("cross-dist: config lacks a cross_shadow section");
    CrossDistResult r = cross_distribution(cfg, *cfg.cross_shadow);
    std::printf("shadow-vs-target MMD^2 = %.6f\n", r.mmd_squared);
    print_summary(cfg, r.result);
    return r.result.all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explainable-GNN extraction testbed"};
    app.require_subcommand(1);

    std::string config_path, out_path, model_path, surrogate_path, remote,
        explainer = "GraphCAM", listen = "127.0.0.1:9777", method = "full",
        fractions;
    std::uint64_t seed = 41;
    long budget = 120;
    bool hard_labels = false, wire = false;
    int jobs = 0;

    auto* prepare = app.add_subcommand("prepare", "generate or ingest a dataset");
    prepare->add_option("--config", config_path, "experiment config file");
    prepare->add_option("--out", out_path, "output directory")->required();

    auto* train = app.add_subcommand("train-target", "train one target model");
    train->add_option("--config", config_path);
    train->add_option("--seed", seed, "run seed");
    train->add_option("--out", out_path, "model file")->required();

    auto* serve = app.add_subcommand("serve", "serve a model behind the budget oracle");
    serve->add_option("--model", model_path)->required();
    serve->add_option("--explainer", explainer, "GraphCAM | Grad | GradCAM");
    serve->add_option("--budget", budget);
    serve->add_option("--listen", listen, "host:port");
    serve->add_flag("--hard-labels", hard_labels, "omit probabilities");

    auto* attack = app.add_subcommand("attack", "run one extraction attack");
    attack->add_option("--config", config_path);
    attack->add_option("--method", method, "TS | MSE-align | no-aug | no-align | full");
    attack->add_option("--seed", seed);
    attack->add_option("--model", model_path, "target model (in-process oracle)");
    attack->add_option("--remote", remote, "oracle address (TCP client)");
    attack->add_option("--out", out_path, "output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "score a surrogate against a target");
    evaluate->add_option("--config", config_path);
    evaluate->add_option("--seed", seed);
    evaluate->add_option("--target", model_path)->required();
    evaluate->add_option("--surrogate", surrogate_path)->required();

    auto* sweep = app.add_subcommand("sweep-budget", "experiment across budget fractions");
    sweep->add_option("--config", config_path);
    sweep->add_option("--fractions", fractions, "comma-separated, e.g. 0.1,0.3,0.5");
    sweep->add_option("--out", out_path, "output directory override");
    sweep->add_option("--jobs", jobs, "worker threads");
    sweep->add_flag("--wire", wire, "route queries over loopback TCP");

    auto* cross = app.add_subcommand("cross-dist", "cross-distribution shadow experiment");
    cross->add_option("--config", config_path);
    cross->add_option("--out", out_path, "output directory override");
    cross->add_option("--jobs", jobs);

    auto* report = app.add_subcommand("report", "rebuild summary.csv from reports");
    report->add_option("--dir", out_path, "results directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) return cmd_prepare(config_path, out_path);
        if (train->parsed()) return cmd_train_target(config_path, seed, out_path);
        if (serve->parsed())
            return cmd_serve(model_path, explainer, budget, listen, hard_labels);
        if (attack->parsed())
            return cmd_attack(config_path, method, seed, model_path, remote, out_path);
        if (evaluate->parsed())
            return cmd_evaluate(config_path, seed, model_path, surrogate_path);
        if (sweep->parsed())
            return cmd_sweep(config_path, fractions, out_path, jobs, wire);
        if (cross->parsed()) return cmd_cross(config_path, out_path, jobs);
        if (report->parsed()) {
            rebuild_summary(out_path);
            std::printf("rebuilt %s/summary.csv\n", out_path.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
