#include "gsteal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gsteal/client.hpp"
#include "gsteal/errors.hpp"
#include "gsteal/server.hpp"
#include "gsteal/wire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gsteal {

namespace {

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    if (count <= 1 || jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

Dataset prepare_dataset(const DatasetSpec& spec) {
    if (spec.kind == "synthetic")
        return generate_motif_dataset(spec.n_graphs, spec.seed, spec.motif);
    if (spec.kind == "tu") return load_tu_dataset(spec.tu_dir, spec.tu_name);
    throw ConfigError("unknown dataset kind: " + spec.kind);
}

AttackConfig method_attack_config(const ExperimentConfig& config,
                                  const std::string& method) {
    AttackConfig ac = config.attack;
    if (method == "TS") {
        ac.align_mode = AlignMode::None;
        ac.augment = false;
    } else if (method == "MSE-align") {
        ac.align_mode = AlignMode::MSE;
        ac.augment = false;
    } else if (method == "no-aug") {
        ac.align_mode = AlignMode::Rank;
        ac.augment = false;
    } else if (method == "no-align") {
        ac.align_mode = AlignMode::None;
        ac.augment = true;
    } else if (method == "full") {
        ac.align_mode = AlignMode::Rank;
        ac.augment = true;
    } else {
        throw ConfigError("unknown method: " + method);
    }
    return ac;
}

EvalResult evaluate_surrogate(const ModelState& target, const ModelState& surrogate,
                              const Dataset& test, ExplainerKind target_explainer) {
    if (test.graphs.empty()) throw ConfigError("evaluate: empty test set");
    std::vector<double> scores;
    std::vector<int> true_labels, target_labels, surrogate_labels;
    std::vector<double> taus;
    std::size_t skipped = 0;
    for (const Graph& g : test.graphs) {
        ForwardOutput tf = forward(target, g);
        ForwardOutput sf = forward(surrogate, g);
        int t_label = predicted_class(tf);
        int s_label = predicted_class(sf);
        target_labels.push_back(t_label);
        surrogate_labels.push_back(s_label);
        scores.push_back(sf.probs.at(0, 1));
        true_labels.push_back(g.label.value());
        ExplanationVector te = explain_with(target, g, tf, target_explainer);
        ExplanationVector se = graph_cam(sf, surrogate, s_label);
        try {
            taus.push_back(kendall_tau(te.scores, se.scores));
        } catch (const UndefinedMetricError&) {
            ++skipped;
        }
    }
    EvalResult r;
    r.auc = roc_auc(scores, true_labels);
    r.fidelity = fidelity(surrogate_labels, target_labels);
    double tau_sum = 0.0;
    for (double t : taus) tau_sum += t;
    r.rank_corr = taus.empty() ? 0.0 : tau_sum / static_cast<double>(taus.size());
    r.rank_corr_skipped = skipped;
    r.rank_corr_total = test.graphs.size();
    return r;
}

namespace {

long resolve_budget(const ExperimentConfig& config, std::size_t shadow_size) {
    long q = config.budget_absolute >= 0
                 ? config.budget_absolute
                 : static_cast<long>(std::floor(config.budget_fraction *
                                                static_cast<double>(shadow_size)));
    if (q < 1) throw ConfigError("budget resolves to zero queries");
    if (q > static_cast<long>(shadow_size))
        throw ConfigError("budget exceeds shadow size");
    return q;
}

void write_text_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path);
    out << content;
}

std::string cell_report_json(const CellResult& cell, long budget) {
    std::string out = "{\"method\":\"" + cell.method + "\"";
    out += ",\"seed\":" + std::to_string(cell.seed);
    out += ",\"ok\":" + std::string(cell.ok ? "true" : "false");
    if (cell.ok) {
        out += ",\"auc\":" + wire::format_double(cell.metrics.auc);
        out += ",\"fidelity\":" + wire::format_double(cell.metrics.fidelity);
        out += ",\"rank_corr\":" + wire::format_double(cell.metrics.rank_corr);
        out += ",\"rank_corr_skipped\":" + std::to_string(cell.metrics.rank_corr_skipped);
        out += ",\"rank_corr_total\":" + std::to_string(cell.metrics.rank_corr_total);
        out += ",\"budget\":" + std::to_string(budget);
    } else {
        json err = cell.error;
        out += ",\"error\":" + err.dump();
    }
    out += "}\n";
    return out;
}

std::string summary_csv(const ExperimentConfig& config, const ExperimentResult& result) {
    bool single_seed = config.seeds.size() < 2;
    std::string csv =
        "method,auc_mean,auc_std,fidelity_mean,fidelity_std,rank_corr_mean,rank_corr_std\n";
    // Target row: AUC only, explicit nulls elsewhere (and everywhere when no
    // target reports are in scope, as in a rebuilt sweep subdirectory).
    if (result.target_test_auc.empty()) {
        csv += "target,,,,,,\n";
    } else {
        MetricSummary target_auc = summarize(result.target_test_auc);
        csv += "target," + csv_number(target_auc.mean) + "," +
               (single_seed ? "" : csv_number(target_auc.std)) + ",,,,\n";
    }
    for (const std::string& method : config.methods) {
        auto it = result.by_method.find(method);
        if (it == result.by_method.end()) continue;
        const EvalReport& rep = it->second;
        csv += method + "," + csv_number(rep.auc.mean) + "," +
               (single_seed ? "" : csv_number(rep.auc.std)) + "," +
               csv_number(rep.fidelity.mean) + "," +
               (single_seed ? "" : csv_number(rep.fidelity.std)) + "," +
               csv_number(rep.rank_corr.mean) + "," +
               (single_seed ? "" : csv_number(rep.rank_corr.std)) + "\n";
    }
    return csv;
}

}  // namespace

PreparedExperiment prepare_experiment(const ExperimentConfig& config,
                                      bool write_artifacts) {
    if (config.seeds.empty()) throw ConfigError("experiment: no seeds");
    PreparedExperiment prepared;
    prepared.dataset = prepare_dataset(config.dataset);
    prepared.seeds.resize(config.seeds.size());

    parallel_for(config.seeds.size(), config.jobs, [&](std::size_t i) {
        SeedContext ctx;
        ctx.seed = config.seeds[i];
        SplitSpec spec = config.split;
        spec.seed = ctx.seed;
        ctx.splits = split(prepared.dataset, spec);

        ModelConfig tc = config.target;
        tc.feature_dim = prepared.dataset.feature_dim;
        tc.num_classes = prepared.dataset.num_classes;
        tc.seed = ctx.seed;
        ctx.target = train_model(tc, ctx.splits.target_train, ctx.splits.target_val,
                                 config.target_epochs, config.target_batch);

        // Validation AUC of the selected checkpoint and test AUC on true labels.
        auto auc_on = [&](const Dataset& ds) {
            std::vector<double> scores;
            std::vector<int> labels;
            for (const Graph& g : ds.graphs) {
                scores.push_back(forward(ctx.target, g).probs.at(0, 1));
                labels.push_back(g.label.value());
            }
            return roc_auc(scores, labels);
        };
        ctx.target_val_auc = auc_on(ctx.splits.target_val);
        ctx.target_test_auc = auc_on(ctx.splits.test);
        prepared.seeds[i] = std::move(ctx);
    });

    if (write_artifacts) {
        for (const SeedContext& ctx : prepared.seeds) {
            std::string dir = config.output_dir + "/target/" + std::to_string(ctx.seed);
            fs::create_directories(dir);
            save_model(ctx.target, dir + "/target.model");
            write_text_file(dir + "/report.json",
                            "{\"seed\":" + std::to_string(ctx.seed) +
                                ",\"val_auc\":" + wire::format_double(ctx.target_val_auc) +
                                ",\"test_auc\":" + wire::format_double(ctx.target_test_auc) +
                                "}\n");
        }
    }
    return prepared;
}

ExperimentResult run_prepared(const ExperimentConfig& config,
                              const PreparedExperiment& prepared,
                              const std::string& output_dir,
                              bool write_artifacts) {
    struct CellSpec {
        std::string method;
        std::size_t seed_index;
    };
    std::vector<CellSpec> specs;
    for (const std::string& method : config.methods)
        for (std::size_t s = 0; s < prepared.seeds.size(); ++s)
            specs.push_back(CellSpec{method, s});

    ExperimentResult result;
    result.cells.resize(specs.size());
    std::vector<long> budgets(specs.size(), 0);

    parallel_for(specs.size(), config.jobs, [&](std::size_t i) {
        const CellSpec& spec = specs[i];
        const SeedContext& ctx = prepared.seeds[spec.seed_index];
        CellResult cell;
        cell.method = spec.method;
        cell.seed = ctx.seed;
        try {
            long budget = resolve_budget(config, ctx.splits.shadow.graphs.size());
            budgets[i] = budget;
            AttackConfig ac = method_attack_config(config, spec.method);
            ac.seed = ctx.seed;
            ac.surrogate.seed = ctx.seed;
            ac.surrogate.feature_dim = prepared.dataset.feature_dim;
            ac.surrogate.num_classes = prepared.dataset.num_classes;

            Oracle oracle(ctx.target, config.explainer, budget, config.oracle_probs);
            TrainingSet ts;
            if (config.wire) {
                OracleServer server(oracle, "127.0.0.1:0");
                server.start();
                OracleClient client = OracleClient::connect(server.address());
                ts = collect_training_set(client, ctx.splits.shadow, budget, ac);
                server.stop();
            } else {
                ts = collect_training_set(oracle, ctx.splits.shadow, budget, ac);
            }
            ModelState surrogate = train_surrogate(ts, ac);
            cell.metrics = evaluate_surrogate(ctx.target, surrogate,
                                              ctx.splits.test, config.explainer);
            cell.ok = true;
            if (write_artifacts) {
                std::string dir = output_dir + "/" + spec.method + "/" +
                                  std::to_string(ctx.seed);
                fs::create_directories(dir);
                save_model(surrogate, dir + "/surrogate.model");
                dump_training_set(ts, dir + "/dump.jsonl");
            }
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
        result.cells[i] = std::move(cell);
    });

    if (write_artifacts) {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const CellResult& cell = result.cells[i];
            write_text_file(output_dir + "/" + cell.method + "/" +
                                std::to_string(cell.seed) + "/report.json",
                            cell_report_json(cell, budgets[i]));
        }
    }

    for (const SeedContext& ctx : prepared.seeds)
        result.target_test_auc.push_back(ctx.target_test_auc);
    result.all_ok = true;
    for (const std::string& method : config.methods) {
        std::vector<EvalResult> per_seed;
        for (const CellResult& cell : result.cells) {
            if (cell.method != method) continue;
            if (!cell.ok) {
                result.all_ok = false;
                continue;
            }
            per_seed.push_back(cell.metrics);
        }
        result.by_method[method] = aggregate(per_seed);
    }
    result.target_auc_mean = summarize(result.target_test_auc).mean;

    if (write_artifacts) {
        write_text_file(output_dir + "/summary.csv", summary_csv(config, result));
        auto now = std::chrono::system_clock::now().time_since_epoch();
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(now).count();
        write_text_file(output_dir + "/metadata.json",
                        "{\"finished_unix_time\":" + std::to_string(secs) + "}\n");
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    PreparedExperiment prepared = prepare_experiment(config);
    return run_prepared(config, prepared, config.output_dir);
}

std::map<double, ExperimentResult> sweep_budget(const ExperimentConfig& config,
                                                const std::vector<double>& fractions) {
    if (fractions.empty()) throw ConfigError("sweep: no fractions");
    PreparedExperiment prepared = prepare_experiment(config);
    std::map<double, ExperimentResult> results;
    std::string csv = "fraction,method,metric,mean,std\n";
    for (double f : fractions) {
        ExperimentConfig sub = config;
        sub.budget_fraction = f;
        sub.budget_absolute = -1;
        char tag[32];
        std::snprintf(tag, sizeof tag, "budget_%02d", static_cast<int>(f * 100 + 0.5));
        ExperimentResult r =
            run_prepared(sub, prepared, config.output_dir + "/" + tag);
        for (const std::string& method : config.methods) {
            const EvalReport& rep = r.by_method.at(method);
            auto row = [&](const char* metric, const MetricSummary& s) {
                csv += csv_number(f) + "," + method + "," + metric + "," +
                       csv_number(s.mean) + "," + csv_number(s.std) + "\n";
            };
            row("auc", rep.auc);
            row("fidelity", rep.fidelity);
            row("rank_corr", rep.rank_corr);
        }
        results.emplace(f, std::move(r));
    }
    write_text_file(config.output_dir + "/sweep.csv", csv);
    return results;
}

CrossDistResult cross_distribution(const ExperimentConfig& config,
                                   const DatasetSpec& shadow_spec) {
    Dataset override_shadow = prepare_dataset(shadow_spec);
    Dataset target_data = prepare_dataset(config.dataset);
    if (override_shadow.num_classes != target_data.num_classes)
        throw DimensionError("cross-dist: class count mismatch");
    if (override_shadow.feature_dim > target_data.feature_dim)
        throw DimensionError("cross-dist: shadow features wider than target's");
    if (override_shadow.feature_dim < target_data.feature_dim)
        override_shadow = pad_features(override_shadow, target_data.feature_dim);

    PreparedExperiment prepared = prepare_experiment(config);

    // Structural MMD between the override shadow and the target training
    // pool (first seed's split; the pool differs only in shuffling).
    std::vector<StructuralFeatures> a, b;
    for (const Graph& g : override_shadow.graphs) a.push_back(structural_features(g));
    for (const Graph& g : prepared.seeds.front().splits.target_train.graphs)
        b.push_back(structural_features(g));
    CrossDistResult out;
    out.mmd_squared = mmd_squared(a, b);

    // Swap every seed's shadow pool for the override dataset.
    for (SeedContext& ctx : prepared.seeds) ctx.splits.shadow = override_shadow;
    out.result = run_prepared(config, prepared, config.output_dir + "/cross");
    write_text_file(config.output_dir + "/cross/cross.json",
                    "{\"mmd_squared\":" + wire::format_double(out.mmd_squared) + "}\n");
    return out;
}

// ---------------------------------------------------------------------------
// Config file handling
// ---------------------------------------------------------------------------

namespace {

DatasetSpec dataset_spec_from_json(const json& j) {
    DatasetSpec spec;
    spec.kind = j.value("kind", spec.kind);
    spec.n_graphs = j.value("n_graphs", spec.n_graphs);
    spec.seed = j.value("seed", spec.seed);
    spec.motif.base_nodes_min = j.value("base_nodes_min", spec.motif.base_nodes_min);
    spec.motif.base_nodes_max = j.value("base_nodes_max", spec.motif.base_nodes_max);
    spec.motif.base_edge_prob = j.value("base_edge_prob", spec.motif.base_edge_prob);
    spec.tu_dir = j.value("dir", spec.tu_dir);
    spec.tu_name = j.value("name", spec.tu_name);
    return spec;
}

void model_config_from_json(const json& j, ModelConfig& mc) {
    if (j.contains("arch")) mc.arch = arch_from_name(j.at("arch").get<std::string>());
    mc.num_layers = j.value("num_layers", mc.num_layers);
    mc.hidden_dim = j.value("hidden_dim", mc.hidden_dim);
}

}  // namespace

void apply_config_json(ExperimentConfig& config, const std::string& json_text) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FormatError("config: not a JSON object");
    if (j.contains("dataset")) config.dataset = dataset_spec_from_json(j.at("dataset"));
    if (j.contains("split")) {
        const json& s = j.at("split");
        config.split.target_train_frac =
            s.value("target_train_frac", config.split.target_train_frac);
        config.split.shadow_frac = s.value("shadow_frac", config.split.shadow_frac);
        config.split.test_frac = s.value("test_frac", config.split.test_frac);
        config.split.val_within_target_frac =
            s.value("val_within_target_frac", config.split.val_within_target_frac);
        config.split.seed = s.value("seed", config.split.seed);
    }
    if (j.contains("target")) {
        const json& t = j.at("target");
        model_config_from_json(t, config.target);
        config.target_epochs = t.value("epochs", config.target_epochs);
        config.target_batch = t.value("batch_size", config.target_batch);
        if (t.contains("explainer"))
            config.explainer = explainer_from_name(t.at("explainer").get<std::string>());
        config.oracle_probs = t.value("return_probs", config.oracle_probs);
    }
    if (j.contains("attack")) {
        const json& a = j.at("attack");
        config.attack.alpha = a.value("alpha", config.attack.alpha);
        config.attack.beta = a.value("beta", config.attack.beta);
        config.attack.k_augments = a.value("k_augments", config.attack.k_augments);
        config.attack.edge_perturb_prob =
            a.value("edge_perturb_prob", config.attack.edge_perturb_prob);
        config.attack.lambda = a.value("lambda", config.attack.lambda);
        config.attack.epochs = a.value("epochs", config.attack.epochs);
        config.attack.batch_size = a.value("batch_size", config.attack.batch_size);
        if (a.contains("surrogate"))
            model_config_from_json(a.at("surrogate"), config.attack.surrogate);
    }
    if (j.contains("run")) {
        const json& r = j.at("run");
        if (r.contains("methods"))
            config.methods = r.at("methods").get<std::vector<std::string>>();
        if (r.contains("seeds"))
            config.seeds = r.at("seeds").get<std::vector<std::uint64_t>>();
        config.budget_fraction = r.value("budget_fraction", config.budget_fraction);
        config.budget_absolute = r.value("budget_absolute", config.budget_absolute);
        config.output_dir = r.value("output_dir", config.output_dir);
        config.jobs = r.value("jobs", config.jobs);
        config.wire = r.value("wire", config.wire);
    }
    if (j.contains("cross_shadow"))
        config.cross_shadow = dataset_spec_from_json(j.at("cross_shadow"));
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    ExperimentConfig config;
    apply_config_json(config, buf.str());
    return config;
}

void rebuild_summary(const std::string& dir) {
    // Re-aggregate from on-disk report.json files. Methods sorted by name,
    // seeds ascending, so the output is deterministic.
    std::map<std::string, std::map<std::uint64_t, EvalResult>> cells;
    std::vector<double> target_auc;
    std::map<std::uint64_t, double> target_by_seed;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.path().filename() != "report.json") continue;
        std::ifstream in(entry.path());
        std::stringstream buf;
        buf << in.rdbuf();
        json j = json::parse(buf.str(), nullptr, false);
        if (j.is_discarded()) continue;
        if (j.contains("test_auc")) {
            target_by_seed[j.value("seed", 0ULL)] = j.at("test_auc").get<double>();
            continue;
        }
        if (!j.value("ok", false)) continue;
        EvalResult r;
        r.auc = j.at("auc").get<double>();
        r.fidelity = j.at("fidelity").get<double>();
        r.rank_corr = j.at("rank_corr").get<double>();
        cells[j.at("method").get<std::string>()][j.value("seed", 0ULL)] = r;
    }
    for (auto& [seed, auc] : target_by_seed) target_auc.push_back(auc);

    ExperimentConfig config;
    config.methods.clear();
    for (auto& [method, _] : cells) config.methods.push_back(method);
    std::set<std::uint64_t> seed_set;
    for (auto& [method, by_seed] : cells)
        for (auto& [seed, _] : by_seed) seed_set.insert(seed);
    config.seeds.assign(seed_set.begin(), seed_set.end());

    ExperimentResult result;
    result.target_test_auc = target_auc;
    for (auto& [method, by_seed] : cells) {
        std::vector<EvalResult> per_seed;
        for (auto& [seed, r] : by_seed) per_seed.push_back(r);
        result.by_method[method] = aggregate(per_seed);
    }
    write_text_file(dir + "/summary.csv", summary_csv(config, result));
}

}  // namespace gsteal
