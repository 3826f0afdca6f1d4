#include "bagsel/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bagsel/artifacts.hpp"
#include "bagsel/fsio.hpp"
#include "bagsel/importance.hpp"
#include "bagsel/parallel.hpp"
#include "bagsel/pipeline.hpp"
#include "json.hpp"

namespace bagsel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = "out";
    int threads = 0;

    RunConfig load_config() const {
        RunConfig config;
        if (!config_path.empty()) config = RunConfig::from_json_file(config_path);
        if (seed_set) config.seed = seed;
        config.validate();
        return config;
    }
};

std::string command_hash(const std::string& command, const RunConfig& config,
                         const json& extra) {
    return fnv1a_hex(
        json{{"command", command}, {"config", config.to_json()}, {"extra", extra}}.dump());
}

// --- stage persistence helpers -------------------------------------------

void save_best_params(const fs::path& out_dir,
                      const std::map<LearnerKind, HyperParams>& best,
                      const std::string& hash) {
    json params = json::object();
    for (const auto& [kind, p] : best) params[to_string(kind)] = p.to_json();
    write_file_atomic(out_dir / "tuning" / "best_params.json",
                      json{{"format", "bagsel-tuned-params"},
                           {"version", 1},
                           {"config_hash", hash},
                           {"params", std::move(params)}}
                              .dump(1) +
                          "\n");
}

std::map<LearnerKind, HyperParams> load_best_params(const fs::path& out_dir) {
    const fs::path path = out_dir / "tuning" / "best_params.json";
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IngestError("cannot parse " + path.string() + ": " + e.what());
    }
    std::map<LearnerKind, HyperParams> best;
    for (const auto& [kind, p] : j.at("params").items())
        best[learner_from_string(kind)] = HyperParams::from_json(p);
    return best;
}

std::string tuning_table_csv(const GridSearchResult& result, const std::string& hash) {
    std::ostringstream os;
    os.precision(17);
    os << "# config_hash=" << hash << "\n";
    for (const auto& [name, value] : result.table.front().axis_values) os << name << ',';
    os << "objective,failed\n";
    for (const auto& point : result.table) {
        for (const auto& [name, value] : point.axis_values) os << value << ',';
        os << point.objective << ',' << (point.failed ? 1 : 0) << '\n';
    }
    return os.str();
}

void write_tuning_tables(const fs::path& out_dir,
                         const std::map<LearnerKind, GridSearchResult>& tables,
                         const std::string& hash) {
    for (const auto& [kind, result] : tables)
        write_file_atomic(out_dir / "tuning" / (std::string(to_string(kind)) + "_table.csv"),
                          tuning_table_csv(result, hash));
}

fs::path bagging_dir(const fs::path& out_dir, int split, LearnerKind kind) {
    return out_dir / "baggings" / ("split" + std::to_string(split)) / to_string(kind);
}

void write_failed_marker(const fs::path& out_dir, const std::string& message) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) return;
    std::ofstream out(out_dir / "FAILED");
    out << message << "\n";
}

// --- commands --------------------------------------------------------------

int cmd_ingest(const GlobalOptions& global, const std::string& input,
               const std::string& schema_path, const std::string& stage_str,
               const std::string& out, const std::string& report_path) {
    const RunConfig config = global.load_config();
    const Stage stage = stage_from_string(stage_str);
    const DatasetSchema schema = DatasetSchema::from_json_file(schema_path);

    IngestReport report;
    const FeatureMatrix m = load_dataset(input, schema, stage, &report);

    const std::string hash = command_hash(
        "ingest", config,
        json{{"csv", fnv1a_hex(read_file(input))},
             {"schema", fnv1a_hex(schema.to_json_string())},
             {"stage", to_string(stage)}});
    save_features_file(out, m, hash);

    json jr;
    jr["format"] = "bagsel-ingest-report";
    jr["config_hash"] = hash;
    jr["row_count"] = report.row_count;
    jr["label_histogram"] = json{{"F", report.label_histogram[0]},
                                 {"G", report.label_histogram[1]},
                                 {"W", report.label_histogram[2]}};
    jr["feature_names"] = report.feature_names;
    jr["log"] = report.log;
    if (!report_path.empty()) write_file_atomic(report_path, jr.dump(1) + "\n");

    std::cout << "ingested " << report.row_count << " rows, " << report.feature_names.size()
              << " features (F=" << report.label_histogram[0]
              << " G=" << report.label_histogram[1] << " W=" << report.label_histogram[2]
              << ") -> " << out << "\n";
    return kExitOk;
}

int cmd_synth(const GlobalOptions& global, const std::string& out,
              const std::string& schema_out, const SyntheticCounts& counts) {
    const RunConfig config = global.load_config();
    const SyntheticCsv synth = synthetic_unbalanced_csv(counts, config.seed);
    const std::string hash = command_hash("synth", config,
                                          json{{"fair", counts.fair},
                                               {"good", counts.good},
                                               {"weak", counts.weak}});
    write_file_atomic(out, "# config_hash=" + hash + "\n" + synth.csv);
    if (!schema_out.empty()) {
        json js = json::parse(synth.schema.to_json_string());
        js["config_hash"] = hash;
        write_file_atomic(schema_out, js.dump(2) + "\n");
    }
    std::cout << "wrote " << (counts.fair + counts.good + counts.weak) << " rows -> " << out
              << "\n";
    return kExitOk;
}

int cmd_pca(const GlobalOptions& global, const std::string& features_path,
            const std::string& out, int components) {
    const RunConfig config = global.load_config();
    const FeatureMatrix m = load_features_file(features_path);
    const PcaResult pca = pca_project(m, components);

    const std::string hash = command_hash(
        "pca", config,
        json{{"features", fnv1a_hex(read_file(features_path))}, {"k", components}});

    std::ostringstream os;
    os.precision(17);
    os << "# config_hash=" << hash << "\n";
    os << "# explained_variance_ratio=";
    for (int c = 0; c < components; ++c)
        os << (c ? "," : "") << pca.explained_variance_ratio(c);
    os << "\nid";
    for (int c = 0; c < components; ++c) os << ",pc" << c + 1;
    os << ",label\n";
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        os << m.instance_ids[r];
        for (int c = 0; c < components; ++c)
            os << ',' << pca.projected(static_cast<Eigen::Index>(r), c);
        os << ',' << to_string(m.labels[r]) << '\n';
    }
    write_file_atomic(out, os.str());
    std::cout << "wrote " << m.n_rows() << " projected points -> " << out << "\n";
    return kExitOk;
}

int cmd_tune(const GlobalOptions& global, const std::string& features_path,
             const std::string& grid_path) {
    const RunConfig config = global.load_config();
    const FeatureMatrix features = load_features_file(features_path);
    const std::string hash = command_hash(
        "tune", config, json{{"features", fnv1a_hex(read_file(features_path))}});

    if (!grid_path.empty()) {
        // Explicit grid spec for a single kind.
        ParamGrid grid = ParamGrid::from_json_string(read_file(grid_path));
        const Split initial = outer_splits(features, config).front();
        const GridSearchResult result = grid_search(grid, features.subset(initial.train_indices));
        write_file_atomic(fs::path(global.out_dir) / "tuning" /
                              (std::string(to_string(grid.kind)) + "_table.csv"),
                          tuning_table_csv(result, hash));
        auto best = std::map<LearnerKind, HyperParams>{{grid.kind, result.best}};
        save_best_params(global.out_dir, best, hash);
        std::cout << "tuned " << to_string(grid.kind) << ": "
                  << result.best.describe(grid.kind) << "\n";
        return kExitOk;
    }

    std::map<LearnerKind, GridSearchResult> tables;
    const auto best = tune_all(features, config, &tables);
    write_tuning_tables(global.out_dir, tables, hash);
    save_best_params(global.out_dir, best, hash);
    for (const auto& [kind, params] : best)
        std::cout << "tuned " << to_string(kind) << ": " << params.describe(kind) << "\n";
    return kExitOk;
}

int cmd_bag(const GlobalOptions& global, const std::string& features_path, int only_split,
            const std::string& only_kind) {
    const RunConfig config = global.load_config();
    const FeatureMatrix features = load_features_file(features_path);
    const std::string hash = command_hash(
        "bag", config, json{{"features", fnv1a_hex(read_file(features_path))}});

    std::map<LearnerKind, HyperParams> best;
    if (fs::exists(fs::path(global.out_dir) / "tuning" / "best_params.json")) {
        best = load_best_params(global.out_dir);
    } else {
        std::cout << "no tuned parameters found; running grid search first\n";
        best = tune_all(features, config, nullptr);
        save_best_params(global.out_dir, best, hash);
    }

    const std::vector<Split> splits = outer_splits(features, config);
    for (int i = 0; i < config.n_outer_splits; ++i) {
        if (only_split >= 0 && i != only_split) continue;
        const FeatureMatrix train = features.subset(splits[static_cast<std::size_t>(i)].train_indices);
        for (LearnerKind kind : config.learners) {
            if (!only_kind.empty() && only_kind != to_string(kind)) continue;
            if (!best.contains(kind))
                throw DependencyError(std::string("no tuned parameters for kind ") +
                                      to_string(kind));
            const BaggedModel b =
                build_bagging(kind, best.at(kind), train, bagging_config_for(config, i, kind));
            save_bagging(bagging_dir(global.out_dir, i, kind), b, hash);
            std::cout << "split " << i << " " << to_string(kind) << ": " << b.members.size()
                      << "/" << config.n_subsplits << " candidates admitted\n";
        }
    }
    return kExitOk;
}

int cmd_select(const GlobalOptions& global, const std::string& features_path) {
    const RunConfig config = global.load_config();
    const FeatureMatrix features = load_features_file(features_path);

    std::map<LearnerKind, HyperParams> best;
    if (fs::exists(fs::path(global.out_dir) / "tuning" / "best_params.json")) {
        best = load_best_params(global.out_dir);
    } else {
        std::cout << "no tuned parameters found; running grid search first\n";
        best = tune_all(features, config, nullptr);
    }

    // Prebuilt baggings are required here; `bag` (or `pipeline`) creates them.
    std::map<std::pair<int, LearnerKind>, BaggedModel> prebuilt;
    for (int i = 0; i < config.n_outer_splits; ++i) {
        for (LearnerKind kind : config.learners) {
            const fs::path dir = bagging_dir(global.out_dir, i, kind);
            if (!fs::exists(dir / "manifest.json"))
                throw DependencyError("missing bagging for (split " + std::to_string(i) +
                                      ", kind " + to_string(kind) + "); run `bag` first");
            prebuilt[{i, kind}] = load_bagging(dir);
        }
    }

    const PipelineResult result = run_pipeline(features, config, &best, &prebuilt);
    write_selection_artifacts(global.out_dir, result);
    std::cout << (result.selection.winner
                      ? "winner: " + result.selection.winner->name()
                      : "winner: none - " + result.selection.no_winner_reason)
              << "\n";
    return kExitOk;
}

int cmd_pipeline(const GlobalOptions& global, const std::string& features_path) {
    const RunConfig config = global.load_config();
    const FeatureMatrix features = load_features_file(features_path);

    const PipelineResult result = run_pipeline(features, config);
    const fs::path out_dir(global.out_dir);

    write_file_atomic(out_dir / "run_config.json",
                      json{{"format", "bagsel-run-config"},
                           {"config_hash", result.config_hash},
                           {"config", config.to_json()},
                           {"features_hash", result.features_hash}}
                              .dump(1) +
                          "\n");
    write_tuning_tables(out_dir, result.tuning_tables, result.config_hash);
    save_best_params(out_dir, result.tuned_params, result.config_hash);
    for (const auto& sb : result.splits)
        for (const auto& [kind, bagging] : sb.baggings)
            save_bagging(bagging_dir(out_dir, sb.split_index, kind), bagging,
                         result.config_hash);
    write_selection_artifacts(out_dir, result);

    std::cout << (result.selection.winner
                      ? "winner: " + result.selection.winner->name()
                      : "winner: none - " + result.selection.no_winner_reason)
              << "\n";
    std::cout << "artifacts in " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_report(const GlobalOptions& global, const std::string& artifacts,
               const std::string& format, const std::string& out) {
    (void)global;
    const fs::path dir(artifacts);
    if (!fs::exists(dir / "selection_report.json"))
        throw DependencyError("missing artifact " + (dir / "selection_report.json").string());
    const json report = json::parse(read_file(dir / "selection_report.json"));

    std::string rendered;
    if (format == "text") {
        rendered = render_selection_text(report);
    } else if (format == "json") {
        rendered = report.dump(1) + "\n";
    } else if (format == "csv") {
        std::ostringstream os;
        os.precision(17);
        os << "# config_hash=" << report.at("config_hash").get<std::string>() << "\n";
        if (report.contains("confusion_matrix") && !report.at("confusion_matrix").is_null()) {
            os << "# confusion_matrix rows=actual\nactual,F,G,W\n";
            const json& counts = report.at("confusion_matrix").at("counts");
            const char* names[3] = {"F", "G", "W"};
            for (int r = 0; r < 3; ++r) {
                os << names[r];
                for (int c = 0; c < 3; ++c) os << ',' << counts.at(r).at(c).get<std::int64_t>();
                os << '\n';
            }
            os << "# class_report rows=actual\nclass,precision,recall,f_measure,false_positive_rate\n";
            auto cell = [](const json& v) {
                return v.is_null() ? std::string("") : json(v).dump();
            };
            const json& rep = report.at("class_report").at("rows_actual");
            for (const char* c : {"F", "G", "W"}) {
                const json& s = rep.at("per_class").at(c);
                os << c << ',' << cell(s.at("precision")) << ',' << cell(s.at("recall")) << ','
                   << cell(s.at("f_measure")) << ',' << cell(s.at("false_positive_rate"))
                   << '\n';
            }
            os << "accuracy," << rep.at("accuracy").get<double>() << "\n";
        }
        os << "# base_learner_comparison\nname,accuracy,mean_averaged_gini,significant\n";
        for (const auto& e : report.at("base_learner_comparison")) {
            os << e.at("name").get<std::string>() << ',' << e.at("accuracy").get<double>()
               << ',' << e.at("mean_averaged_gini").get<double>() << ','
               << (e.at("significant").get<bool>() ? 1 : 0) << '\n';
        }
        rendered = os.str();
    } else {
        throw ValidationError("unknown report format '" + format + "'");
    }

    if (out.empty())
        std::cout << rendered;
    else
        write_file_atomic(out, rendered);
    return kExitOk;
}

int cmd_importance(const GlobalOptions& global, const std::string& features_path,
                   const std::string& bagging_path, const std::string& out) {
    const RunConfig config = global.load_config();
    const FeatureMatrix features = load_features_file(features_path);
    const BaggedModel bagging = load_bagging(bagging_path);

    const ImportanceRanking ranking =
        averaged_importance(bagging, features, config.importance_repeats,
                            mix_seed(config.seed, seed_tag::kImportance));

    const std::string hash = command_hash(
        "importance", config,
        json{{"features", fnv1a_hex(read_file(features_path))},
             {"bagging", to_string(bagging.kind)},
             {"n_repeats", config.importance_repeats}});

    std::ostringstream os;
    os.precision(17);
    os << "# config_hash=" << hash << "\n";
    os << "# method=" << ranking.method << "\n";
    os << "feature,mean_importance,rank\n";
    for (std::size_t f = 0; f < ranking.feature_names.size(); ++f)
        os << ranking.feature_names[f] << ',' << ranking.mean_importance[f] << ','
           << ranking.rank[f] << '\n';
    write_file_atomic(out, os.str());
    std::cout << "wrote importance ranking for " << ranking.feature_names.size()
              << " features -> " << out << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"bagging-ensemble model selection toolkit"};
    app.require_subcommand(1);
    app.fallthrough(true);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "run config JSON file");
    auto* seed_opt = app.add_option("--seed", global.seed, "override the config seed");
    app.add_option("--out-dir", global.out_dir, "artifacts directory")
        ->capture_default_str();
    app.add_option("--threads", global.threads, "worker threads (0 = auto)");

    // ingest
    std::string in_input, in_schema, in_stage = "20", in_out = "features.json", in_report;
    auto* ingest = app.add_subcommand("ingest", "load a grade CSV into a features file");
    ingest->add_option("--input", in_input, "grade CSV")->required();
    ingest->add_option("--schema", in_schema, "schema JSON")->required();
    ingest->add_option("--stage", in_stage, "course stage: 20 or 50")->capture_default_str();
    ingest->add_option("--out", in_out, "features file to write")->capture_default_str();
    ingest->add_option("--report", in_report, "ingestion report JSON to write");

    // synth
    std::string sy_out = "synthetic.csv", sy_schema;
    SyntheticCounts sy_counts;
    auto* synth = app.add_subcommand("synth", "generate an unbalanced synthetic grade CSV");
    synth->add_option("--out", sy_out, "CSV to write")->capture_default_str();
    synth->add_option("--schema-out", sy_schema, "schema JSON to write");
    synth->add_option("--fair", sy_counts.fair, "class F count")->capture_default_str();
    synth->add_option("--good", sy_counts.good, "class G count")->capture_default_str();
    synth->add_option("--weak", sy_counts.weak, "class W count")->capture_default_str();

    // pca
    std::string pc_features, pc_out = "pca.csv";
    int pc_components = 2;
    auto* pca = app.add_subcommand("pca", "project the features to principal components");
    pca->add_option("--features", pc_features, "features file")->required();
    pca->add_option("--out", pc_out, "CSV to write")->capture_default_str();
    pca->add_option("--components", pc_components, "component count")->capture_default_str();

    // tune
    std::string tu_features, tu_grid;
    auto* tune = app.add_subcommand("tune", "grid-search hyper-parameters per learner kind");
    tune->add_option("--features", tu_features, "features file")->required();
    tune->add_option("--grid", tu_grid, "explicit grid spec JSON (single kind)");

    // bag
    std::string bg_features, bg_kind;
    int bg_split = -1;
    auto* bag = app.add_subcommand("bag", "build admission-filtered baggings per split/kind");
    bag->add_option("--features", bg_features, "features file")->required();
    bag->add_option("--split", bg_split, "only this outer split index");
    bag->add_option("--kind", bg_kind, "only this learner kind");

    // select
    std::string se_features;
    auto* select = app.add_subcommand("select", "evaluate all ensembles from saved baggings");
    select->add_option("--features", se_features, "features file")->required();

    // pipeline
    std::string pl_features;
    auto* pipeline =
        app.add_subcommand("pipeline", "tune, bag, evaluate and select in one run");
    pipeline->add_option("--features", pl_features, "features file")->required();

    // report
    std::string rp_artifacts, rp_format = "text", rp_out;
    auto* report = app.add_subcommand("report", "render the selection report");
    report->add_option("--artifacts", rp_artifacts, "artifacts directory")->required();
    report->add_option("--format", rp_format, "text, json or csv")->capture_default_str();
    report->add_option("--out", rp_out, "write here instead of stdout");

    // importance
    std::string im_features, im_bagging, im_out = "importance.csv";
    auto* importance =
        app.add_subcommand("importance", "averaged permutation importance of a bagging");
    importance->add_option("--features", im_features, "features file")->required();
    importance->add_option("--bagging", im_bagging, "bagging directory")->required();
    importance->add_option("--out", im_out, "CSV to write")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            return app.exit(e);
        }
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    global.seed_set = seed_opt->count() > 0;
    if (global.threads > 0) set_parallel_threads(global.threads);

    const bool stage_command = pipeline->parsed() || select->parsed() || bag->parsed();
    try {
        if (ingest->parsed())
            return cmd_ingest(global, in_input, in_schema, in_stage, in_out, in_report);
        if (synth->parsed()) return cmd_synth(global, sy_out, sy_schema, sy_counts);
        if (pca->parsed()) return cmd_pca(global, pc_features, pc_out, pc_components);
        if (tune->parsed()) return cmd_tune(global, tu_features, tu_grid);
        if (bag->parsed()) return cmd_bag(global, bg_features, bg_split, bg_kind);
        if (select->parsed()) return cmd_select(global, se_features);
        if (pipeline->parsed()) return cmd_pipeline(global, pl_features);
        if (report->parsed()) return cmd_report(global, rp_artifacts, rp_format, rp_out);
        if (importance->parsed())
            return cmd_importance(global, im_features, im_bagging, im_out);
        std::cerr << "error: no command given\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        if (stage_command) write_failed_marker(global.out_dir, e.what());
        return kExitValidation;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IngestError& e) {
        std::cerr << "ingestion error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const StratificationError& e) {
        std::cerr << "stratification error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const UndefinedMetricError& e) {
        std::cerr << "metric error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        if (stage_command) write_failed_marker(global.out_dir, e.what());
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (stage_command) write_failed_marker(global.out_dir, e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (stage_command) write_failed_marker(global.out_dir, e.what());
        return kExitRuntime;
    }
}

}  // namespace bagsel::cli
