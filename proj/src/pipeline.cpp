#include "bagsel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "bagsel/artifacts.hpp"
#include "bagsel/fsio.hpp"
#include "bagsel/parallel.hpp"
#include "bagsel/rng.hpp"

namespace bagsel {

using nlohmann::json;

void RunConfig::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("train_fraction must lie in (0,1)");
    if (n_outer_splits < 1) throw ValidationError("n_outer_splits must be >= 1");
    if (n_subsplits < 1) throw ValidationError("n_subsplits must be >= 1");
    if (!(gini_admission_threshold >= -1.0 && gini_admission_threshold <= 1.0))
        throw ValidationError("gini_admission_threshold must lie in [-1,1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0,1]");
    if (n_sim < 100 || n_sim > 1000000)
        throw ValidationError("n_sim must lie in [100, 1000000]");
    if (learners.empty()) throw ValidationError("at least one learner kind is required");
    std::set<LearnerKind> seen(learners.begin(), learners.end());
    if (seen.size() != learners.size())
        throw ValidationError("learner kinds must be unique");
    if (tuning_splits < 1) throw ValidationError("tuning_splits must be >= 1");
    if (grid_variant != 1 && grid_variant != 2)
        throw ValidationError("grid_variant must be 1 or 2");
    if (importance_repeats < 1) throw ValidationError("importance_repeats must be >= 1");
}

json RunConfig::to_json() const {
    json kinds = json::array();
    for (LearnerKind k : learners) kinds.push_back(to_string(k));
    return json{{"seed", seed},
                {"train_fraction", train_fraction},
                {"n_outer_splits", n_outer_splits},
                {"n_subsplits", n_subsplits},
                {"gini_admission_threshold", gini_admission_threshold},
                {"alpha", alpha},
                {"n_sim", n_sim},
                {"selection_mode", to_string(selection_mode)},
                {"threshold_method", to_string(threshold_method)},
                {"learners", std::move(kinds)},
                {"tuning_splits", tuning_splits},
                {"grid_variant", grid_variant},
                {"importance_repeats", importance_repeats},
                {"base_params", base_params.to_json()}};
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.n_outer_splits = j.value("n_outer_splits", c.n_outer_splits);
    c.n_subsplits = j.value("n_subsplits", c.n_subsplits);
    c.gini_admission_threshold =
        j.value("gini_admission_threshold", c.gini_admission_threshold);
    c.alpha = j.value("alpha", c.alpha);
    c.n_sim = j.value("n_sim", c.n_sim);
    if (j.contains("selection_mode"))
        c.selection_mode = selection_mode_from_string(j.at("selection_mode").get<std::string>());
    if (j.contains("threshold_method"))
        c.threshold_method =
            threshold_method_from_string(j.at("threshold_method").get<std::string>());
    if (j.contains("learners")) {
        c.learners.clear();
        for (const auto& k : j.at("learners"))
            c.learners.push_back(learner_from_string(k.get<std::string>()));
    }
    c.tuning_splits = j.value("tuning_splits", c.tuning_splits);
    c.grid_variant = j.value("grid_variant", c.grid_variant);
    c.importance_repeats = j.value("importance_repeats", c.importance_repeats);
    if (j.contains("base_params")) c.base_params = HyperParams::from_json(j.at("base_params"));
    c.validate();
    return c;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw ValidationError("cannot parse config file " + path.string() + ": " + e.what());
    }
}

std::string RunConfig::hash() const { return fnv1a_hex(to_json().dump()); }

std::vector<Split> outer_splits(const FeatureMatrix& features, const RunConfig& config) {
    std::vector<Split> out;
    for (int i = 0; i < config.n_outer_splits; ++i) {
        SplitPlan plan;
        plan.train_fraction = config.train_fraction;
        plan.seed = mix_seed(config.seed, seed_tag::kOuterSplit, static_cast<std::uint64_t>(i));
        out.push_back(stratified_split(features, plan));
    }
    return out;
}

std::map<LearnerKind, HyperParams> tune_all(const FeatureMatrix& features,
                                            const RunConfig& config,
                                            std::map<LearnerKind, GridSearchResult>* tables) {
    // Tuning sees only the initial split's training partition, never test rows.
    const Split initial = outer_splits(features, config).front();
    const FeatureMatrix train = features.subset(initial.train_indices);

    std::map<LearnerKind, HyperParams> best;
    for (LearnerKind kind : config.learners) {
        ParamGrid grid = default_grid(kind, features.n_features(), config.grid_variant);
        grid.base = config.base_params;
        grid.n_splits = config.tuning_splits;
        grid.seed = mix_seed(config.seed, seed_tag::kTuning, static_cast<std::uint64_t>(kind));
        GridSearchResult result = grid_search(grid, train);
        best[kind] = result.best;
        if (tables) (*tables)[kind] = std::move(result);
    }
    return best;
}

BaggingConfig bagging_config_for(const RunConfig& config, int split_index, LearnerKind kind) {
    BaggingConfig bc;
    bc.n_subsplits = config.n_subsplits;
    bc.sub_train_fraction = 0.7;
    bc.gini_admission_threshold = config.gini_admission_threshold;
    bc.seed = mix_seed(config.seed, seed_tag::kBagging, static_cast<std::uint64_t>(split_index),
                       static_cast<std::uint64_t>(kind));
    return bc;
}

namespace {

ThresholdSet fit_thresholds(const ClassScores& scores, std::span<const ClassLabel> labels,
                            ThresholdMethod method) {
    ThresholdSet taus;
    for (ClassLabel c : kClassOrder) {
        std::vector<int> positives(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) positives[i] = labels[i] == c;
        const Eigen::VectorXd col = scores.scores.col(static_cast<int>(c));
        const double tau = optimal_threshold(
            std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
            positives, method);
        switch (c) {
            case ClassLabel::F: taus.tau_f = tau; break;
            case ClassLabel::G: taus.tau_g = tau; break;
            case ClassLabel::W: taus.tau_w = tau; break;
        }
    }
    return taus;
}

double initial_split_accuracy(const ClassScores& combined, std::span<const ClassLabel> labels,
                              ThresholdMethod method) {
    const ClassScores renorm = normalize_scores(combined);
    const ThresholdSet taus = fit_thresholds(renorm, labels, method);
    const auto predicted = predict_classes(renorm, taus);
    const ConfusionMatrix m = confusion_matrix(labels, predicted);
    return static_cast<double>(m.trace()) / static_cast<double>(m.total());
}

const EnsembleEvaluation* find_eval(const std::vector<EnsembleEvaluation>& ranked,
                                    EnsembleId id) {
    for (const auto& eval : ranked)
        if (eval.id.bitmask == id.bitmask) return &eval;
    return nullptr;
}

bool eval_significant(const EnsembleEvaluation& eval, double alpha, SelectionMode mode) {
    for (const auto& se : eval.per_split) {
        if (mode == SelectionMode::Strict) {
            for (double p : se.p_class)
                if (p > alpha) return false;
        } else if (se.p_class[static_cast<int>(ClassLabel::W)] > alpha) {
            return false;
        }
    }
    return true;
}

}  // namespace

PipelineResult run_pipeline(const FeatureMatrix& features, const RunConfig& config,
                            const std::map<LearnerKind, HyperParams>* pretuned,
                            std::map<std::pair<int, LearnerKind>, BaggedModel>* prebuilt) {
    config.validate();
    features.validate();

    PipelineResult result;
    result.config = config;
    result.features_hash = fnv1a_hex(features_to_json_string(features, ""));
    result.config_hash = fnv1a_hex(config.to_json().dump() + result.features_hash);

    if (pretuned) {
        result.tuned_params = *pretuned;
        for (LearnerKind kind : config.learners)
            if (!result.tuned_params.contains(kind))
                throw DependencyError(std::string("no tuned parameters for kind ") +
                                      to_string(kind));
    } else {
        result.tuned_params = tune_all(features, config, &result.tuning_tables);
    }

    const std::vector<Split> splits = outer_splits(features, config);
    result.splits.resize(splits.size());
    for (std::size_t i = 0; i < splits.size(); ++i) {
        SplitBaggings& sb = result.splits[i];
        sb.split_index = static_cast<int>(i);
        sb.split = splits[i];
        const FeatureMatrix test = features.subset(splits[i].test_indices);
        sb.test_x = test.values;
        sb.test_labels = test.labels;
    }

    // Build (or adopt) one bagging per split and kind.
    for (std::size_t i = 0; i < result.splits.size(); ++i) {
        SplitBaggings& sb = result.splits[i];
        const FeatureMatrix train = features.subset(sb.split.train_indices);
        for (LearnerKind kind : config.learners) {
            const auto key = std::make_pair(static_cast<int>(i), kind);
            if (prebuilt && prebuilt->contains(key)) {
                sb.baggings[kind] = std::move(prebuilt->at(key));
            } else {
                sb.baggings[kind] =
                    build_bagging(kind, result.tuned_params.at(kind), train,
                                  bagging_config_for(config, static_cast<int>(i), kind));
            }
        }
    }

    // Null Gini distributions and per-kind normalized scores per split.
    for (std::size_t i = 0; i < result.splits.size(); ++i) {
        SplitBaggings& sb = result.splits[i];
        sb.null_dist = GiniNull::simulate(
            sb.test_labels, config.n_sim,
            mix_seed(config.seed, seed_tag::kPvalue, static_cast<std::uint64_t>(i)));
        sb.prepare();
    }

    // Every non-empty ensemble of the available baggings.
    const std::vector<EnsembleId> ids = enumerate_ensembles(config.learners);
    std::vector<EnsembleEvaluation> evals(ids.size());
    parallel_for(ids.size(), [&](std::size_t e) {
        evals[e] = evaluate_across_splits(ids[e], result.splits);
    });

    result.selection = select_best(evals, config.alpha, config.selection_mode);

    // Winner diagnostics and the base-learner comparison on the initial split.
    const SplitBaggings& initial = result.splits.front();
    for (LearnerKind kind : config.learners) {
        const EnsembleEvaluation* eval =
            find_eval(result.selection.ranked, EnsembleId::of({kind}));
        if (!eval) continue;
        PipelineResult::BaseEntry entry;
        entry.name = to_string(kind);
        entry.mean_averaged_gini = eval->mean_averaged_gini;
        entry.significant = eval_significant(*eval, config.alpha, config.selection_mode);
        entry.accuracy = initial_split_accuracy(eval->per_split.front().combined,
                                                initial.test_labels, config.threshold_method);
        result.base_comparison.push_back(std::move(entry));
    }

    const EnsembleEvaluation* chosen = nullptr;
    if (result.selection.winner)
        chosen = find_eval(result.selection.ranked, *result.selection.winner);
    else if (!result.selection.ranked.empty())
        chosen = &result.selection.ranked.front();

    if (chosen) {
        result.winner_scores = normalize_scores(chosen->per_split.front().combined);
        result.thresholds =
            fit_thresholds(result.winner_scores, initial.test_labels, config.threshold_method);
        result.predictions = predict_classes(result.winner_scores, result.thresholds);
        result.confusion = confusion_matrix(initial.test_labels, result.predictions);
        result.report_rows_actual = classification_report(result.confusion);
        result.report_rows_predicted = classification_report(result.confusion.transposed());

        PipelineResult::BaseEntry entry;
        entry.name = "ensemble";
        entry.mean_averaged_gini = chosen->mean_averaged_gini;
        entry.significant = result.selection.winner.has_value();
        entry.accuracy =
            static_cast<double>(result.confusion.trace()) /
            static_cast<double>(result.confusion.total());
        result.base_comparison.push_back(std::move(entry));
    }

    return result;
}

namespace {

json base_comparison_to_json(const std::vector<PipelineResult::BaseEntry>& entries) {
    json out = json::array();
    for (const auto& e : entries) {
        out.push_back(json{{"name", e.name},
                           {"accuracy", e.accuracy},
                           {"mean_averaged_gini", e.mean_averaged_gini},
                           {"significant", e.significant}});
    }
    return out;
}

json evaluation_to_json(const EnsembleEvaluation& eval) {
    json per_split = json::array();
    for (const auto& se : eval.per_split) {
        per_split.push_back(json{{"split", se.split_index},
                                 {"gini", averaged_gini_to_json(se.gini)},
                                 {"p_values",
                                  {{"F", se.p_class[0]},
                                   {"G", se.p_class[1]},
                                   {"W", se.p_class[2]},
                                   {"mean_statistic", se.p_mean}}}});
    }
    json members = json::array();
    for (LearnerKind k : eval.id.members()) members.push_back(to_string(k));
    return json{{"bitmask", eval.id.bitmask},
                {"members", std::move(members)},
                {"mean_averaged_gini", eval.mean_averaged_gini},
                {"per_split", std::move(per_split)}};
}

}  // namespace

void write_selection_artifacts(const std::filesystem::path& out_dir,
                               const PipelineResult& result) {
    const std::string& hash = result.config_hash;

    json report;
    report["format"] = "bagsel-selection";
    report["version"] = 1;
    report["config_hash"] = hash;
    report["features_hash"] = result.features_hash;
    report["config"] = result.config.to_json();
    report["mode"] = to_string(result.selection.mode);
    report["alpha"] = result.selection.alpha;
    report["splits"] = result.config.n_outer_splits;
    report["n_candidate_ensembles"] = result.selection.ranked.size();
    report["total_subsets_including_empty"] =
        (std::size_t{1} << result.config.learners.size());
    report["note"] =
        "enumeration covers every non-empty subset of the available baggings; the subset "
        "count quoted with the empty ensemble included is one higher";

    json tuned = json::object();
    for (const auto& [kind, params] : result.tuned_params)
        tuned[to_string(kind)] = params.to_json();
    report["tuned_params"] = std::move(tuned);

    if (result.selection.winner) {
        const EnsembleId id = *result.selection.winner;
        json members = json::array();
        for (LearnerKind k : id.members()) members.push_back(to_string(k));
        report["winner"] = json{{"bitmask", id.bitmask},
                                {"members", std::move(members)},
                                {"name", id.name()}};
    } else {
        report["winner"] = nullptr;
        report["no_winner_reason"] = result.selection.no_winner_reason;
    }

    if (!result.predictions.empty()) {
        report["thresholds"] = json{{"tau_F", result.thresholds.tau_f},
                                    {"tau_G", result.thresholds.tau_g},
                                    {"tau_W", result.thresholds.tau_w},
                                    {"method", to_string(result.config.threshold_method)},
                                    {"fitted_on", "initial split test sample"}};
        report["confusion_matrix"] = confusion_to_json(result.confusion, "actual");
        report["class_report"] =
            json{{"rows_actual", class_report_to_json(result.report_rows_actual)},
                 {"rows_predicted", class_report_to_json(result.report_rows_predicted)}};
        const EnsembleEvaluation* chosen =
            [&]() -> const EnsembleEvaluation* {
            for (const auto& eval : result.selection.ranked)
                if (result.selection.winner &&
                    eval.id.bitmask == result.selection.winner->bitmask)
                    return &eval;
            return result.selection.ranked.empty() ? nullptr
                                                   : &result.selection.ranked.front();
        }();
        if (chosen) {
            report["gini"] = json::array();
            for (const auto& se : chosen->per_split)
                report["gini"].push_back(averaged_gini_to_json(se.gini));
            report["p_values"] = json::array();
            for (const auto& se : chosen->per_split)
                report["p_values"].push_back(json{{"split", se.split_index},
                                                  {"F", se.p_class[0]},
                                                  {"G", se.p_class[1]},
                                                  {"W", se.p_class[2]},
                                                  {"mean_statistic", se.p_mean}});
        }
    }

    report["base_learner_comparison"] = base_comparison_to_json(result.base_comparison);

    json ranked = json::array();
    for (const auto& eval : result.selection.ranked) ranked.push_back(evaluation_to_json(eval));
    report["ranked"] = std::move(ranked);

    write_file_atomic(out_dir / "selection_report.json", report.dump(1) + "\n");
    write_file_atomic(out_dir / "ranked.csv",
                      ranked_table_csv(result.selection.ranked, hash));

    // ROC dumps for the reported ensemble's initial-split scores.
    if (!result.predictions.empty()) {
        const std::vector<ClassLabel>& labels = result.splits.front().test_labels;
        for (ClassLabel c : kClassOrder) {
            std::vector<int> positives(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) positives[i] = labels[i] == c;
            const Eigen::VectorXd col = result.winner_scores.scores.col(static_cast<int>(c));
            const RocCurve curve = RocCurve::from_scores(
                std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                positives);
            write_file_atomic(out_dir / (std::string("roc_") + to_string(c) + ".csv"),
                              roc_points_csv(curve, hash));
        }
    }

    std::ostringstream base_csv;
    base_csv << "# config_hash=" << hash << "\n";
    base_csv << "name,accuracy,mean_averaged_gini,significant\n";
    base_csv.precision(17);
    for (const auto& e : result.base_comparison)
        base_csv << e.name << ',' << e.accuracy << ',' << e.mean_averaged_gini << ','
                 << (e.significant ? 1 : 0) << '\n';
    write_file_atomic(out_dir / "base_comparison.csv", base_csv.str());
}

// ---------------------------------------------------------------------------
// Text rendering
// ---------------------------------------------------------------------------

namespace {

std::string pct(const json& v) {
    if (v.is_null()) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", v.get<double>() * 100.0);
    return buf;
}

std::string fixed2(const json& v) {
    if (v.is_null()) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v.get<double>());
    return buf;
}

void render_class_report(std::ostringstream& os, const json& rep) {
    os << "  class  precision  recall  f-measure  fpr\n";
    for (const char* c : {"F", "G", "W"}) {
        const json& s = rep.at("per_class").at(c);
        os << "  " << c << "      " << fixed2(s.at("precision")) << "       "
           << fixed2(s.at("recall")) << "    " << fixed2(s.at("f_measure")) << "       "
           << fixed2(s.at("false_positive_rate")) << "\n";
    }
    const json& m = rep.at("macro");
    os << "  avg    " << fixed2(m.at("precision")) << "       " << fixed2(m.at("recall"))
       << "    " << fixed2(m.at("f_measure")) << "       "
       << fixed2(m.at("false_positive_rate")) << "\n";
    os << "  accuracy " << pct(rep.at("accuracy")) << "\n";
}

}  // namespace

std::string render_selection_text(const json& report) {
    std::ostringstream os;
    os << "Selection report (mode " << report.at("mode").get<std::string>() << ", alpha "
       << report.at("alpha").get<double>() << ", " << report.at("splits").get<int>()
       << " splits)\n";
    os << "Candidate ensembles evaluated: "
       << report.at("n_candidate_ensembles").get<std::size_t>() << " (all non-empty subsets; "
       << report.at("total_subsets_including_empty").get<std::size_t>()
       << " subsets counting the empty one)\n";

    if (report.at("winner").is_null()) {
        os << "Winner: none - " << report.value("no_winner_reason", "") << "\n";
    } else {
        os << "Winner: " << report.at("winner").at("name").get<std::string>() << "\n";
    }

    if (report.contains("thresholds") && !report.at("thresholds").is_null()) {
        const json& t = report.at("thresholds");
        char buf[128];
        std::snprintf(buf, sizeof(buf), "Thresholds: tau_F=%.3f tau_G=%.3f tau_W=%.3f (%s)\n",
                      t.at("tau_F").get<double>(), t.at("tau_G").get<double>(),
                      t.at("tau_W").get<double>(), t.at("method").get<std::string>().c_str());
        os << buf;

        os << "Confusion matrix (rows = actual):\n";
        const json& counts = report.at("confusion_matrix").at("counts");
        os << "        F   G   W\n";
        const char* names[3] = {"F", "G", "W"};
        for (int r = 0; r < 3; ++r) {
            os << "  " << names[r] << "  ";
            for (int c = 0; c < 3; ++c) {
                char cell[16];
                std::snprintf(cell, sizeof(cell), "%4lld",
                              static_cast<long long>(counts.at(r).at(c).get<std::int64_t>()));
                os << cell;
            }
            os << "\n";
        }
        os << "Performance (rows = actual):\n";
        render_class_report(os, report.at("class_report").at("rows_actual"));
    }

    os << "Base-learner comparison (initial split accuracy):\n";
    for (const auto& e : report.at("base_learner_comparison")) {
        os << "  " << e.at("name").get<std::string>() << ": " << pct(e.at("accuracy"))
           << " (mean averaged Gini " << pct(e.at("mean_averaged_gini"))
           << (e.at("significant").get<bool>() ? ", significant" : "") << ")\n";
    }
    return os.str();
}

}  // namespace bagsel
