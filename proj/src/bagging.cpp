#include "bagsel/bagging.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <sstream>

#include "bagsel/fsio.hpp"
#include "bagsel/parallel.hpp"
#include "bagsel/rng.hpp"
#include "json.hpp"

namespace bagsel {

using nlohmann::json;

void BaggingConfig::validate() const {
    if (n_subsplits < 1) throw ValidationError("n_subsplits must be >= 1");
    if (!(sub_train_fraction > 0.0 && sub_train_fraction < 1.0))
        throw ValidationError("sub_train_fraction must lie in (0,1)");
    if (!(gini_admission_threshold >= -1.0 && gini_admission_threshold <= 1.0))
        throw ValidationError("gini_admission_threshold must lie in [-1,1]");
}

Split bagging_subsplit(const BaggingConfig& config, std::span<const ClassLabel> labels,
                       int index) {
    SplitPlan plan;
    plan.train_fraction = config.sub_train_fraction;
    plan.seed = mix_seed(config.seed, seed_tag::kBagging, static_cast<std::uint64_t>(index));
    plan.stratified = true;
    return stratified_split(labels, plan);
}

BaggedModel build_bagging(LearnerKind kind, const HyperParams& params,
                          const FeatureMatrix& train_data, const BaggingConfig& config) {
    config.validate();
    const auto histogram = train_data.label_histogram();
    for (int c = 0; c < kNumClasses; ++c)
        if (histogram[c] == 0)
            throw ValidationError(std::string("bagging training data is missing class ") +
                                  to_string(kClassOrder[c]));

    struct Candidate {
        TrainedModel model;
        AveragedGini gini;
        bool kept = false;
    };
    std::vector<Candidate> candidates(static_cast<std::size_t>(config.n_subsplits));

    parallel_for(candidates.size(), [&](std::size_t i) {
        const Split split = bagging_subsplit(config, train_data.labels, static_cast<int>(i));
        const FeatureMatrix sub_train = train_data.subset(split.train_indices);
        const FeatureMatrix sub_test = train_data.subset(split.test_indices);

        const std::uint64_t model_seed =
            mix_seed(config.seed, seed_tag::kModel, static_cast<std::uint64_t>(i),
                     static_cast<std::uint64_t>(kind));
        Candidate& cand = candidates[i];
        cand.model = train(kind, params, sub_train, model_seed);
        cand.gini = averaged_gini(cand.model.score(sub_test), sub_test.labels);
        cand.kept = cand.gini.mean >= config.gini_admission_threshold;
    });

    BaggedModel out;
    out.kind = kind;
    out.params = params;
    double best = -2.0;
    for (int i = 0; i < config.n_subsplits; ++i) {
        const auto& cand = candidates[static_cast<std::size_t>(i)];
        out.admission_log.push_back({i, cand.gini, cand.kept});
        best = std::max(best, cand.gini.mean);
        if (cand.kept) {
            out.members.push_back(cand.model);
            out.member_subsplits.push_back(i);
        }
    }
    if (out.members.empty()) {
        std::ostringstream os;
        os << "no candidate reached the admission threshold "
           << config.gini_admission_threshold << " (best averaged Gini " << best << ")";
        throw EmptyBaggingError(os.str(), best);
    }
    return out;
}

ClassScores bagging_score(const BaggedModel& b, const Eigen::MatrixXd& rows) {
    if (b.members.empty()) throw ValidationError("bagging has no members");
    ClassScores out;
    out.scores = Eigen::MatrixXd::Zero(rows.rows(), kNumClasses);
    for (const auto& member : b.members) out.scores += member.score(rows).scores;
    out.scores /= static_cast<double>(b.members.size());
    out.normalized = false;
    return out;
}

void save_bagging(const std::filesystem::path& dir, const BaggedModel& b,
                  const std::string& config_hash) {
    std::filesystem::create_directories(dir / "members");

    json manifest;
    manifest["format"] = "bagsel-bagging";
    manifest["version"] = 1;
    manifest["config_hash"] = config_hash;
    manifest["kind"] = to_string(b.kind);
    manifest["params"] = b.params.to_json();
    manifest["member_subsplits"] = b.member_subsplits;
    manifest["n_members"] = b.members.size();
    write_file_atomic(dir / "manifest.json", manifest.dump(1) + "\n");

    for (std::size_t i = 0; i < b.members.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%03zu.json", i);
        write_file_atomic(dir / "members" / name, b.members[i].to_json().dump() + "\n");
    }

    std::ostringstream csv;
    csv << "# config_hash=" << config_hash << "\n";
    csv << "subsplit,gini_F,gini_G,gini_W,mean,kept\n";
    csv.precision(17);
    for (const auto& rec : b.admission_log) {
        csv << rec.subsplit << ',' << rec.gini.per_class[0] << ',' << rec.gini.per_class[1]
            << ',' << rec.gini.per_class[2] << ',' << rec.gini.mean << ','
            << (rec.kept ? 1 : 0) << '\n';
    }
    write_file_atomic(dir / "admission_log.csv", csv.str());
}

BaggedModel load_bagging(const std::filesystem::path& dir) {
    json manifest;
    try {
        manifest = json::parse(read_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw IngestError("cannot parse bagging manifest in " + dir.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "bagsel-bagging")
        throw IngestError(dir.string() + " does not hold a bagsel bagging");

    BaggedModel b;
    b.kind = learner_from_string(manifest.at("kind").get<std::string>());
    b.params = HyperParams::from_json(manifest.at("params"));
    b.member_subsplits = manifest.at("member_subsplits").get<std::vector<int>>();
    const auto n = manifest.at("n_members").get<std::size_t>();
    for (std::size_t i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%03zu.json", i);
        b.members.push_back(
            TrainedModel::from_json(json::parse(read_file(dir / "members" / name))));
    }

    // admission_log.csv: skip the hash comment and the header
    std::istringstream log(read_file(dir / "admission_log.csv"));
    std::string line;
    while (std::getline(log, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("subsplit", 0) == 0) continue;
        AdmissionRecord rec;
        std::array<double, 3> g{};
        int kept = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%d", &rec.subsplit, &g[0], &g[1],
                        &g[2], &rec.gini.mean, &kept) != 6)
            throw IngestError("malformed admission log line: " + line);
        rec.gini.per_class = g;
        rec.kept = kept != 0;
        b.admission_log.push_back(rec);
    }
    return b;
}

}  // namespace bagsel
