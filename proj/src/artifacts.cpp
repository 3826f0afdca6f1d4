#include "bagsel/artifacts.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "bagsel/fsio.hpp"

namespace bagsel {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open file " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IngestError("cannot write file " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json class_stats_to_json(const ClassStats& s) {
    auto field = [](const std::optional<double>& v) {
        return v ? json(*v) : json(nullptr);
    };
    return json{{"precision", field(s.precision)},
                {"recall", field(s.recall)},
                {"f_measure", field(s.f_measure)},
                {"false_positive_rate", field(s.false_positive_rate)}};
}

json class_report_to_json(const ClassReport& r) {
    json per_class;
    for (int c = 0; c < kNumClasses; ++c)
        per_class[to_string(kClassOrder[c])] = class_stats_to_json(r.per_class[c]);
    return json{{"per_class", std::move(per_class)},
                {"macro", class_stats_to_json(r.macro)},
                {"accuracy", r.accuracy}};
}

json confusion_to_json(const ConfusionMatrix& m, const std::string& rows_are) {
    json counts = json::array();
    for (const auto& row : m.counts) counts.push_back(row);
    return json{
        {"order", {"F", "G", "W"}}, {"rows_are", rows_are}, {"counts", std::move(counts)}};
}

json averaged_gini_to_json(const AveragedGini& g) {
    return json{{"F", g.per_class[0]},
                {"G", g.per_class[1]},
                {"W", g.per_class[2]},
                {"mean", g.mean}};
}

std::string roc_points_csv(const RocCurve& curve, const std::string& config_hash) {
    std::ostringstream os;
    os.precision(17);
    os << "# config_hash=" << config_hash << "\n";
    os << "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) os << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
    return os.str();
}

std::string ranked_table_csv(const std::vector<EnsembleEvaluation>& ranked,
                             const std::string& config_hash) {
    std::ostringstream os;
    os.precision(17);
    os << "# config_hash=" << config_hash << "\n";
    os << "rank,bitmask,members,mean_averaged_gini";
    const std::size_t n_splits = ranked.empty() ? 0 : ranked.front().per_split.size();
    for (std::size_t s = 0; s < n_splits; ++s) {
        os << ",s" << s << "_gini_mean,s" << s << "_gini_F,s" << s << "_gini_G,s" << s
           << "_gini_W,s" << s << "_p_F,s" << s << "_p_G,s" << s << "_p_W,s" << s << "_p_mean";
    }
    os << '\n';
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& eval = ranked[r];
        os << r + 1 << ',' << eval.id.bitmask << ',' << eval.id.name() << ','
           << eval.mean_averaged_gini;
        for (const auto& se : eval.per_split) {
            os << ',' << se.gini.mean << ',' << se.gini.per_class[0] << ','
               << se.gini.per_class[1] << ',' << se.gini.per_class[2] << ',' << se.p_class[0]
               << ',' << se.p_class[1] << ',' << se.p_class[2] << ',' << se.p_mean;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace bagsel
