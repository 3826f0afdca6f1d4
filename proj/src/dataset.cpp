#include "bagsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bagsel/fsio.hpp"
#include "bagsel/rng.hpp"
#include "json.hpp"

namespace bagsel {

using nlohmann::json;

const char* to_string(ClassLabel label) {
    switch (label) {
        case ClassLabel::F: return "F";
        case ClassLabel::G: return "G";
        case ClassLabel::W: return "W";
    }
    throw ValidationError("invalid class label");
}

ClassLabel label_from_string(const std::string& s) {
    if (s == "F") return ClassLabel::F;
    if (s == "G") return ClassLabel::G;
    if (s == "W") return ClassLabel::W;
    throw ValidationError("unknown class label '" + s + "'");
}

const char* to_string(Stage stage) {
    return stage == Stage::Stage20 ? "stage20" : "stage50";
}

Stage stage_from_string(const std::string& s) {
    if (s == "stage20" || s == "20") return Stage::Stage20;
    if (s == "stage50" || s == "50") return Stage::Stage50;
    throw ValidationError("unknown stage '" + s + "' (expected 20 or 50)");
}

ClassLabel label_targets(int final_grade) {
    if (final_grade < 0 || final_grade > 100)
        throw ValidationError("final grade " + std::to_string(final_grade) +
                              " outside [0,100]");
    if (final_grade >= 70) return ClassLabel::G;
    if (final_grade >= 51) return ClassLabel::F;
    return ClassLabel::W;
}

int round_half_away(double x) { return static_cast<int>(std::lround(x)); }

std::array<std::size_t, 3> FeatureMatrix::label_histogram() const {
    std::array<std::size_t, 3> h = {0, 0, 0};
    for (ClassLabel l : labels) ++h[static_cast<int>(l)];
    return h;
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    out.feature_names = feature_names;
    out.stage = stage;
    out.values.resize(static_cast<Eigen::Index>(indices.size()), values.cols());
    out.instance_ids.reserve(indices.size());
    out.labels.reserve(indices.size());
    Eigen::Index r = 0;
    for (std::size_t i : indices) {
        if (i >= n_rows()) throw ValidationError("subset index out of range");
        out.values.row(r++) = values.row(static_cast<Eigen::Index>(i));
        out.instance_ids.push_back(instance_ids[i]);
        out.labels.push_back(labels[i]);
    }
    return out;
}

void FeatureMatrix::validate() const {
    if (instance_ids.size() != n_rows() || labels.size() != n_rows())
        throw ValidationError("instance_ids/labels length does not match row count");
    if (feature_names.size() != n_features())
        throw ValidationError("feature_names length does not match column count");
    std::set<std::string> seen;
    for (const auto& name : feature_names) {
        if (name.empty() || !seen.insert(name).second)
            throw ValidationError("feature names must be unique and non-empty");
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double v = values(i, j);
            if (!(v >= 0.0 && v <= 100.0) || v != std::floor(v))
                throw ValidationError("value at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ") is not an integer in [0,100]");
        }
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open CSV file " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
            line.erase(0, 3);  // UTF-8 BOM
        first = false;
        if (!line.empty() && line[0] == '#') continue;  // comment lines
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw IngestError("CSV file " + path.string() + " is empty");
    return rows;
}

double parse_mark(const std::string& cell, std::size_t row, const std::string& column) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(v)) throw std::invalid_argument("not finite");
        return v;
    } catch (const std::exception&) {
        throw IngestError("row " + std::to_string(row) + ", column '" + column +
                          "': cannot parse mark '" + cell + "'");
    }
}

}  // namespace

const std::vector<std::string>& DatasetSchema::stage_columns(Stage stage) const {
    return stage == Stage::Stage20 ? stage20_columns : stage50_columns;
}

DatasetSchema DatasetSchema::from_json_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError("cannot parse schema file " + path.string() + ": " + e.what());
    }
    DatasetSchema s;
    try {
        s.id_column = j.at("id_column").get<std::string>();
        s.final_grade_column = j.at("final_grade_column").get<std::string>();
        s.stage20_columns = j.at("stage20_columns").get<std::vector<std::string>>();
        s.stage50_columns = j.at("stage50_columns").get<std::vector<std::string>>();
        for (const auto& [k, v] : j.at("task_max").items())
            s.task_max[k] = v.get<double>();
    } catch (const json::exception& e) {
        throw SchemaError("schema file " + path.string() + " is missing fields: " + e.what());
    }
    return s;
}

std::string DatasetSchema::to_json_string() const {
    json j;
    j["id_column"] = id_column;
    j["final_grade_column"] = final_grade_column;
    j["stage20_columns"] = stage20_columns;
    j["stage50_columns"] = stage50_columns;
    j["task_max"] = task_max;
    return j.dump(2) + "\n";
}

FeatureMatrix load_dataset(const std::filesystem::path& csv_path, const DatasetSchema& schema,
                           Stage stage, IngestReport* report) {
    const auto rows = read_csv(csv_path);
    const auto& header = rows.front();

    std::map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < header.size(); ++i) col_index[trim(header[i])] = i;

    auto require_column = [&](const std::string& name) -> std::size_t {
        auto it = col_index.find(name);
        if (it == col_index.end())
            throw SchemaError("schema references column '" + name + "' absent from " +
                              csv_path.filename().string());
        return it->second;
    };

    const std::size_t id_col = require_column(schema.id_column);
    const std::size_t grade_col = require_column(schema.final_grade_column);
    const auto& wanted = schema.stage_columns(stage);
    if (wanted.empty()) throw SchemaError("schema lists no feature columns for the stage");

    std::vector<std::size_t> feature_cols;
    std::vector<double> maxima;
    for (const auto& name : wanted) {
        feature_cols.push_back(require_column(name));
        auto it = schema.task_max.find(name);
        if (it == schema.task_max.end())
            throw SchemaError("schema has no task_max entry for column '" + name + "'");
        if (!(it->second > 0.0))
            throw SchemaError("task_max for column '" + name + "' must be positive");
        maxima.push_back(it->second);
    }

    const std::size_t n = rows.size() - 1;
    if (n == 0) throw IngestError("CSV has a header but no data rows");

    FeatureMatrix m;
    m.stage = stage;
    m.feature_names = wanted;
    m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(wanted.size()));
    m.instance_ids.reserve(n);
    m.labels.reserve(n);

    std::vector<bool> any_value(wanted.size(), false);
    std::size_t empty_cells = 0;

    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = rows[r + 1];
        const std::size_t row_no = r + 2;  // 1-based, counting the header
        if (row.size() != header.size())
            throw IngestError("row " + std::to_string(row_no) + " has " +
                              std::to_string(row.size()) + " fields, expected " +
                              std::to_string(header.size()));
        m.instance_ids.push_back(trim(row[id_col]));

        for (std::size_t f = 0; f < wanted.size(); ++f) {
            const std::string cell = trim(row[feature_cols[f]]);
            double scaled = 0.0;
            if (cell.empty()) {
                ++empty_cells;
            } else {
                const double raw = parse_mark(cell, row_no, wanted[f]);
                if (raw < 0.0 || raw > maxima[f])
                    throw ValidationError("row " + std::to_string(row_no) + ", column '" +
                                          wanted[f] + "': mark " + cell +
                                          " outside declared range [0," +
                                          std::to_string(maxima[f]) + "]");
                scaled = round_half_away(raw * 100.0 / maxima[f]);
                any_value[f] = true;
            }
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = scaled;
        }

        const std::string grade_cell = trim(row[grade_col]);
        int grade = 0;
        if (!grade_cell.empty()) {
            const double g = parse_mark(grade_cell, row_no, schema.final_grade_column);
            if (g != std::floor(g))
                throw ValidationError("row " + std::to_string(row_no) +
                                      ": final grade must be an integer percent, got " +
                                      grade_cell);
            grade = static_cast<int>(g);
        }
        try {
            m.labels.push_back(label_targets(grade));
        } catch (const ValidationError&) {
            throw ValidationError("row " + std::to_string(row_no) + ": final grade " +
                                  grade_cell + " outside [0,100]");
        }
    }

    // Columns that never held a value do not survive ingestion.
    std::vector<std::string> dropped;
    std::vector<std::size_t> keep;
    for (std::size_t f = 0; f < wanted.size(); ++f) {
        if (any_value[f])
            keep.push_back(f);
        else
            dropped.push_back(wanted[f]);
    }
    if (keep.empty()) throw IngestError("every feature column is entirely empty");
    if (!dropped.empty()) {
        Eigen::MatrixXd pruned(m.values.rows(), static_cast<Eigen::Index>(keep.size()));
        std::vector<std::string> names;
        for (std::size_t k = 0; k < keep.size(); ++k) {
            pruned.col(static_cast<Eigen::Index>(k)) =
                m.values.col(static_cast<Eigen::Index>(keep[k]));
            names.push_back(wanted[keep[k]]);
        }
        m.values = std::move(pruned);
        m.feature_names = std::move(names);
    }

    m.validate();

    if (report) {
        report->row_count = n;
        report->label_histogram = m.label_histogram();
        report->feature_names = m.feature_names;
        report->log.push_back("replaced " + std::to_string(empty_cells) +
                              " empty cells with 0");
        report->log.push_back(
            "marks rescaled to 0..100 then rounded to nearest integer (ties away from zero)");
        for (const auto& name : dropped)
            report->log.push_back("dropped all-empty column '" + name + "'");
    }
    return m;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

Split stratified_split(std::span<const ClassLabel> labels, const SplitPlan& plan) {
    if (!(plan.train_fraction > 0.0 && plan.train_fraction < 1.0))
        throw ValidationError("train_fraction must lie in (0,1)");
    if (labels.empty()) throw ValidationError("cannot split an empty dataset");

    Split out;
    if (!plan.stratified) {
        Rng rng(mix_seed(plan.seed, 0));
        auto perm = rng.permutation(labels.size());
        std::size_t n_train = static_cast<std::size_t>(std::clamp<long>(
            std::lround(plan.train_fraction * static_cast<double>(labels.size())), 1,
            static_cast<long>(labels.size()) - 1));
        out.train_indices.assign(perm.begin(), perm.begin() + static_cast<long>(n_train));
        out.test_indices.assign(perm.begin() + static_cast<long>(n_train), perm.end());
    } else {
        for (int c = 0; c < kNumClasses; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < labels.size(); ++i)
                if (static_cast<int>(labels[i]) == c) members.push_back(i);
            if (members.size() < 2)
                throw StratificationError(std::string("class ") + to_string(kClassOrder[c]) +
                                          " has fewer than 2 instances");
            Rng rng(mix_seed(plan.seed, static_cast<std::uint64_t>(c)));
            rng.shuffle(members);
            const long want = std::lround(plan.train_fraction * static_cast<double>(members.size()));
            const std::size_t n_train = static_cast<std::size_t>(
                std::clamp<long>(want, 1, static_cast<long>(members.size()) - 1));
            out.train_indices.insert(out.train_indices.end(), members.begin(),
                                     members.begin() + static_cast<long>(n_train));
            out.test_indices.insert(out.test_indices.end(),
                                    members.begin() + static_cast<long>(n_train), members.end());
        }
    }
    std::sort(out.train_indices.begin(), out.train_indices.end());
    std::sort(out.test_indices.begin(), out.test_indices.end());
    return out;
}

Split stratified_split(const FeatureMatrix& m, const SplitPlan& plan) {
    return stratified_split(std::span<const ClassLabel>(m.labels), plan);
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

PcaResult pca_project(const Eigen::MatrixXd& values, int k) {
    const Eigen::Index d = values.cols();
    const Eigen::Index n = values.rows();
    if (k < 1 || k > d)
        throw DimensionError("component count " + std::to_string(k) + " outside [1," +
                             std::to_string(d) + "]");

    PcaResult res;
    res.mean = values.colwise().mean();
    Eigen::MatrixXd centered = values.rowwise() - res.mean.transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    Eigen::MatrixXd cov = centered.transpose() * centered / denom;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw DimensionError("eigendecomposition failed");

    // Eigen returns ascending eigenvalues; take the top k, clamping the tiny
    // negative values numerical error can produce.
    Eigen::VectorXd evals = eig.eigenvalues().cwiseMax(0.0);
    const double total = evals.sum();

    res.components.resize(d, k);
    res.explained_variance_ratio.resize(k);
    for (int c = 0; c < k; ++c) {
        const Eigen::Index src = d - 1 - c;
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        Eigen::Index max_row = 0;
        v.cwiseAbs().maxCoeff(&max_row);
        if (v(max_row) < 0.0) v = -v;  // deterministic sign
        res.components.col(c) = v;
        res.explained_variance_ratio(c) = total > 0.0 ? evals(src) / total : 0.0;
    }
    res.projected = centered * res.components;
    return res;
}

PcaResult pca_project(const FeatureMatrix& m, int k) { return pca_project(m.values, k); }

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

SyntheticCsv synthetic_unbalanced_csv(const SyntheticCounts& counts, std::uint64_t seed) {
    struct Task {
        const char* name;
        double max;
    };
    const std::vector<Task> tasks = {{"Quiz01", 10},   {"Assign01", 8},  {"Midterm", 20},
                                     {"Assign02", 12}, {"Assign03", 25}, {"FinalExam", 35}};

    const std::size_t n = counts.fair + counts.good + counts.weak;
    if (n == 0) throw ValidationError("synthetic dataset needs at least one instance");

    std::vector<int> grades;
    grades.reserve(n);
    Rng rng(mix_seed(seed, seed_tag::kSynth));
    for (std::size_t i = 0; i < counts.fair; ++i)
        grades.push_back(51 + static_cast<int>(rng.below(19)));  // 51..69
    for (std::size_t i = 0; i < counts.good; ++i)
        grades.push_back(70 + static_cast<int>(rng.below(31)));  // 70..100
    for (std::size_t i = 0; i < counts.weak; ++i)
        grades.push_back(static_cast<int>(rng.below(51)));  // 0..50
    rng.shuffle(grades);

    std::ostringstream csv;
    csv << "Id";
    for (const auto& t : tasks) csv << ',' << t.name;
    csv << ",Final Grade\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double ability = grades[i] / 100.0;
        char id[16];
        std::snprintf(id, sizeof(id), "std%03zu", i);
        csv << id;
        for (const auto& t : tasks) {
            const double noisy = ability + 0.12 * rng.normal();
            const int mark = std::clamp(round_half_away(t.max * noisy), 0,
                                        static_cast<int>(t.max));
            csv << ',' << mark;
        }
        csv << ',' << grades[i] << '\n';
    }

    SyntheticCsv out;
    out.csv = csv.str();
    out.schema.id_column = "Id";
    out.schema.final_grade_column = "Final Grade";
    out.schema.stage20_columns = {"Quiz01", "Assign01"};
    out.schema.stage50_columns = {"Quiz01", "Assign01", "Midterm", "Assign02"};
    for (const auto& t : tasks) out.schema.task_max[t.name] = t.max;
    return out;
}

FeatureMatrix synthetic_blobs(std::size_t n_per_class, std::size_t n_features, double noise_sigma,
                              std::uint64_t seed) {
    if (n_per_class < 2 || n_features < 1)
        throw ValidationError("synthetic blobs need >=2 instances per class and >=1 feature");

    const std::size_t n = 3 * n_per_class;
    FeatureMatrix m;
    m.stage = Stage::Stage20;
    m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_features));
    for (std::size_t j = 0; j < n_features; ++j) {
        char name[8];
        std::snprintf(name, sizeof(name), "x%02zu", j + 1);
        m.feature_names.push_back(name);
    }

    Rng rng(mix_seed(seed, seed_tag::kSynth, 1));
    std::size_t row = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
            char id[24];
            std::snprintf(id, sizeof(id), "blob-%03zu", row + 1);
            m.instance_ids.push_back(id);
            m.labels.push_back(kClassOrder[c]);
            for (std::size_t j = 0; j < n_features; ++j) {
                const double center = (j % 3 == static_cast<std::size_t>(c)) ? 80.0 : 25.0;
                const double v = center + noise_sigma * rng.normal();
                m.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) =
                    std::clamp(round_half_away(v), 0, 100);
            }
        }
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

std::string features_to_json_string(const FeatureMatrix& m, const std::string& config_hash) {
    json j;
    j["format"] = "bagsel-features";
    j["version"] = 1;
    j["config_hash"] = config_hash;
    j["stage"] = to_string(m.stage);
    j["instance_ids"] = m.instance_ids;
    j["feature_names"] = m.feature_names;
    json labels = json::array();
    for (ClassLabel l : m.labels) labels.push_back(to_string(l));
    j["labels"] = std::move(labels);
    json values = json::array();
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.values.cols(); ++c)
            row.push_back(static_cast<long>(m.values(r, c)));
        values.push_back(std::move(row));
    }
    j["values"] = std::move(values);
    return j.dump(1) + "\n";
}

FeatureMatrix features_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IngestError(std::string("cannot parse features file: ") + e.what());
    }
    if (j.value("format", "") != "bagsel-features")
        throw IngestError("not a bagsel features file");

    FeatureMatrix m;
    try {
        m.stage = stage_from_string(j.at("stage").get<std::string>());
        m.instance_ids = j.at("instance_ids").get<std::vector<std::string>>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& l : j.at("labels"))
            m.labels.push_back(label_from_string(l.get<std::string>()));
        const auto& values = j.at("values");
        m.values.resize(static_cast<Eigen::Index>(values.size()),
                        static_cast<Eigen::Index>(m.feature_names.size()));
        Eigen::Index r = 0;
        for (const auto& row : values) {
            if (row.size() != m.feature_names.size())
                throw IngestError("features row " + std::to_string(r) + " has wrong width");
            Eigen::Index c = 0;
            for (const auto& v : row) m.values(r, c++) = v.get<double>();
            ++r;
        }
    } catch (const json::exception& e) {
        throw IngestError(std::string("features file is missing fields: ") + e.what());
    }
    m.validate();
    return m;
}

FeatureMatrix load_features_file(const std::filesystem::path& path) {
    return features_from_json_string(read_file(path));
}

void save_features_file(const std::filesystem::path& path, const FeatureMatrix& m,
                        const std::string& config_hash) {
    write_file_atomic(path, features_to_json_string(m, config_hash));
}

}  // namespace bagsel
