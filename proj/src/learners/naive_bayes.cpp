#include <algorithm>
#include <cmath>
#include <numbers>

#include "model_impl.hpp"

namespace bagsel::detail {

namespace {

constexpr double kVarianceFloor = 1e-9;
constexpr double kBandwidthFloor = 1e-6;

double log_sum_exp(const double* v, std::size_t n) {
    double hi = v[0];
    for (std::size_t i = 1; i < n; ++i) hi = std::max(hi, v[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - hi);
    return hi + std::log(s);
}

/// Linear-interpolation quantile of a sorted vector (R type 7).
double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Naive Bayes with per-feature-per-class densities: Gaussian with a floored
/// variance, or a Gaussian kernel density with Silverman's rule-of-thumb
/// bandwidth when usekernel is set. Scores are the class posteriors.
class NaiveBayesModel : public ModelImpl {
public:
    struct ClassDensity {
        double log_prior = 0.0;
        // Gaussian route
        Eigen::VectorXd mean;
        Eigen::VectorXd var;
        // Kernel route: training values and bandwidth per feature
        std::vector<std::vector<double>> values;
        std::vector<double> bandwidth;
    };

    NaiveBayesModel(bool usekernel, std::array<ClassDensity, 3> classes)
        : usekernel_(usekernel), classes_(std::move(classes)) {}

    Eigen::MatrixXd raw_scores(const Eigen::MatrixXd& rows) const override {
        Eigen::MatrixXd out(rows.rows(), kNumClasses);
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            double logp[kNumClasses];
            for (int c = 0; c < kNumClasses; ++c)
                logp[c] = classes_[c].log_prior + log_likelihood(classes_[c], rows.row(r));
            const double z = log_sum_exp(logp, kNumClasses);
            for (int c = 0; c < kNumClasses; ++c) out(r, c) = std::exp(logp[c] - z);
        }
        return out;
    }

    nlohmann::json payload() const override {
        nlohmann::json j;
        j["usekernel"] = usekernel_;
        nlohmann::json cls = nlohmann::json::array();
        for (const auto& c : classes_) {
            nlohmann::json jc;
            jc["log_prior"] = c.log_prior;
            if (usekernel_) {
                jc["values"] = c.values;
                jc["bandwidth"] = c.bandwidth;
            } else {
                jc["mean"] = vec_to_json(c.mean);
                jc["var"] = vec_to_json(c.var);
            }
            cls.push_back(std::move(jc));
        }
        j["classes"] = std::move(cls);
        return j;
    }

    static ModelPtr from_payload(const nlohmann::json& j) {
        const bool usekernel = j.at("usekernel").get<bool>();
        std::array<ClassDensity, 3> classes;
        int c = 0;
        for (const auto& jc : j.at("classes")) {
            classes[c].log_prior = jc.at("log_prior").get<double>();
            if (usekernel) {
                classes[c].values = jc.at("values").get<std::vector<std::vector<double>>>();
                classes[c].bandwidth = jc.at("bandwidth").get<std::vector<double>>();
            } else {
                classes[c].mean = vec_from_json(jc.at("mean"));
                classes[c].var = vec_from_json(jc.at("var"));
            }
            ++c;
        }
        return std::make_shared<NaiveBayesModel>(usekernel, std::move(classes));
    }

private:
    double log_likelihood(const ClassDensity& c, const Eigen::RowVectorXd& x) const {
        double ll = 0.0;
        if (!usekernel_) {
            for (Eigen::Index f = 0; f < x.size(); ++f) {
                const double var = c.var(f);
                const double d = x(f) - c.mean(f);
                ll += -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
            }
        } else {
            std::vector<double> terms;
            for (std::size_t f = 0; f < c.values.size(); ++f) {
                const auto& vals = c.values[f];
                const double h = c.bandwidth[f];
                terms.resize(vals.size());
                for (std::size_t i = 0; i < vals.size(); ++i) {
                    const double u = (x(static_cast<Eigen::Index>(f)) - vals[i]) / h;
                    terms[i] = -0.5 * u * u;
                }
                ll += log_sum_exp(terms.data(), terms.size()) -
                      std::log(static_cast<double>(vals.size()) * h *
                               std::sqrt(2.0 * std::numbers::pi));
            }
        }
        return ll;
    }

    bool usekernel_;
    std::array<ClassDensity, 3> classes_;
};

}  // namespace

ModelPtr train_naive_bayes(const HyperParams& p, const Eigen::MatrixXd& x,
                           std::span<const ClassLabel> y, std::uint64_t /*seed*/) {
    const Eigen::Index d = x.cols();
    std::array<NaiveBayesModel::ClassDensity, 3> classes;

    for (int c = 0; c < kNumClasses; ++c) {
        std::vector<Eigen::Index> members;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (static_cast<int>(y[i]) == c) members.push_back(static_cast<Eigen::Index>(i));
        const auto n = static_cast<double>(members.size());
        auto& cls = classes[c];
        cls.log_prior = std::log(n / static_cast<double>(y.size()));

        if (!p.nb_usekernel) {
            cls.mean.resize(d);
            cls.var.resize(d);
            for (Eigen::Index f = 0; f < d; ++f) {
                double mean = 0.0;
                for (Eigen::Index i : members) mean += x(i, f);
                mean /= n;
                double var = 0.0;
                for (Eigen::Index i : members) var += (x(i, f) - mean) * (x(i, f) - mean);
                var = members.size() > 1 ? var / (n - 1.0) : 0.0;
                cls.mean(f) = mean;
                cls.var(f) = std::max(var, kVarianceFloor);
            }
        } else {
            cls.values.resize(static_cast<std::size_t>(d));
            cls.bandwidth.resize(static_cast<std::size_t>(d));
            for (Eigen::Index f = 0; f < d; ++f) {
                auto& vals = cls.values[static_cast<std::size_t>(f)];
                vals.reserve(members.size());
                for (Eigen::Index i : members) vals.push_back(x(i, f));
                std::vector<double> sorted = vals;
                std::sort(sorted.begin(), sorted.end());
                double mean = 0.0;
                for (double v : sorted) mean += v;
                mean /= n;
                double var = 0.0;
                for (double v : sorted) var += (v - mean) * (v - mean);
                const double sd = members.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
                const double iqr =
                    quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
                double spread = sd;
                if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
                double h = 0.9 * spread * std::pow(n, -0.2);
                cls.bandwidth[static_cast<std::size_t>(f)] = std::max(h, kBandwidthFloor);
            }
        }
    }
    return std::make_shared<NaiveBayesModel>(p.nb_usekernel, std::move(classes));
}

ModelPtr naive_bayes_from_payload(const nlohmann::json& j) {
    return NaiveBayesModel::from_payload(j);
}

}  // namespace bagsel::detail
