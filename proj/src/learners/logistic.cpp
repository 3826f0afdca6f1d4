#include <cmath>

#include "model_impl.hpp"

namespace bagsel::detail {

namespace {

constexpr int kMaxNewtonIters = 200;
constexpr double kGradTol = 1e-8;

/// Multinomial softmax regression, class W as the reference, fitted by
/// damped Newton iterations; no regularization. Scores are softmax
/// probabilities.
class LogisticModel : public ModelImpl {
public:
    LogisticModel(Standardizer std, Eigen::MatrixXd beta)
        : std_(std::move(std)), beta_(std::move(beta)) {}

    Eigen::MatrixXd raw_scores(const Eigen::MatrixXd& rows) const override {
        return probabilities(design(std_.apply(rows)), beta_);
    }

    nlohmann::json payload() const override {
        nlohmann::json j;
        j["standardizer"] = std_.to_json();
        j["beta"] = mat_to_json(beta_);
        return j;
    }

    static Eigen::MatrixXd design(const Eigen::MatrixXd& z) {
        Eigen::MatrixXd phi(z.rows(), z.cols() + 1);
        phi.col(0).setOnes();
        phi.rightCols(z.cols()) = z;
        return phi;
    }

    /// Softmax over (eta_F, eta_G, 0): beta has one column per non-reference
    /// class (F, G).
    static Eigen::MatrixXd probabilities(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& beta) {
        Eigen::MatrixXd eta(phi.rows(), kNumClasses);
        eta.leftCols(2) = phi * beta;
        eta.col(2).setZero();
        Eigen::MatrixXd p(phi.rows(), kNumClasses);
        for (Eigen::Index r = 0; r < eta.rows(); ++r) {
            const double hi = eta.row(r).maxCoeff();
            double z = 0.0;
            for (int c = 0; c < kNumClasses; ++c) z += std::exp(eta(r, c) - hi);
            for (int c = 0; c < kNumClasses; ++c) p(r, c) = std::exp(eta(r, c) - hi) / z;
        }
        return p;
    }

private:
    Standardizer std_;
    Eigen::MatrixXd beta_;  // (d+1) x 2, columns for classes F and G
};

double negative_log_likelihood(const Eigen::MatrixXd& p, const std::vector<int>& y) {
    double nll = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        nll -= std::log(std::max(p(static_cast<Eigen::Index>(i), y[i]), 1e-300));
    return nll;
}

}  // namespace

ModelPtr train_logistic(const HyperParams& /*p*/, const Eigen::MatrixXd& x,
                        std::span<const ClassLabel> y, std::uint64_t /*seed*/) {
    const Standardizer std_ = Standardizer::fit(x);
    const Eigen::MatrixXd phi = LogisticModel::design(std_.apply(x));
    const std::vector<int> yi = labels_to_ints(y);
    const Eigen::Index m = phi.cols();  // d + 1

    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(m, 2);
    Eigen::MatrixXd p = LogisticModel::probabilities(phi, beta);
    double nll = negative_log_likelihood(p, yi);

    for (int iter = 0; iter < kMaxNewtonIters; ++iter) {
        // Gradient and Hessian over the stacked (F, G) coefficient vector.
        Eigen::VectorXd grad(2 * m);
        for (int c = 0; c < 2; ++c) {
            Eigen::VectorXd ind = Eigen::VectorXd::Zero(phi.rows());
            for (std::size_t i = 0; i < yi.size(); ++i)
                if (yi[i] == c) ind(static_cast<Eigen::Index>(i)) = 1.0;
            grad.segment(c * m, m) = phi.transpose() * (p.col(c) - ind);
        }
        if (grad.norm() <= kGradTol) break;

        Eigen::MatrixXd hess(2 * m, 2 * m);
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                Eigen::VectorXd w = (a == b)
                                        ? (p.col(a).array() * (1.0 - p.col(a).array())).matrix()
                                        : (-p.col(a).array() * p.col(b).array()).matrix();
                hess.block(a * m, b * m, m, m) = phi.transpose() * w.asDiagonal() * phi;
            }
        }
        hess.diagonal().array() += 1e-10;  // guard against singular fits

        const Eigen::VectorXd step = hess.ldlt().solve(-grad);

        // Halve the step until the likelihood improves.
        double alpha = 1.0;
        bool improved = false;
        while (alpha >= 1e-8) {
            Eigen::MatrixXd trial = beta;
            trial.col(0) += alpha * step.segment(0, m);
            trial.col(1) += alpha * step.segment(m, m);
            const Eigen::MatrixXd p_trial = LogisticModel::probabilities(phi, trial);
            const double nll_trial = negative_log_likelihood(p_trial, yi);
            if (nll_trial < nll) {
                beta = std::move(trial);
                p = p_trial;
                nll = nll_trial;
                improved = true;
                break;
            }
            alpha /= 2.0;
        }
        if (!improved) break;
    }

    return std::make_shared<LogisticModel>(std_, std::move(beta));
}

ModelPtr logistic_from_payload(const nlohmann::json& j) {
    return std::make_shared<LogisticModel>(Standardizer::from_json(j.at("standardizer")),
                                           mat_from_json(j.at("beta")));
}

}  // namespace bagsel::detail
