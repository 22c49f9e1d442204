#include "facegen/sampling/gmm.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "facegen/error.hpp"
#include "facegen/util/log.hpp"

namespace facegen::sampling {

namespace {

constexpr double kEmptyMass = 1e-8;

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& cov, std::size_t k) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    require(llt.info() == Eigen::Success, ErrorCode::SingularComponent,
            "covariance of component " + std::to_string(k) + " is not positive definite");
    return llt;
}

// n x K matrix of log(weight_k * N(x_i | mu_k, Sigma_k)).
Eigen::MatrixXd weighted_log_densities(const GaussianMixture& gmm, const Eigen::MatrixXd& data) {
    const auto n = data.rows();
    const auto m = static_cast<double>(data.cols());
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(gmm.components.size()));
    for (std::size_t k = 0; k < gmm.components.size(); ++k) {
        const auto& c = gmm.components[k];
        const auto llt = factor(c.covariance, k);
        const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const double base = std::log(c.weight) - 0.5 * (m * std::log(2.0 * std::numbers::pi) + log_det);
        const Eigen::MatrixXd centered = (data.rowwise() - c.mean.transpose()).transpose();
        const Eigen::MatrixXd solved = llt.matrixL().solve(centered);
        out.col(static_cast<Eigen::Index>(k)) = (base - 0.5 * solved.colwise().squaredNorm().array()).transpose();
    }
    return out;
}

Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& x) {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double top = x.row(i).maxCoeff();
        out(i) = top + std::log((x.row(i).array() - top).exp().sum());
    }
    return out;
}

Eigen::MatrixXd data_covariance(const Eigen::MatrixXd& data) {
    const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(data.rows());
}

double penalty(const GaussianMixture& gmm, double ridge, double n) {
    double trace_sum = 0.0;
    for (std::size_t k = 0; k < gmm.components.size(); ++k) {
        const auto llt = factor(gmm.components[k].covariance, k);
        const auto dim = gmm.components[k].covariance.rows();
        trace_sum += llt.solve(Eigen::MatrixXd::Identity(dim, dim)).trace();
    }
    return 0.5 * ridge * n * trace_sum;
}

std::vector<Eigen::Index> kmeans_pp(const Eigen::MatrixXd& data, int k, Rng& rng) {
    const auto n = data.rows();
    std::vector<Eigen::Index> centers;
    centers.push_back(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
    Eigen::VectorXd d2 = (data.rowwise() - data.row(centers[0])).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (static_cast<int>(centers.size()) < k) {
        const double total = d2.sum();
        Eigen::Index pick = n - 1;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc > target && d2(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
        }
        centers.push_back(pick);
        d2 = d2.cwiseMin((data.rowwise() - data.row(pick)).rowwise().squaredNorm());
    }
    return centers;
}

}  // namespace

void GaussianMixture::validate() const {
    require(!components.empty(), ErrorCode::InvalidParam, "mixture has no components");
    double total = 0.0;
    for (std::size_t k = 0; k < components.size(); ++k) {
        const auto& c = components[k];
        require(c.weight > 0.0, ErrorCode::InvalidParam, "component weights must be positive");
        require(c.mean.size() == dim() && c.covariance.rows() == dim() && c.covariance.cols() == dim(),
                ErrorCode::DimensionMismatch, "component " + std::to_string(k) + " has inconsistent dimensions");
        require(c.covariance.isApprox(c.covariance.transpose(), 1e-12), ErrorCode::InvalidParam,
                "covariance of component " + std::to_string(k) + " is not symmetric");
        factor(c.covariance, k);
        total += c.weight;
    }
    require(std::abs(total - 1.0) <= 1e-9, ErrorCode::InvalidParam, "component weights must sum to 1");
}

Eigen::VectorXd log_density(const GaussianMixture& gmm, const Eigen::MatrixXd& data) {
    require(data.cols() == gmm.dim(), ErrorCode::DimensionMismatch, "data width does not match the mixture");
    return log_sum_exp_rows(weighted_log_densities(gmm, data));
}

Eigen::MatrixXd responsibilities(const GaussianMixture& gmm, const Eigen::MatrixXd& data) {
    require(data.cols() == gmm.dim(), ErrorCode::DimensionMismatch, "data width does not match the mixture");
    Eigen::MatrixXd logp = weighted_log_densities(gmm, data);
    const Eigen::VectorXd lse = log_sum_exp_rows(logp);
    return (logp.colwise() - lse).array().exp();
}

GmmFit fit_gmm(const Eigen::MatrixXd& data, int k, std::uint64_t seed, const GmmOptions& options) {
    const auto n = data.rows();
    const auto m = data.cols();
    require(k >= 1, ErrorCode::InvalidParam, "need at least one component");
    require(m >= 1, ErrorCode::InvalidParam, "data must have at least one column");
    require(n > k, ErrorCode::InvalidParam,
            "need more points than components (" + std::to_string(n) + " <= " + std::to_string(k) + ")");
    require(data.allFinite(), ErrorCode::NonFiniteInput, "GMM training data contains NaN or Inf");
    require(options.ridge > 0.0, ErrorCode::InvalidParam, "ridge must be positive");

    Rng rng(seed);
    const double nd = static_cast<double>(n);
    const auto centers = kmeans_pp(data, k, rng);

    // Hard nearest-centre assignment as the initial responsibilities.
    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const double d = (data.row(i) - data.row(centers[c])).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        resp(i, best) = 1.0;
    }

    GmmFit fit;
    auto& gmm = fit.mixture;
    gmm.components.resize(static_cast<std::size_t>(k));
    std::vector<bool> reseeded(static_cast<std::size_t>(k), false);
    bool baseline_valid = false;
    bool initialized = false;

    auto m_step = [&] {
        bool any_reseed = false;
        for (int c = 0; c < k; ++c) {
            auto& comp = gmm.components[c];
            const double mass = resp.col(c).sum();
            if (mass < kEmptyMass) {
                require(!reseeded[c], ErrorCode::EmptyComponent,
                        "component " + std::to_string(c) + " emptied again after reseeding");
                reseeded[c] = true;
                any_reseed = true;
                ++fit.reseeds;
                // Restart at the point the current fit explains worst.
                Eigen::Index worst = 0;
                if (initialized) log_density(gmm, data).minCoeff(&worst);
                comp.mean = data.row(worst).transpose();
                comp.covariance = data_covariance(data) + options.ridge * Eigen::MatrixXd::Identity(m, m);
                comp.weight = 1.0 / k;
                log::warning("GMM component " + std::to_string(c) + " was empty and has been reseeded");
                continue;
            }
            comp.weight = mass / nd;
            comp.mean = (resp.col(c).transpose() * data).transpose() / mass;
            const Eigen::MatrixXd centered = data.rowwise() - comp.mean.transpose();
            Eigen::MatrixXd scatter = centered.transpose() * resp.col(c).asDiagonal() * centered / mass;
            scatter += (options.ridge * (nd / mass)) * Eigen::MatrixXd::Identity(m, m);
            comp.covariance = 0.5 * (scatter + scatter.transpose());
        }
        if (any_reseed) {
            double total = 0.0;
            for (const auto& c : gmm.components) total += c.weight;
            for (auto& c : gmm.components) c.weight /= total;
            baseline_valid = false;
        }
    };

    m_step();
    initialized = true;
    for (int it = 0; it < options.max_iterations; ++it) {
        const Eigen::MatrixXd logp = weighted_log_densities(gmm, data);
        const Eigen::VectorXd lse = log_sum_exp_rows(logp);
        const double objective = lse.sum() - penalty(gmm, options.ridge, nd);
        require(std::isfinite(objective), ErrorCode::Diverged, "EM objective is not finite");
        if (baseline_valid) {
            const double prev = fit.objective.back();
            require(objective >= prev - 1e-9 * std::abs(prev), ErrorCode::Diverged,
                    "EM objective decreased at iteration " + std::to_string(it));
        }
        fit.objective.push_back(objective);
        if (baseline_valid && objective - fit.objective[fit.objective.size() - 2] <=
                                  options.tolerance * std::abs(objective)) {
            break;
        }
        baseline_valid = true;
        resp = (logp.colwise() - lse).array().exp();
        m_step();
    }
    gmm.validate();
    return fit;
}

Eigen::VectorXd sample_identity(const GaussianMixture& gmm, double sigma, Rng& rng, SigmaMode mode) {
    require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::InvalidSigma, "sigma must be finite and >= 0");
    require(!gmm.components.empty(), ErrorCode::InvalidParam, "mixture has no components");
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::size_t pick = gmm.components.size() - 1;
    double acc = 0.0;
    for (std::size_t k = 0; k < gmm.components.size(); ++k) {
        acc += gmm.components[k].weight;
        if (u < acc) {
            pick = k;
            break;
        }
    }
    const auto& c = gmm.components[pick];
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(c.mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    if (sigma == 0.0) return c.mean;
    const double scale = mode == SigmaMode::Std ? sigma : std::sqrt(sigma);
    const auto llt = factor(c.covariance, pick);
    const Eigen::VectorXd lz = llt.matrixL() * z;
    return c.mean + scale * lz;
}

io::MatrixContainer to_container(const GaussianMixture& gmm) {
    gmm.validate();
    io::MatrixContainer c;
    const auto k = gmm.components.size();
    const auto m = static_cast<std::size_t>(gmm.dim());
    std::vector<double> weights, means, covs;
    for (const auto& comp : gmm.components) {
        weights.push_back(comp.weight);
        means.insert(means.end(), comp.mean.data(), comp.mean.data() + m);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t col = 0; col < m; ++col) covs.push_back(comp.covariance(r, col));
        }
    }
    c.attributes()["kind"] = "gaussian_mixture";
    c.attributes()["version"] = 1;
    c.add("gmm.weights", {k}, weights);
    c.add("gmm.means", {k, m}, means);
    c.add("gmm.covariances", {k, m, m}, covs);
    return c;
}

GaussianMixture gmm_from_container(const io::MatrixContainer& c) {
    require(c.attributes().value("kind", "") == "gaussian_mixture", ErrorCode::ParseError,
            "container does not hold a Gaussian mixture");
    const auto& w = c.get("gmm.weights");
    require(w.shape.size() == 1, ErrorCode::DimensionMismatch, "gmm.weights must be a vector");
    const auto k = w.shape[0];
    const auto& means = c.get("gmm.means");
    require(means.shape.size() == 2 && means.shape[0] == k, ErrorCode::DimensionMismatch, "gmm.means must be K x m");
    const auto m = means.shape[1];
    const std::size_t cov_shape[] = {k, m, m};
    const auto& covs = c.get("gmm.covariances", cov_shape);
    GaussianMixture gmm;
    for (std::size_t i = 0; i < k; ++i) {
        GaussianComponent comp;
        comp.weight = w.data[i];
        comp.mean = Eigen::Map<const Eigen::VectorXd>(means.data.data() + i * m, static_cast<Eigen::Index>(m));
        comp.covariance = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            covs.data.data() + i * m * m, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        gmm.components.push_back(std::move(comp));
    }
    gmm.validate();
    return gmm;
}

}  // namespace facegen::sampling
