#pragma once

#include <vector>

#include <Eigen/Core>

#include "facegen/io/matrix_container.hpp"
#include "facegen/sampling/rng.hpp"

namespace facegen::sampling {

struct GaussianComponent {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct GaussianMixture {
    std::vector<GaussianComponent> components;

    int dim() const { return components.empty() ? 0 : static_cast<int>(components.front().mean.size()); }
    /// Weights positive and summing to one, covariances symmetric positive
    /// definite. Throws InvalidParam or SingularComponent.
    void validate() const;
};

struct GmmOptions {
    double ridge = 1e-6;
    int max_iterations = 500;
    /// Stop once the objective improves by less than this, relative.
    double tolerance = 1e-12;
};

struct GmmFit {
    GaussianMixture mixture;
    /// Penalized log-likelihood after every EM iteration. The penalty is
    /// -(ridge * n / 2) * sum_k tr(inv(Sigma_k)), which is what makes the
    /// ridge-regularized update an exact EM step.
    std::vector<double> objective;
    int reseeds = 0;
};

/// EM from a k-means++ initialization. Component covariances come out as
/// S_k + (ridge * n / N_k) I, so a single component gets the maximum
/// likelihood covariance plus ridge * I.
GmmFit fit_gmm(const Eigen::MatrixXd& data, int k, std::uint64_t seed, const GmmOptions& options = {});

/// Per-point log density under the mixture.
Eigen::VectorXd log_density(const GaussianMixture& gmm, const Eigen::MatrixXd& data);
/// n x K posterior component probabilities.
Eigen::MatrixXd responsibilities(const GaussianMixture& gmm, const Eigen::MatrixXd& data);

enum class SigmaMode { Std, Var };

/// Draws a component by weight, then mean + s * L z with L L^T = covariance,
/// where s = sigma (Std) or sqrt(sigma) (Var).
Eigen::VectorXd sample_identity(const GaussianMixture& gmm, double sigma, Rng& rng,
                                SigmaMode mode = SigmaMode::Std);

io::MatrixContainer to_container(const GaussianMixture& gmm);
GaussianMixture gmm_from_container(const io::MatrixContainer& container);

}  // namespace facegen::sampling
