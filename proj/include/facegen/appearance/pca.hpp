#pragma once

#include <string>

#include <Eigen/Core>

#include "facegen/io/matrix_container.hpp"

namespace facegen::appearance {

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;       // d x k, orthonormal columns
    Eigen::VectorXd variances;        // per component, non-increasing
    Eigen::VectorXd explained_ratio;  // share of the total variance
    std::string preprocessing;

    Eigen::Index dim() const { return mean.size(); }
    Eigen::Index rank() const { return components.cols(); }
};

/// Mean-centred PCA of the rows of `samples` from a thin SVD. If k exceeds
/// the numerical rank the model is truncated with a warning; data with no
/// variance at all throws RankDeficient.
PcaModel fit_pca(const Eigen::MatrixXd& samples, int k, std::string preprocessing = "");

Eigen::VectorXd pca_project(const PcaModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& z);

/// Sum over rows of the squared reconstruction residual.
double reconstruction_error(const PcaModel& model, const Eigen::MatrixXd& samples);

io::MatrixContainer to_container(const PcaModel& model);
PcaModel pca_from_container(const io::MatrixContainer& container);

}  // namespace facegen::appearance
