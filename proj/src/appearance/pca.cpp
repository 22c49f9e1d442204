#include "facegen/appearance/pca.hpp"

#include <limits>

#include <Eigen/SVD>

#include "facegen/error.hpp"
#include "facegen/simd/kernels.hpp"
#include "facegen/util/log.hpp"

namespace facegen::appearance {

PcaModel fit_pca(const Eigen::MatrixXd& samples, int k, std::string preprocessing) {
    const auto n = samples.rows();
    const auto d = samples.cols();
    require(n >= 2, ErrorCode::InvalidParam, "PCA needs at least two samples");
    require(k >= 1 && k <= std::min<Eigen::Index>(n - 1, d), ErrorCode::InvalidParam,
            "component count must lie in [1, min(n - 1, d)]");
    require(samples.allFinite(), ErrorCode::NonFiniteInput, "PCA samples contain NaN or Inf");

    PcaModel model;
    model.preprocessing = std::move(preprocessing);
    model.mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - model.mean.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();

    const double tol = s.size() > 0 ? s(0) * static_cast<double>(std::max(n, d)) *
                                          std::numeric_limits<double>::epsilon()
                                    : 0.0;
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > tol) ++rank;
    require(rank > 0, ErrorCode::RankDeficient, "PCA samples have no variance");
    Eigen::Index keep = k;
    if (keep > rank) {
        log::warning("requested " + std::to_string(k) + " components but the data has rank " + std::to_string(rank) +
                     "; truncating");
        keep = rank;
    }

    const double total = s.squaredNorm();
    model.components = svd.matrixV().leftCols(keep);
    model.variances = s.head(keep).array().square() / static_cast<double>(n - 1);
    model.explained_ratio = s.head(keep).array().square() / total;
    // Fix the sign so the largest-magnitude entry of each component is positive.
    for (Eigen::Index c = 0; c < keep; ++c) {
        Eigen::Index arg = 0;
        model.components.col(c).cwiseAbs().maxCoeff(&arg);
        if (model.components(arg, c) < 0.0) model.components.col(c) *= -1.0;
    }
    return model;
}

Eigen::VectorXd pca_project(const PcaModel& model, const Eigen::VectorXd& x) {
    require(x.size() == model.dim(), ErrorCode::DimensionMismatch,
            "vector has " + std::to_string(x.size()) + " entries, model expects " + std::to_string(model.dim()));
    const Eigen::VectorXd centered = x - model.mean;
    Eigen::VectorXd z(model.rank());
    const auto& k = simd::active();
    const auto d = static_cast<std::size_t>(model.dim());
    for (Eigen::Index c = 0; c < model.rank(); ++c) z(c) = k.dot(model.components.col(c).data(), centered.data(), d);
    return z;
}

Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& z) {
    require(z.size() == model.rank(), ErrorCode::DimensionMismatch,
            "code has " + std::to_string(z.size()) + " entries, model has " + std::to_string(model.rank()) +
                " components");
    Eigen::VectorXd x = model.mean;
    const auto& k = simd::active();
    const auto d = static_cast<std::size_t>(model.dim());
    for (Eigen::Index c = 0; c < model.rank(); ++c) k.axpy(z(c), model.components.col(c).data(), x.data(), d);
    return x;
}

double reconstruction_error(const PcaModel& model, const Eigen::MatrixXd& samples) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        const Eigen::VectorXd x = samples.row(i).transpose();
        total += (pca_reconstruct(model, pca_project(model, x)) - x).squaredNorm();
    }
    return total;
}

io::MatrixContainer to_container(const PcaModel& model) {
    io::MatrixContainer c;
    c.attributes()["kind"] = "pca";
    c.attributes()["version"] = 1;
    c.attributes()["preprocessing"] = model.preprocessing;
    const auto d = static_cast<std::size_t>(model.dim());
    const auto k = static_cast<std::size_t>(model.rank());
    c.add("pca.mean", {d}, std::span<const double>(model.mean.data(), d));
    // Components are stored one per row.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = model.components.transpose();
    c.add("pca.components", {k, d}, std::span<const double>(rows.data(), k * d));
    c.add("pca.variances", {k}, std::span<const double>(model.variances.data(), k));
    c.add("pca.explained_ratio", {k}, std::span<const double>(model.explained_ratio.data(), k));
    return c;
}

PcaModel pca_from_container(const io::MatrixContainer& c) {
    require(c.attributes().value("kind", "") == "pca", ErrorCode::ParseError, "container does not hold a PCA model");
    PcaModel model;
    model.preprocessing = c.attributes().value("preprocessing", "");
    const auto& mean = c.get("pca.mean");
    require(mean.shape.size() == 1, ErrorCode::DimensionMismatch, "pca.mean must be a vector");
    const auto d = mean.shape[0];
    const auto& comps = c.get("pca.components");
    require(comps.shape.size() == 2 && comps.shape[1] == d, ErrorCode::DimensionMismatch,
            "pca.components must be k x d");
    const auto k = comps.shape[0];
    const std::size_t vec_shape[] = {k};
    model.mean = Eigen::Map<const Eigen::VectorXd>(mean.data.data(), static_cast<Eigen::Index>(d));
    model.components = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                           comps.data.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d))
                           .transpose();
    const auto& var = c.get("pca.variances", vec_shape);
    const auto& ratio = c.get("pca.explained_ratio", vec_shape);
    model.variances = Eigen::Map<const Eigen::VectorXd>(var.data.data(), static_cast<Eigen::Index>(k));
    model.explained_ratio = Eigen::Map<const Eigen::VectorXd>(ratio.data.data(), static_cast<Eigen::Index>(k));
    return model;
}

}  // namespace facegen::appearance
