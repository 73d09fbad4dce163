#include "mktcube/pca.hpp"

#include <stdexcept>

namespace mktcube::segnet {

Eigen::VectorXd flatten_image(const data::RowMat& img) {
    return Eigen::Map<const Eigen::VectorXd>(img.data(), img.size());
}

PCAModel pca_fit(const std::vector<data::RowMat>& train_images, int k) {
    if (train_images.empty()) throw std::invalid_argument("pca_fit: no training images");
    const Eigen::Index n = static_cast<Eigen::Index>(train_images.size());
    const Eigen::Index d = train_images.front().size();
    if (k <= 0) throw std::invalid_argument("pca_fit: k must be positive");
    if (k > n) {
        throw std::invalid_argument("pca_fit: k=" + std::to_string(k) + " exceeds the " + std::to_string(n) +
                                    " training images");
    }
    if (k > d) throw std::invalid_argument("pca_fit: k exceeds the pixel count");

    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (train_images[static_cast<std::size_t>(i)].size() != d) {
            throw std::invalid_argument("pca_fit: images differ in size");
        }
        X.row(i) = flatten_image(train_images[static_cast<std::size_t>(i)]).transpose();
    }
    PCAModel model;
    model.mean = X.colwise().mean();
    X.rowwise() -= model.mean.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
    model.axes = svd.matrixV().leftCols(k);
    model.singular_values = svd.singularValues().head(k);
    return model;
}

Eigen::VectorXd pca_roundtrip(const Eigen::Ref<const Eigen::VectorXd>& x, const PCAModel& model) {
    if (x.size() != model.mean.size()) throw std::invalid_argument("pca_roundtrip: pixel count mismatch");
    Eigen::VectorXd centered = x - model.mean;
    return model.mean + model.axes * (model.axes.transpose() * centered);
}

double pca_reconstruction_mse(const PCAModel& model, const std::vector<data::RowMat>& images) {
    if (images.empty()) throw std::invalid_argument("pca_reconstruction_mse: no images");
    double acc = 0.0;
    for (const auto& img : images) {
        Eigen::VectorXd x = flatten_image(img);
        Eigen::VectorXd rec = pca_roundtrip(x, model);
        acc += (rec - x).squaredNorm() / static_cast<double>(x.size());
    }
    return acc / static_cast<double>(images.size());
}

} // namespace mktcube::segnet
