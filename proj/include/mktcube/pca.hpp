#pragma once

#include "mktcube/indicators.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mktcube::segnet {

/// Top-k principal axes of the flattened training images, centered by the
/// per-pixel training mean. Axes are mutually orthonormal.
struct PCAModel {
    Eigen::VectorXd mean;   // D
    Eigen::MatrixXd axes;   // D x k, columns orthonormal
    Eigen::VectorXd singular_values;  // k, from the centered data matrix

    int components() const { return static_cast<int>(axes.cols()); }
};

/// k must not exceed the number of training images (nor the pixel count).
PCAModel pca_fit(const std::vector<data::RowMat>& train_images, int k);

/// mean + projection of (x - mean) onto the retained axes.
Eigen::VectorXd pca_roundtrip(const Eigen::Ref<const Eigen::VectorXd>& x, const PCAModel& model);

/// Mean per-pixel squared reconstruction error over a set of images.
double pca_reconstruction_mse(const PCAModel& model, const std::vector<data::RowMat>& images);

Eigen::VectorXd flatten_image(const data::RowMat& img);

struct CompareRow {
    int embedding_dim;
    double segnet_mse;
    double pca_mse;
};

} // namespace mktcube::segnet
