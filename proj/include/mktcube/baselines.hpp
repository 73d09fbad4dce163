#pragma once

#include <Eigen/Dense>

namespace mktcube::models {

using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LinearModel {
    Eigen::VectorXd w;
    double b = 0.0;

    double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const { return w.dot(x) + b; }
};

/// Ordinary least squares via normal equations with a small ridge on the Gram
/// diagonal (the intercept column excluded from the penalty).
LinearModel fit_lr(const DesignMatrix& X, const Eigen::VectorXd& y, double ridge = 1e-8);

struct SvrConfig {
    double c = 0.3;        // penalty parameter
    double epsilon = 0.1;  // insensitive-tube half width
    int iters = 400;
    double lr0 = 0.5;
};

/// Linear epsilon-insensitive regression trained by deterministic full-batch
/// subgradient descent on  0.5*lambda*||w||^2 + mean_i max(0, |r_i| - eps),
/// lambda = 1/(c*N). Returns the tail-averaged iterate.
LinearModel fit_svr(const DesignMatrix& X, const Eigen::VectorXd& y, const SvrConfig& cfg = {});

} // namespace mktcube::models
