#include "mktcube/baselines.hpp"

#include <stdexcept>

namespace mktcube::models {

LinearModel fit_lr(const DesignMatrix& X, const Eigen::VectorXd& y, double ridge) {
    if (X.rows() != y.size()) throw std::invalid_argument("fit_lr: X and y row counts differ");
    if (X.rows() == 0) throw std::invalid_argument("fit_lr: empty design matrix");
    const Eigen::Index n = X.rows(), d = X.cols();

    Eigen::MatrixXd A(n, d + 1);
    A.leftCols(d) = X;
    A.col(d).setOnes();
    Eigen::MatrixXd gram = A.transpose() * A;
    gram.diagonal().head(d).array() += ridge;
    Eigen::VectorXd rhs = A.transpose() * y;
    Eigen::VectorXd sol = gram.ldlt().solve(rhs);

    LinearModel model;
    model.w = sol.head(d);
    model.b = sol(d);
    return model;
}

LinearModel fit_svr(const DesignMatrix& X, const Eigen::VectorXd& y, const SvrConfig& cfg) {
    if (X.rows() != y.size()) throw std::invalid_argument("fit_svr: X and y row counts differ");
    if (X.rows() == 0) throw std::invalid_argument("fit_svr: empty design matrix");
    const Eigen::Index n = X.rows(), d = X.cols();
    const double lambda = 1.0 / (cfg.c * static_cast<double>(n));

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    Eigen::VectorXd w_avg = Eigen::VectorXd::Zero(d);
    double b_avg = 0.0;
    int avg_count = 0;
    const int avg_start = cfg.iters / 2;

    for (int t = 0; t < cfg.iters; ++t) {
        Eigen::VectorXd resid = X * w + Eigen::VectorXd::Constant(n, b) - y;
        Eigen::VectorXd sgn(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = resid(i);
            sgn(i) = r > cfg.epsilon ? 1.0 : (r < -cfg.epsilon ? -1.0 : 0.0);
        }
        Eigen::VectorXd grad_w = lambda * w + (X.transpose() * sgn) / static_cast<double>(n);
        double grad_b = sgn.sum() / static_cast<double>(n);
        double eta = cfg.lr0 / std::sqrt(1.0 + t);
        w -= eta * grad_w;
        b -= eta * grad_b;
        if (t >= avg_start) {
            w_avg += w;
            b_avg += b;
            ++avg_count;
        }
    }
    LinearModel model;
    model.w = w_avg / avg_count;
    model.b = b_avg / avg_count;
    return model;
}

} // namespace mktcube::models
