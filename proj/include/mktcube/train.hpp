#pragma once

#include "mktcube/baselines.hpp"
#include "mktcube/dataset.hpp"
#include "mktcube/models.hpp"
#include "mktcube/optim.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace mktcube::models {

struct TrainProtocol {
    int batch = 10;
    int epochs = 30;
    int patience = 10;
    double lr = 0.001;
    double clip = 5.0;
    int horizon = 1;
    std::uint64_t seed = 42;
};

struct EpochMetric {
    int epoch;
    double train_mse;
    double val_mse;
};

struct TrainOutcome {
    std::vector<EpochMetric> metrics;
    int best_epoch = -1;
    double best_val_mse = std::numeric_limits<double>::infinity();
    ad::OptimizerState optimizer;  // state at the end of training
    int invalid_train_labels = 0;
    int invalid_val_labels = 0;
};

/// Builds cube/history/flat input tensors over the dataset on demand and
/// memoizes them; the tensors are constant leaves shared across graphs.
class SampleTensorCache {
public:
    explicit SampleTensorCache(const data::Dataset& ds);
    SampleInput input(int date_idx, int stock_idx, const GradModel& model);

private:
    const data::Dataset& ds_;
    std::vector<ad::TensorPtr> cubes_;
    std::vector<std::vector<ad::TensorPtr>> histories_;
    std::vector<std::vector<ad::TensorPtr>> flats_;
};

/// Mini-batch Adam with global-norm clipping and early stopping on validation
/// MSE; the best-validation parameters are restored into the model before
/// returning. Deterministic under a fixed seed. Throws NumericalError naming
/// the offending batch when the loss goes non-finite.
TrainOutcome train_grad_model(GradModel& model, const data::Dataset& ds, const TrainProtocol& proto);

struct PredictionRow {
    std::string date;
    std::string stock_id;
    int horizon;
    double prediction;
    double label;  // scaled return; 0 when invalid
    bool valid;
};

struct EvalResult {
    double mse = 0.0;
    int count = 0;             // (stock, date) pairs entering the MSE
    int invalid_excluded = 0;  // pairs skipped for invalid labels
    std::vector<PredictionRow> rows;
};

/// MSE over the partition's (stock, date) pairs on scaled returns; rows cover
/// every pair with a full lookback window, invalid labels excluded from the
/// MSE but still listed. Rejects an empty evaluation set.
EvalResult evaluate_grad_model(GradModel& model, const data::Dataset& ds, data::Part part, int horizon);
EvalResult evaluate_linear(const LinearModel& model, const data::Dataset& ds, data::Part part, int horizon);

/// Flattened per-stock lookback windows as a design matrix for LR/SVR.
void build_design(const data::Dataset& ds, data::Part part, int horizon, DesignMatrix& X, Eigen::VectorXd& y,
                  int* invalid_count = nullptr);

void save_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows);

} // namespace mktcube::models
