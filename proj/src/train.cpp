#include "mktcube/train.hpp"

#include "mktcube/errors.hpp"
#include "mktcube/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace mktcube::models {

using namespace mktcube::ad;

SampleTensorCache::SampleTensorCache(const data::Dataset& ds) : ds_(ds) {
    cubes_.resize(static_cast<std::size_t>(ds.days()));
    histories_.assign(static_cast<std::size_t>(ds.days()), {});
    flats_.assign(static_cast<std::size_t>(ds.days()), {});
}

SampleInput SampleTensorCache::input(int date_idx, int stock_idx, const GradModel& model) {
    const int t = ds_.lookback;
    const int m = ds_.stocks();
    const int n = ds_.indicators();
    if (date_idx < t - 1) {
        throw std::invalid_argument("SampleTensorCache: date index " + std::to_string(date_idx) +
                                    " has no full lookback window");
    }
    SampleInput in;
    in.stock_idx = stock_idx;
    auto d = static_cast<std::size_t>(date_idx);

    if (model.needs_cube()) {
        if (!cubes_[d]) {
            Array buf(static_cast<Index>(t) * m * n);
            for (int k = 0; k < t; ++k) {
                const auto& img = ds_.images_norm[static_cast<std::size_t>(date_idx - t + 1 + k)];
                std::copy(img.data(), img.data() + m * n, buf.data() + static_cast<Index>(k) * m * n);
            }
            cubes_[d] = from_array({t, m, n}, buf);
        }
        in.cube = cubes_[d];
    }
    if (model.needs_history() || model.needs_flat()) {
        if (histories_[d].empty()) {
            histories_[d].resize(static_cast<std::size_t>(m));
            flats_[d].resize(static_cast<std::size_t>(m));
        }
        auto s = static_cast<std::size_t>(stock_idx);
        if (!histories_[d][s]) {
            Array buf(static_cast<Index>(t) * n);
            for (int k = 0; k < t; ++k) {
                const auto& img = ds_.images_norm[static_cast<std::size_t>(date_idx - t + 1 + k)];
                Eigen::Map<Eigen::RowVectorXd>(buf.data() + static_cast<Index>(k) * n, n) = img.row(stock_idx);
            }
            histories_[d][s] = from_array({t, n}, buf);
            flats_[d][s] = from_array({static_cast<Index>(t) * n}, buf);
        }
        if (model.needs_history()) in.history = histories_[d][s];
        if (model.needs_flat()) in.flat = flats_[d][s];
    }
    return in;
}

namespace {

double forward_mse(GradModel& model, SampleTensorCache& cache, const std::vector<data::Sample>& samples) {
    double acc = 0.0;
    for (const auto& s : samples) {
        TensorPtr pred = model.forward(cache.input(s.date_idx, s.stock_idx, model));
        double diff = pred->value() - s.label;
        acc += diff * diff;
    }
    return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
}

} // namespace

TrainOutcome train_grad_model(GradModel& model, const data::Dataset& ds, const TrainProtocol& proto) {
    TrainOutcome out;
    std::vector<data::Sample> train =
        data::collect_samples(ds, data::Part::Train, proto.horizon, &out.invalid_train_labels);
    std::vector<data::Sample> val =
        data::collect_samples(ds, data::Part::Validation, proto.horizon, &out.invalid_val_labels);
    if (train.empty()) throw std::invalid_argument("train: no valid training samples at horizon " +
                                                   std::to_string(proto.horizon));

    SampleTensorCache cache(ds);
    std::vector<TensorPtr> params = model.params().tensors();
    out.optimizer = OptimizerState::for_params(params, proto.lr);

    std::vector<Array> best_params;
    auto snapshot = [&]() {
        best_params.clear();
        for (const auto& p : params) best_params.push_back(p->data);
    };

    auto shuffle_rng = rng::stream(proto.seed, "shuffle");
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < proto.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        int batch_index = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(proto.batch), ++batch_index) {
            std::size_t hi = std::min(order.size(), pos + static_cast<std::size_t>(proto.batch));
            std::vector<TensorPtr> sq_errors;
            sq_errors.reserve(hi - pos);
            for (std::size_t k = pos; k < hi; ++k) {
                const data::Sample& s = train[order[k]];
                TensorPtr pred = model.forward(cache.input(s.date_idx, s.stock_idx, model));
                TensorPtr diff = sub(pred, constant(s.label));
                sq_errors.push_back(mul(diff, diff));
            }
            TensorPtr loss = mean(concat(sq_errors));
            if (!std::isfinite(loss->value())) {
                throw NumericalError("train: non-finite loss in model " + model.kind() + " at epoch " +
                                     std::to_string(epoch) + " batch " + std::to_string(batch_index));
            }
            epoch_loss += loss->value() * static_cast<double>(hi - pos);
            seen += hi - pos;
            zero_grads(params);
            backward(loss);
            clip_global_norm(params, proto.clip);
            adam_step(params, out.optimizer);
        }
        double train_mse = epoch_loss / static_cast<double>(seen);
        double val_mse = val.empty() ? train_mse : forward_mse(model, cache, val);
        out.metrics.push_back({epoch, train_mse, val_mse});

        if (val_mse < out.best_val_mse) {
            out.best_val_mse = val_mse;
            out.best_epoch = epoch;
            snapshot();
        }
        if (epoch - out.best_epoch >= proto.patience) break;
    }

    if (!best_params.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->data = best_params[i];
    }
    return out;
}

namespace {

EvalResult evaluate_common(const data::Dataset& ds, data::Part part, int horizon,
                           const std::function<double(int, int)>& predict) {
    const auto& day_list = ds.part_days(part);
    int hidx = ds.labels.horizon_index(horizon);
    EvalResult res;
    double acc = 0.0;
    for (int d : day_list) {
        if (d < ds.lookback - 1) continue;
        for (int i = 0; i < ds.stocks(); ++i) {
            const data::LabelEntry& e =
                ds.labels.entries[static_cast<std::size_t>(d)][static_cast<std::size_t>(i)][static_cast<std::size_t>(hidx)];
            double pred = predict(d, i);
            res.rows.push_back({ds.dates[static_cast<std::size_t>(d)], ds.stock_order[static_cast<std::size_t>(i)],
                                horizon, pred, e.valid ? e.scaled : 0.0, e.valid});
            if (e.valid) {
                double diff = pred - e.scaled;
                acc += diff * diff;
                ++res.count;
            } else {
                ++res.invalid_excluded;
            }
        }
    }
    if (res.count == 0) throw std::invalid_argument("evaluate: empty evaluation set");
    res.mse = acc / static_cast<double>(res.count);
    return res;
}

void flat_window(const data::Dataset& ds, int date_idx, int stock_idx, Eigen::VectorXd& out) {
    const int t = ds.lookback, n = ds.indicators();
    out.resize(static_cast<Eigen::Index>(t) * n);
    for (int k = 0; k < t; ++k) {
        const auto& img = ds.images_norm[static_cast<std::size_t>(date_idx - t + 1 + k)];
        out.segment(static_cast<Eigen::Index>(k) * n, n) = img.row(stock_idx).transpose();
    }
}

} // namespace

EvalResult evaluate_grad_model(GradModel& model, const data::Dataset& ds, data::Part part, int horizon) {
    SampleTensorCache cache(ds);
    return evaluate_common(ds, part, horizon, [&](int d, int i) {
        return model.forward(cache.input(d, i, model))->value();
    });
}

EvalResult evaluate_linear(const LinearModel& model, const data::Dataset& ds, data::Part part, int horizon) {
    Eigen::VectorXd x;
    return evaluate_common(ds, part, horizon, [&](int d, int i) {
        flat_window(ds, d, i, x);
        return model.predict(x);
    });
}

void build_design(const data::Dataset& ds, data::Part part, int horizon, DesignMatrix& X, Eigen::VectorXd& y,
                  int* invalid_count) {
    std::vector<data::Sample> samples = data::collect_samples(ds, part, horizon, invalid_count);
    if (samples.empty()) throw std::invalid_argument("build_design: no valid samples");
    const Eigen::Index dim = static_cast<Eigen::Index>(ds.lookback) * ds.indicators();
    X.resize(static_cast<Eigen::Index>(samples.size()), dim);
    y.resize(static_cast<Eigen::Index>(samples.size()));
    Eigen::VectorXd row;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        flat_window(ds, samples[k].date_idx, samples[k].stock_idx, row);
        X.row(static_cast<Eigen::Index>(k)) = row.transpose();
        y(static_cast<Eigen::Index>(k)) = samples[k].label;
    }
}

void save_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("save_predictions_csv: cannot open " + path);
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "date,stock_id,horizon,prediction,label,valid\n";
    for (const auto& r : rows) {
        out << r.date << "," << r.stock_id << "," << r.horizon << "," << fmt(r.prediction) << "," << fmt(r.label)
            << "," << (r.valid ? 1 : 0) << "\n";
    }
}

} // namespace mktcube::models
