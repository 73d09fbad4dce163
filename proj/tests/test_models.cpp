#include "mktcube/baselines.hpp"
#include "mktcube/dataset.hpp"
#include "mktcube/models.hpp"
#include "mktcube/rng.hpp"
#include "mktcube/synth.hpp"
#include "mktcube/train.hpp"

#include "gradcheck.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mktcube;
using namespace mktcube::ad;
using namespace mktcube::models;

namespace {

MAConfig tiny_ma() {
    MAConfig c;
    c.kernels = 3;
    c.embed_dim = 5;
    c.attention_dim = 4;
    c.phi_dim = 6;
    c.head_hidden = 7;
    c.lookback = 4;
    return c;
}

MARNNConfig tiny_marnn() {
    MARNNConfig c;
    c.ma = tiny_ma();
    c.cell = 4;
    c.phi2_dim = 5;
    c.fc1 = 8;
    c.fc2 = 6;
    return c;
}

TensorPtr random_cube(const MAConfig& c, int m, int n, std::mt19937_64& g) {
    return uniform({c.lookback, m, n}, -1.0, 1.0, g);
}

data::Dataset tiny_dataset(std::uint64_t seed = 33, int stocks = 4, int days = 170) {
    auto series = data::synth_market(seed, stocks, 2, days);
    data::DatasetConfig cfg;
    cfg.lookback = 4;
    return data::build_dataset(series, cfg);
}

} // namespace

TEST_CASE("MA: zero cube and zeroed head passes only the bias") {
    std::mt19937_64 g(41);
    const int m = 3, n = 4;
    MAModel model(m, n, tiny_ma(), g);
    // zero everything in the head except the output bias
    for (const char* name : {"head.w1", "head.b1", "head.w2", "head.b2", "head.w3"}) {
        model.params().get(name)->data.setZero();
    }
    model.params().get("head.b3")->data[0] = 0.625;
    auto out = model.forward_detail(zeros({4, m, n}), 1);
    CHECK(out.prediction->value() == doctest::Approx(0.625));
    // zero conv bias: every feature map is zero, so p = 0
    model.params().get("conv.bias")->data.setZero();
    auto out2 = model.forward_detail(zeros({4, m, n}), 0);
    CHECK(out2.pooled->data.abs().maxCoeff() == 0.0);
}

TEST_CASE("MA: identical embeddings give identical predictions") {
    std::mt19937_64 g(42);
    const int m = 4, n = 3;
    MAModel model(m, n, tiny_ma(), g);
    auto table = model.params().get("embed.table");
    for (Index j = 0; j < table->shape[1]; ++j) {
        table->data[2 * table->shape[1] + j] = table->data[0 * table->shape[1] + j];
    }
    auto cube = random_cube(tiny_ma(), m, n, g);
    CHECK(model.forward_detail(cube, 0).prediction->value() ==
          doctest::Approx(model.forward_detail(cube, 2).prediction->value()).epsilon(1e-14));
}

TEST_CASE("MA: prediction invariant under kernel permutation") {
    std::mt19937_64 g(43);
    const int m = 3, n = 4;
    MAConfig cfg = tiny_ma();
    MAModel model(m, n, cfg, g);
    auto cube = random_cube(cfg, m, n, g);
    double before = model.forward_detail(cube, 1).prediction->value();

    // rotate kernels and biases consistently: j -> (j+1) mod J
    auto kernels = model.params().get("conv.kernels");
    auto bias = model.params().get("conv.bias");
    Array k_orig = kernels->data;
    Array b_orig = bias->data;
    const Index block = n * m;
    for (Index j = 0; j < cfg.kernels; ++j) {
        Index src = (j + 1) % cfg.kernels;
        kernels->data.segment(j * block, block) = k_orig.segment(src * block, block);
        bias->data[j] = b_orig[src];
    }
    double after = model.forward_detail(cube, 1).prediction->value();
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("MA: attention weights form a probability vector") {
    std::mt19937_64 g(44);
    const int m = 5, n = 4;
    MAModel model(m, n, tiny_ma(), g);
    for (int trial = 0; trial < 25; ++trial) {
        auto cube = random_cube(tiny_ma(), m, n, g);
        auto res = model.forward_detail(cube, trial % m);
        CHECK(std::abs(res.weights->data.sum() - 1.0) < 1e-12);
        CHECK(res.weights->data.minCoeff() >= 0.0);
    }
}

TEST_CASE("MA: prediction depends on other stocks' rows") {
    std::mt19937_64 g(45);
    const int m = 4, n = 3;
    MAModel model(m, n, tiny_ma(), g);
    auto cube = random_cube(tiny_ma(), m, n, g);
    double base = model.forward_detail(cube, 0).prediction->value();
    // perturb a different stock's row on the last day
    auto bumped = from_array(cube->shape, cube->data);
    bumped->data[((tiny_ma().lookback - 1) * m + 2) * n + 1] += 0.37;
    double after = model.forward_detail(bumped, 0).prediction->value();
    CHECK(std::abs(after - base) > 1e-9);
}

TEST_CASE("MA: rejects wrong cube shape and bad stock index") {
    std::mt19937_64 g(46);
    MAModel model(3, 4, tiny_ma(), g);
    CHECK_THROWS_AS(model.forward_detail(zeros({4, 3, 5}), 0), std::invalid_argument);
    CHECK_THROWS_AS(model.forward_detail(zeros({3, 3, 4}), 0), std::invalid_argument);
    CHECK_THROWS_AS(model.forward_detail(zeros({4, 3, 4}), 3), std::invalid_argument);
}

TEST_CASE("MA: full-model gradient check (small instance)") {
    std::mt19937_64 g(47);
    const int m = 3, n = 3;
    MAConfig cfg = tiny_ma();
    cfg.kernels = 2;
    cfg.embed_dim = 3;
    cfg.attention_dim = 2;
    cfg.phi_dim = 3;
    cfg.head_hidden = 3;
    MAModel model(m, n, cfg, g);
    CHECK(model.params().total_count() <= 500);
    auto cube = random_cube(cfg, m, n, g);
    auto target = constant(0.3);
    auto loss = [&]() {
        auto diff = sub(model.forward_detail(cube, 1).prediction, target);
        return mul(diff, diff);
    };
    auto rep = testing::gradcheck(loss, model.params().tensors());
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("MA-RNN: zeroed phi2 path ignores the history") {
    std::mt19937_64 g(48);
    const int m = 3, n = 4;
    MARNNConfig cfg = tiny_marnn();
    MARNNModel model(m, n, cfg, g);
    model.params().get("fuse.phi2_w")->data.setZero();
    model.params().get("fuse.phi2_b")->data.setZero();
    auto cube = random_cube(cfg.ma, m, n, g);
    auto h1 = uniform({cfg.ma.lookback, n}, -1.0, 1.0, g);
    auto h2 = uniform({cfg.ma.lookback, n}, -1.0, 1.0, g);
    double a = model.forward_parts(cube, h1, 0)->value();
    double b = model.forward_parts(cube, h2, 0)->value();
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
}

TEST_CASE("MA-RNN: all-zero parameters pass only the output bias") {
    std::mt19937_64 g(49);
    const int m = 3, n = 4;
    MARNNModel model(m, n, tiny_marnn(), g);
    for (const auto& [name, t] : model.params().items()) {
        (void)name;
        t->data.setZero();
    }
    model.params().get("fuse.out_b")->data[0] = -0.125;
    auto cube = zeros({tiny_marnn().ma.lookback, m, n});
    auto hist = zeros({tiny_marnn().ma.lookback, n});
    CHECK(model.forward_parts(cube, hist, 2)->value() == doctest::Approx(-0.125));
}

TEST_CASE("MA-RNN: rejects history of the wrong length") {
    std::mt19937_64 g(50);
    const int m = 3, n = 4;
    MARNNModel model(m, n, tiny_marnn(), g);
    auto cube = random_cube(tiny_marnn().ma, m, n, g);
    CHECK_THROWS_AS(model.forward_parts(cube, zeros({3, n}), 0), std::invalid_argument);
    CHECK_THROWS_AS(model.forward_parts(cube, zeros({4, n + 1}), 0), std::invalid_argument);
}

TEST_CASE("MA-RNN: every parameter group receives gradient") {
    std::mt19937_64 g(51);
    const int m = 3, n = 4;
    MARNNModel model(m, n, tiny_marnn(), g);
    auto cube = random_cube(tiny_marnn().ma, m, n, g);
    auto hist = uniform({tiny_marnn().ma.lookback, n}, -1.0, 1.0, g);
    zero_grads(model.params().tensors());
    backward(model.forward_parts(cube, hist, 1));
    for (const auto& [name, t] : model.params().items()) {
        INFO("parameter group: " << name);
        REQUIRE(t->grad.size() == t->size());
        CHECK(t->grad.abs().maxCoeff() > 0.0);
    }
}

TEST_CASE("MA-RNN: full-model gradient check (small instance)") {
    std::mt19937_64 g(52);
    const int m = 2, n = 3;
    MARNNConfig cfg = tiny_marnn();
    cfg.ma.kernels = 2;
    cfg.ma.embed_dim = 3;
    cfg.ma.attention_dim = 2;
    cfg.ma.phi_dim = 3;
    cfg.cell = 2;
    cfg.phi2_dim = 3;
    cfg.fc1 = 4;
    cfg.fc2 = 3;
    MARNNModel model(m, n, cfg, g);
    CHECK(model.params().total_count() <= 500);
    auto cube = random_cube(cfg.ma, m, n, g);
    auto hist = uniform({cfg.ma.lookback, n}, -1.0, 1.0, g);
    auto target = constant(-0.2);
    auto rep = testing::gradcheck(
        [&]() {
            auto diff = sub(model.forward_parts(cube, hist, 0), target);
            return mul(diff, diff);
        },
        model.params().tensors());
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("FFNN: zero weights give the bias chain value") {
    std::mt19937_64 g(53);
    FFNNConfig cfg;
    cfg.hidden = 5;
    cfg.lookback = 4;
    FFNNModel model(3, cfg, g);
    model.params().get("ffnn.w1")->data.setZero();
    model.params().get("ffnn.w2")->data.setZero();
    model.params().get("ffnn.w3")->data.setZero();
    double b3 = model.params().get("ffnn.b3")->data[0];
    SampleInput in;
    in.flat = uniform({12}, -1.0, 1.0, g);
    CHECK(model.forward(in)->value() == doctest::Approx(b3));
}

TEST_CASE("LSTM-RNN: zero sequence with zero weights predicts zero") {
    std::mt19937_64 g(54);
    LstmRnnConfig cfg;
    cfg.cell = 3;
    cfg.lookback = 4;
    LstmRnnModel model(3, cfg, g);
    for (const auto& [name, t] : model.params().items()) {
        (void)name;
        t->data.setZero();
    }
    SampleInput in;
    in.history = zeros({4, 3});
    CHECK(model.forward(in)->value() == 0.0);
}

TEST_CASE("FFNN and LSTM-RNN overfit a 32-sample toy set") {
    std::mt19937_64 g(55);
    const int n = 3, t = 4;
    std::vector<TensorPtr> flats, hists;
    std::vector<double> targets;
    for (int i = 0; i < 32; ++i) {
        auto h = uniform({t, n}, -1.0, 1.0, g);
        hists.push_back(h);
        flats.push_back(reshape(h, {t * n}));
        targets.push_back(0.8 * h->data[0] - 0.3 * h->data[5]);
    }

    auto run = [&](GradModel& model, bool use_history) {
        auto params = model.params().tensors();
        OptimizerState st = OptimizerState::for_params(params, 0.01);
        double last = 1e9;
        for (int step = 0; step < 2000; ++step) {
            std::vector<TensorPtr> sq;
            for (int i = 0; i < 32; ++i) {
                SampleInput in;
                if (use_history) in.history = hists[static_cast<std::size_t>(i)];
                else in.flat = flats[static_cast<std::size_t>(i)];
                auto diff = sub(model.forward(in), constant(targets[static_cast<std::size_t>(i)]));
                sq.push_back(mul(diff, diff));
            }
            auto loss = mean(concat(sq));
            last = loss->value();
            if (last < 1e-3) break;
            zero_grads(params);
            backward(loss);
            clip_global_norm(params, 5.0);
            adam_step(params, st);
        }
        return last;
    };

    FFNNConfig fc;
    fc.hidden = 12;
    fc.lookback = t;
    FFNNModel ffnn(n, fc, g);
    CHECK(run(ffnn, false) < 1e-3);

    LstmRnnConfig lc;
    lc.cell = 8;
    lc.lookback = t;
    LstmRnnModel lstm(n, lc, g);
    CHECK(run(lstm, true) < 1e-3);
}

TEST_CASE("LR: exact linear relationship recovered") {
    DesignMatrix X(6, 1);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) {
        X(i, 0) = i - 2.5;
        y(i) = 2.0 * X(i, 0);
    }
    LinearModel m = fit_lr(X, y);
    CHECK(m.w(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(m.b) < 1e-9);
}

TEST_CASE("LR: constant target gives zero weights and mean intercept") {
    std::mt19937_64 g(56);
    auto rnd = [&]() { return rng::uniform(g, -1.0, 1.0); };
    DesignMatrix X(20, 3);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 1.75);
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 3; ++j) X(i, j) = rnd();
    }
    LinearModel m = fit_lr(X, y);
    CHECK(m.w.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(m.b == doctest::Approx(1.75).epsilon(1e-9));
}

TEST_CASE("LR: residual orthogonal to the columns") {
    std::mt19937_64 g(57);
    DesignMatrix X(40, 4);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 4; ++j) X(i, j) = rng::uniform(g, -1.0, 1.0);
        y(i) = rng::uniform(g, -1.0, 1.0);
    }
    LinearModel m = fit_lr(X, y);
    Eigen::VectorXd resid = y - X * m.w - Eigen::VectorXd::Constant(40, m.b);
    Eigen::VectorXd proj = X.transpose() * resid;
    CHECK(proj.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(resid.sum()) < 1e-8);
}

TEST_CASE("SVR: inside the tube only the ridge term acts") {
    DesignMatrix X(4, 2);
    X << 0.1, 0.2, -0.1, 0.1, 0.2, -0.2, 0.0, 0.05;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(4);  // residuals all inside epsilon=0.1
    SvrConfig cfg;
    cfg.iters = 5;
    LinearModel m = fit_svr(X, y, cfg);
    // started at w=0 with zero loss subgradient: stays at 0
    CHECK(m.w.cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.b == 0.0);
}

TEST_CASE("SVR: learned slope within 10% of OLS on a 1-D toy set") {
    std::mt19937_64 g(58);
    DesignMatrix X(60, 1);
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i) {
        X(i, 0) = rng::uniform(g, -1.0, 1.0);
        y(i) = 1.4 * X(i, 0) + rng::normal(g, 0.0, 0.02);
    }
    LinearModel ols = fit_lr(X, y);
    SvrConfig cfg;
    cfg.iters = 2000;
    LinearModel svr = fit_svr(X, y, cfg);
    CHECK(std::abs(svr.w(0) - ols.w(0)) < 0.1 * std::abs(ols.w(0)));
}

TEST_CASE("SVR: deterministic") {
    std::mt19937_64 g(59);
    DesignMatrix X(30, 2);
    Eigen::VectorXd y(30);
    for (int i = 0; i < 30; ++i) {
        X(i, 0) = rng::uniform(g, -1.0, 1.0);
        X(i, 1) = rng::uniform(g, -1.0, 1.0);
        y(i) = X(i, 0) - 0.5 * X(i, 1);
    }
    LinearModel a = fit_svr(X, y);
    LinearModel b = fit_svr(X, y);
    CHECK(a.w == b.w);
    CHECK(a.b == b.b);
}

TEST_CASE("train: lr = 0 leaves parameters unchanged") {
    data::Dataset ds = tiny_dataset();
    std::mt19937_64 g(60);
    FFNNConfig fc;
    fc.hidden = 6;
    fc.lookback = ds.lookback;
    FFNNModel model(ds.indicators(), fc, g);
    std::vector<Array> before;
    for (const auto& p : model.params().tensors()) before.push_back(p->data);
    TrainProtocol proto;
    proto.epochs = 1;
    proto.patience = 5;
    proto.lr = 0.0;
    proto.horizon = 1;
    train_grad_model(model, ds, proto);
    auto after = model.params().tensors();
    for (std::size_t i = 0; i < after.size(); ++i) {
        for (Index k = 0; k < after[i]->size(); ++k) CHECK(after[i]->data[k] == before[i][k]);
    }
}

TEST_CASE("train: determinism of the metric trace") {
    data::Dataset ds = tiny_dataset();
    auto run = [&]() {
        std::mt19937_64 g(61);
        FFNNConfig fc;
        fc.hidden = 6;
        fc.lookback = ds.lookback;
        FFNNModel model(ds.indicators(), fc, g);
        TrainProtocol proto;
        proto.epochs = 4;
        proto.horizon = 1;
        proto.seed = 99;
        return train_grad_model(model, ds, proto);
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        CHECK(a.metrics[i].train_mse == b.metrics[i].train_mse);
        CHECK(a.metrics[i].val_mse == b.metrics[i].val_mse);
    }
}

TEST_CASE("train: best-validation parameters are restored") {
    data::Dataset ds = tiny_dataset();
    std::mt19937_64 g(62);
    FFNNConfig fc;
    fc.hidden = 6;
    fc.lookback = ds.lookback;
    FFNNModel model(ds.indicators(), fc, g);
    TrainProtocol proto;
    proto.epochs = 6;
    proto.horizon = 1;
    TrainOutcome out = train_grad_model(model, ds, proto);
    REQUIRE(out.best_epoch >= 0);
    double val = evaluate_grad_model(model, ds, data::Part::Validation, 1).mse;
    CHECK(val == doctest::Approx(out.best_val_mse).epsilon(1e-12));
}

TEST_CASE("evaluate: zero predictor MSE equals the mean squared label") {
    data::Dataset ds = tiny_dataset();
    std::mt19937_64 g(63);
    FFNNConfig fc;
    fc.hidden = 4;
    fc.lookback = ds.lookback;
    FFNNModel model(ds.indicators(), fc, g);
    for (const auto& [name, t] : model.params().items()) {
        (void)name;
        t->data.setZero();
    }
    EvalResult res = evaluate_grad_model(model, ds, data::Part::Validation, 1);
    double acc = 0.0;
    int count = 0;
    for (const auto& row : res.rows) {
        if (!row.valid) continue;
        acc += row.label * row.label;
        ++count;
    }
    CHECK(res.count == count);
    CHECK(res.mse == doctest::Approx(acc / count).epsilon(1e-12));
}

TEST_CASE("evaluate: MSE equals a recomputation over the emitted CSV") {
    data::Dataset ds = tiny_dataset();
    std::mt19937_64 g(64);
    FFNNConfig fc;
    fc.hidden = 4;
    fc.lookback = ds.lookback;
    FFNNModel model(ds.indicators(), fc, g);
    EvalResult res = evaluate_grad_model(model, ds, data::Part::Backtest, 5);

    auto path = (std::filesystem::temp_directory_path() / "mktcube_pred.csv").string();
    save_predictions_csv(path, res.rows);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "date,stock_id,horizon,prediction,label,valid");
    double acc = 0.0;
    int count = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string date, stock, h, pred, label, valid;
        std::getline(ss, date, ',');
        std::getline(ss, stock, ',');
        std::getline(ss, h, ',');
        std::getline(ss, pred, ',');
        std::getline(ss, label, ',');
        std::getline(ss, valid, ',');
        if (valid != "1") continue;
        double diff = std::stod(pred) - std::stod(label);
        acc += diff * diff;
        ++count;
    }
    REQUIRE(count == res.count);
    CHECK(res.mse == doctest::Approx(acc / count).epsilon(1e-12));
    std::filesystem::remove(path);
}

TEST_CASE("evaluate: empty set rejected") {
    data::Dataset ds = tiny_dataset();
    std::mt19937_64 g(65);
    FFNNConfig fc;
    fc.hidden = 4;
    fc.lookback = ds.lookback;
    FFNNModel model(ds.indicators(), fc, g);
    data::Dataset clipped = ds;
    clipped.split.backtest.clear();
    CHECK_THROWS_AS(evaluate_grad_model(model, clipped, data::Part::Backtest, 1), std::invalid_argument);
}

TEST_CASE("baselines see only the target stock's rows") {
    data::Dataset ds = tiny_dataset();
    std::mt19937_64 g(66);
    FFNNConfig fc;
    fc.hidden = 4;
    fc.lookback = ds.lookback;
    FFNNModel model(ds.indicators(), fc, g);
    int d = ds.split.validation.front();

    SampleTensorCache cache(ds);
    double base = model.forward(cache.input(d, 0, model))->value();

    // perturbing another stock's image rows leaves the prediction unchanged
    data::Dataset bumped = ds;
    for (auto& img : bumped.images_norm) img.row(2).array() += 1.0;
    SampleTensorCache cache2(bumped);
    double after = model.forward(cache2.input(d, 0, model))->value();
    CHECK(after == base);
}
