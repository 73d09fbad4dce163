#include "mktcube/commands.hpp"

#include "mktcube/checkpoint.hpp"
#include "mktcube/dataset.hpp"
#include "mktcube/errors.hpp"
#include "mktcube/pca.hpp"
#include "mktcube/rng.hpp"
#include "mktcube/segnet.hpp"
#include "mktcube/synth.hpp"
#include "mktcube/train.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <thread>

namespace fs = std::filesystem;

namespace mktcube::harness {

namespace {

using mktcube::ad::Checkpoint;
using mktcube::ad::NormStatsBlob;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string require_dir_key(const Config& cfg, const std::string& key) {
    if (!cfg.is_set(key)) throw ConfigError("config key '" + key + "' is required for this command");
    return cfg.get(key);
}

data::SynthConfig synth_config(const Config& cfg) {
    data::SynthConfig sc;
    sc.seed = cfg.get_u64("seed");
    sc.stocks = cfg.get_int("synth.stocks");
    sc.sectors = cfg.get_int("synth.sectors");
    sc.subsectors_per_sector = cfg.get_int("synth.subsectors");
    sc.days = cfg.get_int("synth.days");
    sc.factor_sigma = cfg.get_double("synth.factor_sigma");
    sc.idio_sigma = cfg.get_double("synth.idio_sigma");
    sc.beta_mkt_min = cfg.get_double("synth.beta_mkt_min");
    sc.beta_mkt_max = cfg.get_double("synth.beta_mkt_max");
    sc.beta_sec_min = cfg.get_double("synth.beta_sec_min");
    sc.beta_sec_max = cfg.get_double("synth.beta_sec_max");
    sc.market_ar = cfg.get_double("synth.market_ar");
    sc.sector_ar = cfg.get_double("synth.sector_ar");
    sc.idio_ar = cfg.get_double("synth.idio_ar");
    sc.nonlinear = cfg.get_bool("synth.nonlinear");
    sc.nonlinear_scale = cfg.get_double("synth.nonlinear_scale");
    return sc;
}

data::SplitSpec split_spec(const Config& cfg) {
    data::SplitSpec s;
    s.train_days = cfg.get_opt_int("split.train_days");
    s.val_days = cfg.get_opt_int("split.val_days");
    s.backtest_days = cfg.get_opt_int("split.backtest_days");
    s.train_end = cfg.get_opt_string("split.train_end");
    s.val_end = cfg.get_opt_string("split.val_end");
    return s;
}

data::DatasetConfig dataset_config(const Config& cfg) {
    data::DatasetConfig dc;
    dc.indicators.fill = data::parse_fill_mode(cfg.get("fill_mode"));
    dc.split = split_spec(cfg);
    dc.sigma_window = cfg.get_int("sigma_window");
    dc.lookback = cfg.get_int("lookback");
    return dc;
}

models::TrainProtocol protocol(const Config& cfg, const std::string& kind, int horizon) {
    models::TrainProtocol p;
    p.batch = cfg.get_int("batch");
    p.epochs = cfg.get_int("epochs");
    p.patience = cfg.get_int("patience");
    p.lr = cfg.get_double("lr");
    p.clip = cfg.get_double("clip");
    p.horizon = horizon;
    p.seed = rng::stream_key(cfg.get_u64("seed"), "train:" + kind + ":h" + std::to_string(horizon));
    return p;
}

std::unique_ptr<models::GradModel> make_grad_model(const std::string& kind, int m, int n, const Config& cfg,
                                                   std::mt19937_64& init) {
    int lookback = cfg.get_int("lookback");
    if (kind == "ma") {
        models::MAConfig mc;
        mc.kernels = cfg.get_int("ma.kernels");
        mc.embed_dim = cfg.get_int("ma.embed_dim");
        mc.attention_dim = cfg.get_int("ma.attention_dim");
        mc.phi_dim = cfg.get_int("ma.phi_dim");
        mc.head_hidden = cfg.get_int("ma.head_hidden");
        mc.lookback = lookback;
        return std::make_unique<models::MAModel>(m, n, mc, init);
    }
    if (kind == "ma-rnn") {
        models::MARNNConfig rc;
        rc.ma.kernels = cfg.get_int("ma.kernels");
        rc.ma.embed_dim = cfg.get_int("ma.embed_dim");
        rc.ma.attention_dim = cfg.get_int("ma.attention_dim");
        rc.ma.phi_dim = cfg.get_int("ma.phi_dim");
        rc.ma.head_hidden = cfg.get_int("ma.head_hidden");
        rc.ma.lookback = lookback;
        rc.cell = cfg.get_int("marnn.cell");
        rc.phi2_dim = cfg.get_int("marnn.phi2_dim");
        rc.fc1 = cfg.get_int("marnn.fc1");
        rc.fc2 = cfg.get_int("marnn.fc2");
        return std::make_unique<models::MARNNModel>(m, n, rc, init);
    }
    if (kind == "ffnn") {
        models::FFNNConfig fc;
        fc.hidden = cfg.get_int("ffnn.hidden");
        fc.lookback = lookback;
        return std::make_unique<models::FFNNModel>(n, fc, init);
    }
    if (kind == "lstm-rnn") {
        models::LstmRnnConfig lc;
        lc.cell = cfg.get_int("lstmrnn.cell");
        lc.lookback = lookback;
        return std::make_unique<models::LstmRnnModel>(n, lc, init);
    }
    throw ConfigError("config key 'model': unknown gradient model '" + kind + "'");
}

NormStatsBlob stats_to_blob(const data::NormStats& s) {
    NormStatsBlob b;
    b.names = s.names;
    b.mins.assign(s.min.data(), s.min.data() + s.min.size());
    b.maxs.assign(s.max.data(), s.max.data() + s.max.size());
    return b;
}

data::NormStats blob_to_stats(const NormStatsBlob& b) {
    data::NormStats s;
    s.names = b.names;
    s.min = Eigen::Map<const Eigen::ArrayXd>(b.mins.data(), static_cast<Eigen::Index>(b.mins.size()));
    s.max = Eigen::Map<const Eigen::ArrayXd>(b.maxs.data(), static_cast<Eigen::Index>(b.maxs.size()));
    s.degenerate.assign(b.names.size(), false);
    for (std::size_t j = 0; j < b.names.size(); ++j) {
        if (!(s.max[static_cast<Eigen::Index>(j)] > s.min[static_cast<Eigen::Index>(j)])) s.degenerate[j] = true;
    }
    return s;
}

void renormalize(data::Dataset& ds, const data::NormStats& stats) {
    ds.stats = stats;
    ds.images_norm.clear();
    ds.images_norm.reserve(ds.images_raw.size());
    for (const auto& raw : ds.images_raw) ds.images_norm.push_back(data::apply_norm(raw, stats));
}

data::Part parse_part(const std::string& s) {
    if (s == "train") return data::Part::Train;
    if (s == "validation") return data::Part::Validation;
    if (s == "backtest") return data::Part::Backtest;
    throw ConfigError("config key 'eval.part': expected train|validation|backtest, got '" + s + "'");
}

/// Loads the cube + label artifacts written by build-images and assembles the
/// dataset with the configured split.
data::Dataset load_dataset(const Config& cfg) {
    std::string out_dir = cfg.get("out_dir");
    fs::path cube_path = fs::path(out_dir) / "images.mkcb";
    fs::path labels_path = fs::path(out_dir) / "labels.csv";
    if (!fs::exists(cube_path)) throw MissingInputError("missing input: " + cube_path.string() + " (run build-images)");
    if (!fs::exists(labels_path)) throw MissingInputError("missing input: " + labels_path.string() + " (run build-images)");

    data::MarketCube cube = data::load_cube(cube_path.string());
    data::LabelPanel labels = data::load_labels_csv(labels_path.string());

    // Sector ids from the universe manifest, when available.
    std::vector<int> sector_ids(cube.stock_order.size(), 0);
    if (cfg.is_set("data_dir")) {
        auto series = data::load_data_dir(cfg.get("data_dir"));
        for (std::size_t i = 0; i < cube.stock_order.size(); ++i) {
            for (const auto& s : series) {
                if (s.stock_id == cube.stock_order[i]) {
                    sector_ids[i] = s.sector_id;
                    break;
                }
            }
        }
    }
    return data::build_dataset(cube, labels, split_spec(cfg), sector_ids, cfg.get_int("lookback"));
}

void write_metrics_csv(const std::string& path, const std::vector<models::EpochMetric>& metrics) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << "epoch,split,mse\n";
    for (const auto& m : metrics) {
        out << m.epoch << ",train," << fmt(m.train_mse) << "\n";
        out << m.epoch << ",validation," << fmt(m.val_mse) << "\n";
    }
}

void write_report(const std::string& path, const Config& cfg, const std::vector<std::string>& lines,
                  double wall_seconds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << "# run report\n";
    for (const auto& l : lines) out << l << "\n";
    out << "wall_clock_sec=" << fmt(wall_seconds) << "\n";
    out << "# resolved config\n" << cfg.resolved();
}

std::vector<ad::TensorPtr> part_image_tensors(const data::Dataset& ds, const std::vector<int>& day_idx) {
    std::vector<ad::TensorPtr> out;
    out.reserve(day_idx.size());
    for (int d : day_idx) {
        const auto& img = ds.images_norm[static_cast<std::size_t>(d)];
        ad::Array buf = Eigen::Map<const ad::Array>(img.data(), img.size());
        out.push_back(ad::from_array({img.rows(), img.cols()}, buf));
    }
    return out;
}

segnet::SegNetConfig segnet_config(const Config& cfg) {
    segnet::SegNetConfig sc;
    sc.channels = cfg.get_int_list("segnet.channels");
    sc.kernel_extent = cfg.get_int("segnet.extent");
    sc.pool_window = cfg.get_int("segnet.pool");
    sc.grid_rows = cfg.get_int("segnet.grid");
    sc.embedding_dim = cfg.get_int("segnet.embedding_dim");
    return sc;
}

segnet::AutoencoderTrainConfig segnet_train_config(const Config& cfg, int embedding_dim) {
    segnet::AutoencoderTrainConfig tc;
    tc.batch = cfg.get_int("segnet.batch");
    tc.epochs = cfg.get_int("segnet.epochs");
    tc.patience = cfg.get_int("segnet.patience");
    tc.lr = cfg.get_double("lr");
    tc.clip = cfg.get_double("clip");
    tc.seed = rng::stream_key(cfg.get_u64("seed"), "train:segnet:k" + std::to_string(embedding_dim));
    return tc;
}

struct TrainedModel {
    Checkpoint checkpoint;
    std::vector<models::EpochMetric> metrics;
    double val_mse = 0.0;
    double backtest_mse = 0.0;
};

/// Trains one return-prediction model (any of the six kinds) at one horizon.
TrainedModel train_one(const Config& cfg, const data::Dataset& ds, const std::string& kind, int horizon) {
    TrainedModel out;
    NormStatsBlob stats = stats_to_blob(ds.stats);

    if (kind == "lr" || kind == "svr") {
        models::DesignMatrix X;
        Eigen::VectorXd y;
        models::build_design(ds, data::Part::Train, horizon, X, y);
        models::LinearModel lin;
        if (kind == "lr") {
            lin = models::fit_lr(X, y, cfg.get_double("ridge"));
        } else {
            models::SvrConfig sc;
            sc.c = cfg.get_double("svr.c");
            sc.epsilon = cfg.get_double("svr.epsilon");
            sc.iters = cfg.get_int("svr.iters");
            sc.lr0 = cfg.get_double("svr.lr0");
            lin = models::fit_svr(X, y, sc);
        }
        double train_mse = (X * lin.w + Eigen::VectorXd::Constant(X.rows(), lin.b) - y).squaredNorm() /
                           static_cast<double>(X.rows());
        out.val_mse = models::evaluate_linear(lin, ds, data::Part::Validation, horizon).mse;
        out.backtest_mse = models::evaluate_linear(lin, ds, data::Part::Backtest, horizon).mse;
        out.metrics.push_back({0, train_mse, out.val_mse});

        ad::ParamMap params;
        params.add("w", ad::from_array({lin.w.size()}, ad::Array(lin.w.array())));
        params.add("b", ad::tensor({1}, std::vector<double>{lin.b}));
        out.checkpoint = Checkpoint::from(kind, params, nullptr, &stats);
        return out;
    }

    auto init = rng::stream(cfg.get_u64("seed"), "init:" + kind + ":h" + std::to_string(horizon));
    auto model = make_grad_model(kind, ds.stocks(), ds.indicators(), cfg, init);
    models::TrainOutcome res = models::train_grad_model(*model, ds, protocol(cfg, kind, horizon));
    out.metrics = res.metrics;
    out.val_mse = res.best_val_mse;
    out.backtest_mse = models::evaluate_grad_model(*model, ds, data::Part::Backtest, horizon).mse;
    out.checkpoint = Checkpoint::from(kind, model->params(), &res.optimizer, &stats);
    return out;
}

void run_indexed(int count, const std::function<void(int)>& fn) {
    int threads = std::min(worker_threads(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

const std::vector<std::string> kBenchmarkModels = {"lr", "svr", "ffnn", "lstm-rnn", "ma", "ma-rnn"};

} // namespace

int worker_threads() {
    const char* env = std::getenv("MKTCUBE_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

int cmd_synth(const Config& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    std::string data_dir = require_dir_key(cfg, "data_dir");
    auto series = data::synth_market(synth_config(cfg));
    data::write_data_dir(data_dir, series);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_report((fs::path(data_dir) / "synth_report.txt").string(), cfg,
                 {"command=synth", "stocks=" + std::to_string(series.size()),
                  "days=" + std::to_string(series.front().days())},
                 wall);
    std::cout << "synth: wrote " << series.size() << " stocks x " << series.front().days() << " days to "
              << data_dir << "\n";
    return 0;
}

int cmd_build_images(const Config& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    std::string data_dir = require_dir_key(cfg, "data_dir");
    std::string out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    if (!fs::exists(data_dir)) throw MissingInputError("missing input: " + data_dir);

    auto series = data::load_data_dir(data_dir);
    data::Dataset ds = data::build_dataset(series, dataset_config(cfg));

    std::vector<data::MarketImage> images;
    images.reserve(ds.images_raw.size());
    for (int d = 0; d < ds.days(); ++d) {
        data::MarketImage img;
        img.date = ds.dates[static_cast<std::size_t>(d)];
        img.stock_order = ds.stock_order;
        img.indicator_names = ds.indicator_names;
        img.values = ds.images_raw[static_cast<std::size_t>(d)];
        images.push_back(std::move(img));
    }
    data::save_cube((fs::path(out_dir) / "images.mkcb").string(), data::make_cube(images));
    data::save_labels_csv((fs::path(out_dir) / "labels.csv").string(), ds.labels);

    std::ofstream stats((fs::path(out_dir) / "normstats.csv").string());
    stats << "indicator,min,max,degenerate\n";
    for (std::size_t j = 0; j < ds.indicator_names.size(); ++j) {
        stats << ds.indicator_names[j] << "," << fmt(ds.stats.min[static_cast<Eigen::Index>(j)]) << ","
              << fmt(ds.stats.max[static_cast<Eigen::Index>(j)]) << "," << (ds.stats.degenerate[j] ? 1 : 0) << "\n";
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_report((fs::path(out_dir) / "build_images_report.txt").string(), cfg,
                 {"command=build-images", "images=" + std::to_string(ds.days()),
                  "degenerate_columns=" + std::to_string(ds.stats.degenerate_count())},
                 wall);
    std::cout << "build-images: " << ds.days() << " market images (" << ds.stocks() << "x" << ds.indicators()
              << "), " << ds.stats.degenerate_count() << " degenerate columns\n";
    return 0;
}

int cmd_train(const Config& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    std::string out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    std::string kind = cfg.get("model");
    data::Dataset ds = load_dataset(cfg);

    std::vector<std::string> report;
    std::string stem;
    if (kind == "segnet") {
        segnet::SegNetConfig sc = segnet_config(cfg);
        stem = "segnet_k" + std::to_string(sc.embedding_dim);
        auto init = rng::stream(cfg.get_u64("seed"), "init:segnet:k" + std::to_string(sc.embedding_dim));
        segnet::SegNetModel model(ds.indicators(), sc, init);
        auto train_images = part_image_tensors(ds, ds.split.train);
        auto val_images = part_image_tensors(ds, ds.split.validation);
        auto res = segnet::train_autoencoder(model, train_images, val_images, segnet_train_config(cfg, sc.embedding_dim));

        std::vector<models::EpochMetric> metrics;
        for (std::size_t e = 0; e < res.train_loss.size(); ++e) {
            metrics.push_back({static_cast<int>(e), res.train_loss[e], res.val_loss[e]});
        }
        write_metrics_csv((fs::path(out_dir) / (stem + "_metrics.csv")).string(), metrics);
        NormStatsBlob stats = stats_to_blob(ds.stats);
        Checkpoint ckpt = Checkpoint::from("segnet", model.params(), &res.optimizer, &stats);
        ad::save_checkpoint((fs::path(out_dir) / (stem + ".ckpt")).string(), ckpt);
        report.push_back("model=segnet");
        report.push_back("best_epoch=" + std::to_string(res.best_epoch));
        report.push_back("best_val_recon_mse=" + fmt(res.best_val_loss));
    } else {
        int horizon = cfg.get_int("horizon");
        stem = kind + "_h" + std::to_string(horizon);
        TrainedModel tm = train_one(cfg, ds, kind, horizon);
        write_metrics_csv((fs::path(out_dir) / (stem + "_metrics.csv")).string(), tm.metrics);
        ad::save_checkpoint((fs::path(out_dir) / (stem + ".ckpt")).string(), tm.checkpoint);
        report.push_back("model=" + kind);
        report.push_back("horizon=" + std::to_string(horizon));
        report.push_back("validation_mse=" + fmt(tm.val_mse));
        report.push_back("backtest_mse=" + fmt(tm.backtest_mse));
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_report((fs::path(out_dir) / (stem + "_report.txt")).string(), cfg, report, wall);
    std::cout << "train: wrote " << stem << ".ckpt and " << stem << "_metrics.csv in " << out_dir << "\n";
    return 0;
}

int cmd_evaluate(const Config& cfg) {
    std::string out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    std::string ckpt_path = cfg.get("checkpoint");
    if (ckpt_path.empty()) throw ConfigError("config key 'checkpoint' is required for evaluate");
    if (!fs::exists(ckpt_path)) throw MissingInputError("missing input: " + ckpt_path);
    Checkpoint ckpt = ad::load_checkpoint(ckpt_path);

    data::Dataset ds = load_dataset(cfg);
    if (ckpt.norm_stats) renormalize(ds, blob_to_stats(*ckpt.norm_stats));

    data::Part part = parse_part(cfg.get("eval.part"));
    const std::string& kind = ckpt.model_kind;

    if (kind == "segnet") {
        segnet::SegNetConfig sc = segnet_config(cfg);
        auto init = rng::stream(0, "eval");
        segnet::SegNetModel model(ds.indicators(), sc, init);
        ckpt.restore_into(model.params());
        auto images = part_image_tensors(ds, ds.part_days(part));
        double mse = segnet::reconstruction_mse(model, images);
        std::ofstream out((fs::path(out_dir) / "segnet_eval.csv").string());
        out << "part,recon_mse\n" << cfg.get("eval.part") << "," << fmt(mse) << "\n";
        std::cout << "evaluate: segnet " << cfg.get("eval.part") << " recon_mse=" << fmt(mse) << "\n";
        return 0;
    }

    int horizon = cfg.get_int("horizon");
    models::EvalResult res;
    if (kind == "lr" || kind == "svr") {
        models::LinearModel lin;
        ad::ParamMap params;
        params.add("w", ad::from_array({static_cast<ad::Index>(ckpt.param_data[0].size())}, ckpt.param_data[0]));
        params.add("b", ad::from_array({1}, ckpt.param_data[1]));
        lin.w = ckpt.param_data[0].matrix();
        lin.b = ckpt.param_data[1][0];
        res = models::evaluate_linear(lin, ds, part, horizon);
    } else {
        auto init = rng::stream(0, "eval");
        auto model = make_grad_model(kind, ds.stocks(), ds.indicators(), cfg, init);
        ckpt.restore_into(model->params());
        res = models::evaluate_grad_model(*model, ds, part, horizon);
    }
    std::string stem = kind + "_h" + std::to_string(horizon) + "_" + cfg.get("eval.part");
    models::save_predictions_csv((fs::path(out_dir) / (stem + "_predictions.csv")).string(), res.rows);
    std::ofstream out((fs::path(out_dir) / (stem + "_eval.csv")).string());
    out << "part,horizon,mse,count,invalid_excluded\n";
    out << cfg.get("eval.part") << "," << horizon << "," << fmt(res.mse) << "," << res.count << ","
        << res.invalid_excluded << "\n";
    std::cout << "evaluate: " << kind << " h" << horizon << " " << cfg.get("eval.part") << " mse=" << fmt(res.mse)
              << " over " << res.count << " pairs (" << res.invalid_excluded << " invalid excluded)\n";
    return 0;
}

int cmd_embed(const Config& cfg) {
    std::string out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    std::string ckpt_path = cfg.get("checkpoint");
    if (ckpt_path.empty()) throw ConfigError("config key 'checkpoint' is required for embed");
    if (!fs::exists(ckpt_path)) throw MissingInputError("missing input: " + ckpt_path);
    Checkpoint ckpt = ad::load_checkpoint(ckpt_path);
    if (ckpt.model_kind != "segnet") throw ConfigError("embed needs a segnet checkpoint, got " + ckpt.model_kind);

    data::Dataset ds = load_dataset(cfg);
    if (ckpt.norm_stats) renormalize(ds, blob_to_stats(*ckpt.norm_stats));

    segnet::SegNetConfig sc = segnet_config(cfg);
    auto init = rng::stream(0, "eval");
    segnet::SegNetModel model(ds.indicators(), sc, init);
    ckpt.restore_into(model.params());

    std::ofstream out((fs::path(out_dir) / "embeddings.csv").string());
    out << "date";
    for (int k = 0; k < sc.embedding_dim; ++k) out << ",dim_" << k;
    out << "\n";
    for (int d = 0; d < ds.days(); ++d) {
        const auto& img = ds.images_norm[static_cast<std::size_t>(d)];
        ad::Array buf = Eigen::Map<const ad::Array>(img.data(), img.size());
        auto enc = model.encode(ad::from_array({img.rows(), img.cols()}, buf));
        out << ds.dates[static_cast<std::size_t>(d)];
        for (int k = 0; k < sc.embedding_dim; ++k) out << "," << fmt(enc.embedding->data[k]);
        out << "\n";
    }
    std::cout << "embed: wrote embeddings.csv for " << ds.days() << " dates\n";
    return 0;
}

int cmd_compare_pca(const Config& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    std::string out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    data::Dataset ds = load_dataset(cfg);
    std::vector<int> dims = cfg.get_int_list("compare.dims");

    auto train_tensors = part_image_tensors(ds, ds.split.train);
    auto val_tensors = part_image_tensors(ds, ds.split.validation);
    auto test_tensors = part_image_tensors(ds, ds.split.backtest);
    std::vector<data::RowMat> train_mats, test_mats;
    for (int d : ds.split.train) train_mats.push_back(ds.images_norm[static_cast<std::size_t>(d)]);
    for (int d : ds.split.backtest) test_mats.push_back(ds.images_norm[static_cast<std::size_t>(d)]);

    std::vector<segnet::CompareRow> rows(dims.size());
    run_indexed(static_cast<int>(dims.size()), [&](int i) {
        int k = dims[static_cast<std::size_t>(i)];
        segnet::SegNetConfig sc = segnet_config(cfg);
        sc.embedding_dim = k;
        auto init = rng::stream(cfg.get_u64("seed"), "init:segnet:k" + std::to_string(k));
        segnet::SegNetModel model(ds.indicators(), sc, init);
        segnet::train_autoencoder(model, train_tensors, val_tensors, segnet_train_config(cfg, k));
        double seg_mse = segnet::reconstruction_mse(model, test_tensors);
        segnet::PCAModel pca = segnet::pca_fit(train_mats, k);
        double pca_mse = segnet::pca_reconstruction_mse(pca, test_mats);
        rows[static_cast<std::size_t>(i)] = {k, seg_mse, pca_mse};
    });

    std::ofstream out((fs::path(out_dir) / "compare_pca.csv").string());
    out << "embedding_dim,segnet_mse,pca_mse\n";
    for (const auto& r : rows) {
        out << r.embedding_dim << "," << fmt(r.segnet_mse) << "," << fmt(r.pca_mse) << "\n";
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_report((fs::path(out_dir) / "compare_pca_report.txt").string(), cfg, {"command=compare-pca"}, wall);
    std::cout << "compare-pca: wrote compare_pca.csv (" << rows.size() << " dims)\n";
    return 0;
}

int cmd_benchmark(const Config& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    std::string out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    data::Dataset ds = load_dataset(cfg);
    std::vector<int> horizons = ds.labels.horizons;

    const int n_models = static_cast<int>(kBenchmarkModels.size());
    const int n_h = static_cast<int>(horizons.size());
    std::vector<double> backtest(static_cast<std::size_t>(n_models * n_h));
    std::vector<double> validation(static_cast<std::size_t>(n_models * n_h));

    run_indexed(n_models * n_h, [&](int cell) {
        int mi = cell / n_h, hi = cell % n_h;
        TrainedModel tm = train_one(cfg, ds, kBenchmarkModels[static_cast<std::size_t>(mi)], horizons[static_cast<std::size_t>(hi)]);
        backtest[static_cast<std::size_t>(cell)] = tm.backtest_mse;
        validation[static_cast<std::size_t>(cell)] = tm.val_mse;
    });

    auto write_table = [&](const std::string& name, const std::vector<double>& cells) {
        std::ofstream out((fs::path(out_dir) / name).string());
        out << "model";
        for (int h : horizons) out << ",h" << h;
        out << "\n";
        for (int mi = 0; mi < n_models; ++mi) {
            out << kBenchmarkModels[static_cast<std::size_t>(mi)];
            for (int hi = 0; hi < n_h; ++hi) out << "," << fmt(cells[static_cast<std::size_t>(mi * n_h + hi)]);
            out << "\n";
        }
    };
    write_table("benchmark.csv", backtest);
    write_table("benchmark_validation.csv", validation);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_report((fs::path(out_dir) / "benchmark_report.txt").string(), cfg, {"command=benchmark"}, wall);
    std::cout << "benchmark: wrote benchmark.csv (" << n_models << " models x " << n_h << " horizons)\n";
    return 0;
}

int run_cli(int argc, char** argv) {
    auto usage = []() {
        std::cerr << "usage: mktcube <synth|build-images|train|evaluate|embed|compare-pca|benchmark>"
                     " --config <path> [--set key=value ...]\n";
        return 1;
    };
    if (argc < 2) return usage();
    std::string command = argv[1];

    try {
        Config cfg;
        bool have_config = false;
        for (int i = 2; i < argc; ++i) {
            std::string arg = argv[i];
            if (arg == "--config") {
                if (i + 1 >= argc) throw ConfigError("--config needs a path");
                cfg = Config::from_file(argv[++i]);
                have_config = true;
            } else if (arg == "--set") {
                if (i + 1 >= argc) throw ConfigError("--set needs key=value");
                cfg.parse_line(argv[++i], "--set");
            } else {
                throw ConfigError("unknown argument '" + arg + "'");
            }
        }
        (void)have_config;

        if (command == "synth") return cmd_synth(cfg);
        if (command == "build-images") return cmd_build_images(cfg);
        if (command == "train") return cmd_train(cfg);
        if (command == "evaluate") return cmd_evaluate(cfg);
        if (command == "embed") return cmd_embed(cfg);
        if (command == "compare-pca") return cmd_compare_pca(cfg);
        if (command == "benchmark") return cmd_benchmark(cfg);
        std::cerr << "unknown command '" << command << "'\n";
        return usage();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const MissingInputError& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace mktcube::harness
