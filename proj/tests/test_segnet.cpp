#include "mktcube/pca.hpp"
#include "mktcube/rng.hpp"
#include "mktcube/segnet.hpp"

#include "gradcheck.hpp"

#include <doctest.h>

using namespace mktcube;
using namespace mktcube::ad;
using namespace mktcube::segnet;

namespace {

SegNetConfig tiny_config(int k = 3) {
    SegNetConfig cfg;
    cfg.channels = {2, 3, 4};
    cfg.kernel_extent = 3;
    cfg.pool_window = 2;
    cfg.grid_rows = 4;
    cfg.embedding_dim = k;
    return cfg;
}

std::vector<TensorPtr> random_images(int count, int m, int n, std::uint64_t seed) {
    auto g = rng::stream(seed, "segnet-test");
    std::vector<TensorPtr> out;
    for (int i = 0; i < count; ++i) out.push_back(uniform({m, n}, 0.0, 1.0, g));
    return out;
}

} // namespace

TEST_CASE("segnet: encode/decode shape round trip across stock counts") {
    std::mt19937_64 g(71);
    SegNetModel model(5, tiny_config(), g);
    for (int m : {8, 9, 12, 17, 33}) {
        auto img = uniform({m, 5}, 0.0, 1.0, g);
        auto enc = model.encode(img);
        CHECK(enc.embedding->size() == 3);
        auto rec = model.decode(enc);
        CHECK(rec->shape == img->shape);
        CHECK(rec->data.allFinite());
    }
}

TEST_CASE("segnet: too few rows rejected") {
    std::mt19937_64 g(72);
    SegNetModel model(4, tiny_config(), g);  // 3 stages, window 2 -> needs >= 8 rows
    CHECK_THROWS_AS(model.encode(zeros({7, 4})), std::invalid_argument);
}

TEST_CASE("segnet: embedding length equals every configured dim") {
    std::mt19937_64 g(73);
    for (int k : {16, 32, 64, 128}) {
        SegNetConfig cfg = tiny_config(k);
        SegNetModel model(4, cfg, g);
        auto img = uniform({10, 4}, 0.0, 1.0, g);
        CHECK(model.encode(img).embedding->size() == k);
    }
}

TEST_CASE("segnet: deterministic embedding, continuity under tiny noise") {
    std::mt19937_64 g(74);
    SegNetModel model(4, tiny_config(8), g);
    auto img = uniform({12, 4}, 0.0, 1.0, g);
    auto e1 = model.encode(img).embedding->data;
    auto e2 = model.encode(img).embedding->data;
    CHECK((e1 - e2).abs().maxCoeff() == 0.0);

    auto noisy = from_array(img->shape, img->data);
    auto gn = rng::stream(75, "noise");
    for (Index i = 0; i < noisy->size(); ++i) noisy->data[i] += rng::normal(gn, 0.0, 1e-6);
    auto e3 = model.encode(noisy).embedding->data;
    CHECK((e1 - e3).matrix().norm() < 1e-3);
}

TEST_CASE("segnet: decode validates records and embedding size") {
    std::mt19937_64 g(76);
    SegNetModel model(4, tiny_config(5), g);
    auto img = uniform({10, 4}, 0.0, 1.0, g);
    auto enc = model.encode(img);
    auto fewer = enc.pool_records;
    fewer.pop_back();
    CHECK_THROWS_AS(model.decode(enc.embedding, fewer, enc.pre_pool_rows, enc.input_rows), std::invalid_argument);
    CHECK_THROWS_AS(model.decode(zeros({4}), enc.pool_records, enc.pre_pool_rows, enc.input_rows),
                    std::invalid_argument);
}

TEST_CASE("segnet: full autoencoder gradient check at small scale") {
    std::mt19937_64 g(77);
    SegNetConfig cfg;
    cfg.channels = {2, 2};
    cfg.kernel_extent = 3;
    cfg.pool_window = 2;
    cfg.grid_rows = 2;
    cfg.embedding_dim = 2;
    SegNetModel model(3, cfg, g);
    CHECK(model.params().total_count() <= 500);
    auto img = uniform({5, 3}, 0.0, 1.0, g);
    auto rep = testing::gradcheck(
        [&]() {
            auto enc = model.encode(img);
            auto rec = model.decode(enc);
            auto diff = sub(rec, img);
            return mean(mul(diff, diff));
        },
        model.params().tensors());
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("segnet: overfits a single image") {
    std::mt19937_64 g(78);
    SegNetConfig cfg;
    cfg.channels = {8, 12};
    cfg.kernel_extent = 3;
    cfg.pool_window = 2;
    cfg.grid_rows = 3;
    cfg.embedding_dim = 8;
    SegNetModel model(4, cfg, g);
    auto images = random_images(1, 10, 4, 79);
    AutoencoderTrainConfig tc;
    tc.batch = 1;
    tc.epochs = 5000;
    tc.patience = 5000;
    tc.lr = 0.003;
    auto out = train_autoencoder(model, images, {}, tc);
    CHECK(out.train_loss.back() < 1e-4);

    // decode error after overfitting
    auto enc = model.encode(images[0]);
    auto rec = model.decode(enc);
    CHECK((rec->data - images[0]->data).square().mean() < 1e-4);
}

TEST_CASE("segnet: training loss trends down and is seed-deterministic") {
    SegNetConfig cfg = tiny_config(4);
    auto images = random_images(12, 9, 4, 80);
    AutoencoderTrainConfig tc;
    tc.epochs = 60;
    tc.patience = 60;
    auto run = [&]() {
        std::mt19937_64 g(81);
        SegNetModel model(4, cfg, g);
        return train_autoencoder(model, images, {}, tc);
    };
    auto a = run();
    auto b = run();
    CHECK(a.train_loss == b.train_loss);
    // non-increasing over a coarse window
    double early = 0.0, late = 0.0;
    for (int e = 0; e < 10; ++e) early += a.train_loss[static_cast<std::size_t>(e)];
    for (int e = 0; e < 10; ++e) late += a.train_loss[a.train_loss.size() - 1 - static_cast<std::size_t>(e)];
    CHECK(late < early);
}

TEST_CASE("segnet: zeroed pool indices degrade a trained model") {
    std::mt19937_64 g(82);
    SegNetConfig cfg = tiny_config(6);
    SegNetModel model(4, cfg, g);
    auto train = random_images(16, 12, 4, 83);
    auto held_out = random_images(6, 12, 4, 84);
    AutoencoderTrainConfig tc;
    tc.epochs = 150;
    tc.patience = 150;
    train_autoencoder(model, train, {}, tc);

    double honest = 0.0, ablated = 0.0;
    for (const auto& img : held_out) {
        auto enc = model.encode(img);
        honest += (model.decode(enc)->data - img->data).square().mean();
        auto zeroed = enc.pool_records;
        for (auto& rec : zeroed) {
            for (auto& idx : rec.argmax) idx = (idx / rec.window) * rec.window;  // first slot of each window
        }
        ablated += (model.decode(enc.embedding, zeroed, enc.pre_pool_rows, enc.input_rows)->data - img->data)
                       .square()
                       .mean();
    }
    CHECK(ablated > honest);
}

TEST_CASE("segnet: deleting one stock row moves the embedding by < 10%") {
    // Sector-structured images: rows within a block share a pattern, so one
    // row's removal should not dominate the embedding of a trained model.
    auto g = rng::stream(89, "robust");
    const int m = 16, n = 5;
    auto make_image = [&]() {
        data::RowMat img(m, n);
        for (int block = 0; block < 4; ++block) {
            Eigen::RowVectorXd base(n);
            for (int c = 0; c < n; ++c) base(c) = rng::uniform(g, 0.0, 1.0);
            for (int r = block * 4; r < (block + 1) * 4; ++r) {
                img.row(r) = base;
                for (int c = 0; c < n; ++c) img(r, c) += rng::normal(g, 0.0, 0.02);
            }
        }
        return img;
    };
    std::vector<TensorPtr> train, test;
    std::vector<data::RowMat> test_mats;
    for (int i = 0; i < 40; ++i) {
        data::RowMat img = make_image();
        auto ten = from_array({m, n}, Eigen::Map<const Array>(img.data(), img.size()));
        if (i < 30) {
            train.push_back(ten);
        } else {
            test.push_back(ten);
            test_mats.push_back(img);
        }
    }
    std::mt19937_64 gi(90);
    SegNetConfig cfg;
    cfg.channels = {4, 6};
    cfg.grid_rows = 4;
    cfg.embedding_dim = 6;
    SegNetModel model(n, cfg, gi);
    AutoencoderTrainConfig tc;
    tc.epochs = 120;
    tc.patience = 120;
    train_autoencoder(model, train, {}, tc);

    double ratio_sum = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        auto base = model.encode(test[i]).embedding->data;
        int drop = static_cast<int>(g() % m);
        data::RowMat reduced(m - 1, n);
        int w = 0;
        for (int r = 0; r < m; ++r) {
            if (r == drop) continue;
            reduced.row(w++) = test_mats[i].row(r);
        }
        auto ten = from_array({m - 1, n}, Eigen::Map<const Array>(reduced.data(), reduced.size()));
        auto moved = model.encode(ten).embedding->data;
        ratio_sum += (moved - base).matrix().norm() / base.matrix().norm();
    }
    CHECK(ratio_sum / static_cast<double>(test.size()) < 0.10);
}

TEST_CASE("pca: exact low-rank data reconstructs exactly") {
    auto g = rng::stream(85, "pca");
    // data on a 2-plane in R^12
    Eigen::VectorXd u(12), v(12);
    for (int i = 0; i < 12; ++i) {
        u(i) = rng::uniform(g, -1.0, 1.0);
        v(i) = rng::uniform(g, -1.0, 1.0);
    }
    std::vector<data::RowMat> images;
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x = rng::uniform(g, -2.0, 2.0) * u + rng::uniform(g, -2.0, 2.0) * v;
        data::RowMat img(3, 4);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) img(r, c) = x(r * 4 + c);
        }
        images.push_back(img);
    }
    PCAModel model = pca_fit(images, 2);
    CHECK(pca_reconstruction_mse(model, images) < 1e-10);

    // orthonormal axes
    Eigen::MatrixXd gram = model.axes.transpose() * model.axes;
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca: full rank reconstructs to machine precision") {
    auto g = rng::stream(86, "pca2");
    std::vector<data::RowMat> images;
    for (int i = 0; i < 6; ++i) {
        data::RowMat img(2, 3);
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 3; ++c) img(r, c) = rng::uniform(g, -1.0, 1.0);
        }
        images.push_back(img);
    }
    PCAModel model = pca_fit(images, 6);
    CHECK(pca_reconstruction_mse(model, images) < 1e-8);
}

TEST_CASE("pca: k beyond the training count rejected") {
    std::vector<data::RowMat> images(4, data::RowMat::Zero(3, 3));
    CHECK_THROWS_AS(pca_fit(images, 5), std::invalid_argument);
}

TEST_CASE("pca: training error equals the eigenvalue-sum identity") {
    auto g = rng::stream(87, "pca3");
    std::vector<data::RowMat> images;
    const int N = 30, rows = 4, cols = 5;
    for (int i = 0; i < N; ++i) {
        data::RowMat img(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) img(r, c) = rng::uniform(g, -1.0, 1.0);
        }
        images.push_back(img);
    }
    const int k = 4;
    PCAModel model = pca_fit(images, k);

    // total variance minus the retained eigenvalue mass, per pixel
    Eigen::MatrixXd X(N, rows * cols);
    for (int i = 0; i < N; ++i) X.row(i) = flatten_image(images[static_cast<std::size_t>(i)]).transpose();
    X.rowwise() -= model.mean.transpose();
    double total = X.squaredNorm() / N;
    double retained = model.singular_values.squaredNorm() / N;
    double expect = (total - retained) / (rows * cols);
    CHECK(pca_reconstruction_mse(model, images) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("pca: reconstruction error non-increasing in k") {
    auto g = rng::stream(88, "pca4");
    std::vector<data::RowMat> train, test;
    for (int i = 0; i < 25; ++i) {
        data::RowMat img(4, 4);
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) img(r, c) = rng::uniform(g, -1.0, 1.0);
        }
        (i < 18 ? train : test).push_back(img);
    }
    double prev_train = 1e18, prev_test = 1e18;
    for (int k = 1; k <= 12; ++k) {
        PCAModel model = pca_fit(train, k);
        double e_train = pca_reconstruction_mse(model, train);
        double e_test = pca_reconstruction_mse(model, test);
        CHECK(e_train <= prev_train + 1e-12);
        CHECK(e_test <= prev_test + 1e-12);
        prev_train = e_train;
        prev_test = e_test;
    }
}
