#include "mktcube/layers.hpp"

#include "gradcheck.hpp"

#include <doctest.h>

#include <random>

using namespace mktcube;
using namespace mktcube::ad;

namespace {

TensorPtr random_param(Shape shape, std::mt19937_64& g) { return uniform(std::move(shape), -1.0, 1.0, g, true); }

// Straight-from-definition evaluation of the per-day convolution: a triple
// loop over (day, indicator, stock), independent of the GEMM path.
Array conv_day_bruteforce(const Tensor& cube, const Tensor& kernels, const Tensor& bias) {
    Index t = cube.shape[0], m = cube.shape[1], n = cube.shape[2];
    Index J = kernels.shape[0];
    Array out(t * J);
    for (Index ti = 0; ti < t; ++ti) {
        for (Index j = 0; j < J; ++j) {
            double acc = bias.data[j];
            for (Index ni = 0; ni < n; ++ni) {
                for (Index mi = 0; mi < m; ++mi) {
                    acc += kernels.data[(j * n + ni) * m + mi] * cube.data[(ti * m + mi) * n + ni];
                }
            }
            out[ti * J + j] = acc > 0.0 ? acc : 0.0;
        }
    }
    return out;
}

} // namespace

TEST_CASE("conv_day: zero cube, ReLU gates the negative bias") {
    auto cube = zeros({3, 4, 2});
    auto kernels = zeros({2, 2, 4});
    auto bias = tensor({2}, {0.5, -0.5});
    auto out = conv_day(cube, kernels, bias);
    REQUIRE(out->shape == Shape{3, 2});
    for (Index ti = 0; ti < 3; ++ti) {
        CHECK(out->data[ti * 2 + 0] == 0.5);
        CHECK(out->data[ti * 2 + 1] == 0.0);
    }
}

TEST_CASE("conv_day: all-ones kernel sums each day slice") {
    // day 1 sums to 3.0, day 2 sums to -1.0 -> c = [3, 0]
    auto cube = tensor({2, 1, 2}, {1.0, 2.0, -3.0, 2.0});
    auto kernels = full({1, 2, 1}, 1.0);
    auto bias = zeros({1});
    auto out = conv_day(cube, kernels, bias);
    CHECK(out->data[0] == doctest::Approx(3.0));
    CHECK(out->data[1] == doctest::Approx(0.0));
}

TEST_CASE("conv_day: equality with the triple-loop oracle") {
    std::mt19937_64 g(11);
    auto cube = uniform({4, 3, 2}, -1.0, 1.0, g);
    auto kernels = uniform({5, 2, 3}, -1.0, 1.0, g);
    auto bias = uniform({5}, -0.5, 0.5, g);
    auto out = conv_day(cube, kernels, bias);
    Array expect = conv_day_bruteforce(*cube, *kernels, *bias);
    CHECK((out->data - expect).abs().maxCoeff() < 1e-12);
}

TEST_CASE("conv_day: shape mismatch rejected") {
    auto cube = zeros({2, 3, 4});
    CHECK_THROWS_AS(conv_day(cube, zeros({2, 3, 3}), zeros({2})), std::invalid_argument);
    CHECK_THROWS_AS(conv_day(cube, zeros({2, 4, 3}), zeros({3})), std::invalid_argument);
}

TEST_CASE("conv_day: gradient check") {
    std::mt19937_64 g(12);
    auto cube = random_param({3, 2, 4}, g);
    auto kernels = random_param({3, 4, 2}, g);
    auto bias = random_param({3}, g);
    auto probe = uniform({3, 3}, -1.0, 1.0, g);
    auto rep = testing::gradcheck(
        [&]() { return sum(mul(conv_day(cube, kernels, bias), probe)); }, {cube, kernels, bias});
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("additive_attention: identical feature maps give uniform weights") {
    std::mt19937_64 g(13);
    AttentionParams params{random_param({4, 5}, g), random_param({4, 6}, g), random_param({4}, g)};
    auto emb = uniform({5}, -1.0, 1.0, g);
    auto c = uniform({6}, -1.0, 1.0, g);
    std::vector<TensorPtr> features = {c, c, c, c};
    auto res = additive_attention(emb, features, params);
    for (Index j = 0; j < 4; ++j) CHECK(res.weights->data[j] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK((res.pooled->data - c->data).abs().maxCoeff() < 1e-12);
}

TEST_CASE("additive_attention: brute-force recomputation and envelope") {
    std::mt19937_64 g(14);
    const int J = 6, t = 10, a = 4, v = 7;
    AttentionParams params{random_param({a, v}, g), random_param({a, t}, g), random_param({a}, g)};
    auto emb = uniform({v}, -1.0, 1.0, g);
    std::vector<TensorPtr> features;
    for (int j = 0; j < J; ++j) features.push_back(uniform({t}, -1.0, 1.0, g));

    auto res = additive_attention(emb, features, params);

    // Independent recomputation of z_j = tanh(w_sz s + w_cz c_j), softmax(v.z), pooled.
    Eigen::VectorXd energies(J);
    using CM = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    CM wsz(params.w_sz->data.data(), a, v);
    CM wcz(params.w_cz->data.data(), a, t);
    for (int j = 0; j < J; ++j) {
        Eigen::VectorXd z = (wsz * emb->data.matrix() + wcz * features[j]->data.matrix()).array().tanh();
        energies(j) = params.v->data.matrix().dot(z);
    }
    Eigen::VectorXd w = (energies.array() - energies.maxCoeff()).exp();
    w /= w.sum();
    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(t);
    for (int j = 0; j < J; ++j) pooled += w(j) * features[j]->data.matrix();

    CHECK(std::abs(res.weights->data.sum() - 1.0) < 1e-12);
    for (int j = 0; j < J; ++j) CHECK(res.weights->data[j] == doctest::Approx(w(j)).epsilon(1e-10));
    for (int i = 0; i < t; ++i) CHECK(res.pooled->data[i] == doctest::Approx(pooled(i)).epsilon(1e-10));

    // Pooled lies inside the coordinate-wise envelope of the feature maps.
    for (int i = 0; i < t; ++i) {
        double lo = features[0]->data[i], hi = features[0]->data[i];
        for (int j = 1; j < J; ++j) {
            lo = std::min(lo, features[j]->data[i]);
            hi = std::max(hi, features[j]->data[i]);
        }
        CHECK(res.pooled->data[i] >= lo - 1e-12);
        CHECK(res.pooled->data[i] <= hi + 1e-12);
    }
}

TEST_CASE("fused_attention: matches the composite path, forward and gradients") {
    std::mt19937_64 g(91);
    const int J = 5, t = 7, a = 4, v = 6;
    AttentionParams params{random_param({a, v}, g), random_param({a, t}, g), random_param({a}, g)};
    auto emb = random_param({v}, g);
    auto fmap = random_param({t, J}, g);
    auto probe = uniform({t}, -1.0, 1.0, g);

    auto fused = fused_attention(emb, fmap, params);
    auto composite = additive_attention(emb, columns_of(fmap), params);
    CHECK((fused.weights->data - composite.weights->data).abs().maxCoeff() < 1e-13);
    CHECK((fused.pooled->data - composite.pooled->data).abs().maxCoeff() < 1e-13);

    std::vector<TensorPtr> all = {params.w_sz, params.w_cz, params.v, emb, fmap};
    auto rep = testing::gradcheck(
        [&]() { return dot(fused_attention(emb, fmap, params).pooled, probe); }, all);
    CHECK(rep.max_rel_err < 1e-5);

    // both paths push identical gradients
    zero_grads(all);
    backward(dot(fused_attention(emb, fmap, params).pooled, probe));
    std::vector<Array> fused_grads;
    for (auto& p : all) fused_grads.push_back(p->grad);
    zero_grads(all);
    backward(dot(additive_attention(emb, columns_of(fmap), params).pooled, probe));
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK((all[i]->grad - fused_grads[i]).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("additive_attention: gradient check") {
    std::mt19937_64 g(15);
    const int J = 3, t = 4, a = 3, v = 4;
    AttentionParams params{random_param({a, v}, g), random_param({a, t}, g), random_param({a}, g)};
    auto emb = random_param({v}, g);
    std::vector<TensorPtr> features;
    for (int j = 0; j < J; ++j) features.push_back(random_param({t}, g));
    auto probe = uniform({t}, -1.0, 1.0, g);

    std::vector<TensorPtr> all = {params.w_sz, params.w_cz, params.v, emb};
    for (auto& f : features) all.push_back(f);
    auto rep = testing::gradcheck(
        [&]() { return dot(additive_attention(emb, features, params).pooled, probe); }, all);
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("lstm_step: W = 0 halves the carry") {
    const int cell = 3;
    auto W = zeros({4 * cell, cell + 2});
    auto x = tensor({2}, {0.7, -0.3});
    auto h0 = zeros({cell});
    auto c0 = tensor({cell}, {1.0, -2.0, 0.5});
    auto s = lstm_step(x, h0, c0, W);
    for (int i = 0; i < cell; ++i) {
        CHECK(s.c->data[i] == doctest::Approx(0.5 * c0->data[i]).epsilon(1e-12));
        CHECK(s.h->data[i] == doctest::Approx(0.5 * std::tanh(0.5 * c0->data[i])).epsilon(1e-12));
    }
}

TEST_CASE("lstm_step: zero carry and zero weights stay zero") {
    auto s = lstm_step(zeros({2}), zeros({3}), zeros({3}), zeros({12, 5}));
    CHECK(s.c->data.abs().maxCoeff() == 0.0);
    CHECK(s.h->data.abs().maxCoeff() == 0.0);
}

TEST_CASE("lstm_step: matches scalar-by-scalar gate evaluation") {
    std::mt19937_64 g(16);
    const int cell = 3, nin = 4;
    auto W = uniform({4 * cell, cell + nin}, -1.0, 1.0, g);
    auto x = uniform({nin}, -1.0, 1.0, g);
    auto h0 = uniform({cell}, -1.0, 1.0, g);
    auto c0 = uniform({cell}, -1.0, 1.0, g);
    auto s = lstm_step(x, h0, c0, W);

    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int r = 0; r < cell; ++r) {
        auto pre = [&](int block) {
            double acc = 0.0;
            for (int k = 0; k < cell; ++k) acc += W->data[(block * cell + r) * (cell + nin) + k] * h0->data[k];
            for (int k = 0; k < nin; ++k) acc += W->data[(block * cell + r) * (cell + nin) + cell + k] * x->data[k];
            return acc;
        };
        double i = sig(pre(0)), f = sig(pre(1)), o = sig(pre(2)), j = std::tanh(pre(3));
        double c_t = f * c0->data[r] + i * j;
        double h_t = o * std::tanh(c_t);
        CHECK(std::abs(s.c->data[r] - c_t) < 1e-12);
        CHECK(std::abs(s.h->data[r] - h_t) < 1e-12);
    }
}

TEST_CASE("lstm_step: gradient check through two steps") {
    std::mt19937_64 g(17);
    const int cell = 2, nin = 3;
    auto W = random_param({4 * cell, cell + nin}, g);
    auto x1 = random_param({nin}, g);
    auto x2 = random_param({nin}, g);
    auto probe = uniform({cell}, -1.0, 1.0, g);
    auto rep = testing::gradcheck(
        [&]() {
            auto s1 = lstm_step(x1, zeros({cell}), zeros({cell}), W);
            auto s2 = lstm_step(x2, s1.h, s1.c, W);
            return dot(s2.h, probe);
        },
        {W, x1, x2});
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("maxpool: direct maxima with indices") {
    auto x = tensor({4}, {1.0, 5.0, 2.0, 4.0});
    auto rec = maxpool_with_indices(x, 2, 0);
    REQUIRE(rec.output->shape == Shape{2});
    CHECK(rec.output->data[0] == 5.0);
    CHECK(rec.output->data[1] == 4.0);
    CHECK(rec.argmax[0] == 1);
    CHECK(rec.argmax[1] == 3);
}

TEST_CASE("maxpool: ties resolve to the lowest index") {
    auto x = full({6}, 3.25);
    auto rec = maxpool_with_indices(x, 3, 0);
    CHECK(rec.argmax[0] == 0);
    CHECK(rec.argmax[1] == 3);
    CHECK(rec.output->data[0] == 3.25);
}

TEST_CASE("maxpool: window must be positive") {
    auto x = zeros({4});
    CHECK_THROWS_AS(maxpool_with_indices(x, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(maxpool_with_indices(x, -2, 0), std::invalid_argument);
}

TEST_CASE("maxpool/unpool: gather oracle, fixed point, nonzero count") {
    std::mt19937_64 g(18);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = uniform({64}, -2.0, 2.0, g);
        auto rec = maxpool_with_indices(x, 4, 0);
        // gather(input, indices) == output exactly
        for (Index i = 0; i < rec.output->size(); ++i) {
            CHECK(x->data[rec.argmax[static_cast<std::size_t>(i)]] == rec.output->data[i]);
        }
        auto up = unpool(rec, 64);
        // at most one nonzero per window
        Index nonzeros = 0;
        for (Index w = 0; w < 16; ++w) {
            int in_window = 0;
            for (Index k = 0; k < 4; ++k) {
                if (up->data[w * 4 + k] != 0.0) ++in_window;
            }
            CHECK(in_window <= 1);
            nonzeros += in_window;
        }
        CHECK(nonzeros <= rec.output->size());
    }
    // Round-trip fixed point: unpool zero-fills the losers, so the property
    // holds on non-negative maps (what the decoder sees, post ReLU).
    for (int trial = 0; trial < 20; ++trial) {
        auto x = uniform({64}, 0.0, 2.0, g);
        auto rec = maxpool_with_indices(x, 4, 0);
        auto up = unpool(rec, 64);
        auto rec2 = maxpool_with_indices(up, 4, 0);
        CHECK((rec2.output->data - rec.output->data).abs().maxCoeff() == 0.0);
        CHECK(rec2.argmax == rec.argmax);
    }
}

TEST_CASE("unpool: inverse of the pooling example") {
    auto x = tensor({4}, {1.0, 5.0, 2.0, 4.0});
    auto rec = maxpool_with_indices(x, 2, 0);
    auto up = unpool(rec, 4);
    CHECK(up->data[0] == 0.0);
    CHECK(up->data[1] == 5.0);
    CHECK(up->data[2] == 0.0);
    CHECK(up->data[3] == 4.0);
}

TEST_CASE("unpool: out-of-range index rejected") {
    auto x = tensor({4}, {1.0, 5.0, 2.0, 4.0});
    auto rec = maxpool_with_indices(x, 2, 0);
    CHECK_THROWS_AS(unpool(rec, 3), std::invalid_argument);
}

TEST_CASE("maxpool: partial trailing window and 2-D axis pooling") {
    // length 5, window 2: last window has one element
    auto x = tensor({5}, {1.0, 2.0, 0.5, 3.0, -1.0});
    auto rec = maxpool_with_indices(x, 2, 0);
    REQUIRE(rec.output->shape == Shape{3});
    CHECK(rec.output->data[2] == -1.0);
    CHECK(rec.argmax[2] == 4);

    // rows of a (4, 2) map pooled independently per column
    auto m = tensor({4, 2}, {1, 10, 2, 9, 3, 8, 4, 7});
    auto rec2 = maxpool_with_indices(m, 2, 0);
    REQUIRE(rec2.output->shape == Shape{2, 2});
    CHECK(rec2.output->data[0] == 2.0);   // col 0, rows 0-1
    CHECK(rec2.output->data[1] == 10.0);  // col 1, rows 0-1
    CHECK(rec2.argmax[0] == 1);
    CHECK(rec2.argmax[1] == 0);
}

TEST_CASE("pool/unpool/unpool_like: gradient check") {
    std::mt19937_64 g(19);
    auto x = random_param({4, 3}, g);
    auto y = random_param({2, 3}, g);
    auto probe = uniform({4, 3}, -1.0, 1.0, g);
    auto rep = testing::gradcheck(
        [&]() {
            auto rec = maxpool_with_indices(x, 2, 0);
            auto dec = unpool_like(add(rec.output, y), rec, 4);
            return sum(mul(dec, probe));
        },
        {x, y});
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("conv1d_rows: same padding, known small case") {
    // rows=3, in_ch=1, one kernel [1, 2, 3] -> y[r] = 1*x[r-1] + 2*x[r] + 3*x[r+1]
    auto x = tensor({3, 1}, {1.0, 10.0, 100.0});
    auto k = tensor({1, 3, 1}, {1.0, 2.0, 3.0});
    auto b = zeros({1});
    auto y = conv1d_rows(x, k, b);
    CHECK(y->data[0] == doctest::Approx(2.0 + 30.0));
    CHECK(y->data[1] == doctest::Approx(1.0 + 20.0 + 300.0));
    CHECK(y->data[2] == doctest::Approx(10.0 + 200.0));
}

TEST_CASE("conv1d_rows + adaptive ops: gradient check") {
    std::mt19937_64 g(20);
    auto x = random_param({6, 3}, g);
    auto k = random_param({4, 3, 3}, g);
    auto b = random_param({4}, g);
    auto probe = uniform({5, 4}, -1.0, 1.0, g);
    auto rep = testing::gradcheck(
        [&]() {
            auto y = relu(conv1d_rows(x, k, b));
            auto pooled = adaptive_avg_rows(y, 3);
            auto expanded = adaptive_expand_rows(pooled, 5);
            return sum(mul(expanded, probe));
        },
        {x, k, b});
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("adaptive_avg_rows covers all rows") {
    auto x = tensor({5, 1}, {1.0, 2.0, 3.0, 4.0, 5.0});
    auto y = adaptive_avg_rows(x, 2);
    // bins [0,3) and [2,5) with the torch-style bounds
    CHECK(y->shape == Shape{2, 1});
    CHECK(y->data[0] == doctest::Approx((1.0 + 2.0 + 3.0) / 3.0));
    CHECK(y->data[1] == doctest::Approx((3.0 + 4.0 + 5.0) / 3.0));
}

TEST_CASE("columns_of splits feature maps") {
    auto m = tensor({2, 3}, {1, 2, 3, 4, 5, 6});
    auto cols = columns_of(m);
    REQUIRE(cols.size() == 3);
    CHECK(cols[1]->data[0] == 2.0);
    CHECK(cols[1]->data[1] == 5.0);
}
