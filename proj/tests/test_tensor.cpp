#include <doctest.h>

#include <cmath>
#include <functional>

#include "wdkg/rng.hpp"
#include "wdkg/tape.hpp"

using namespace wdkg;
using ad::Shape;
using ad::Tensor;
using ad::Var;

namespace {

// Values bounded away from zero so rectifier kinks never sit inside the
// finite-difference window.
Tensor random_tensor(Rng& rng, Shape shape, double min_abs = 0.2) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double mag = rng.uniform(min_abs, 2.0);
        t[i] = rng.bernoulli(0.5) ? mag : -mag;
    }
    return t;
}

// Collapse any output to a scalar through a fixed random weighting, so the
// adjoint is exercised with a non-uniform upstream gradient.
Var scalarize(ad::Tape& t, Var out, Rng& rng) {
    Tensor w(t.value(out).shape());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
    return t.sum_all(t.mul(out, t.constant(w)));
}

} // namespace

TEST_CASE("matmul identity returns its operand") {
    ad::Tape t;
    Tensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    Tensor x({3, 2}, {1, 2, 3, 4, 5, 6});
    const Var out = t.matmul(t.constant(eye), t.constant(x));
    CHECK(t.value(out) == x);
}

TEST_CASE("softmax of equal logits is uniform and single entries are exactly one") {
    ad::Tape t;
    const Var s = t.softmax(t.constant(Tensor({2}, {0.0, 0.0})), 0);
    CHECK(t.value(s)[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.value(s)[1] == doctest::Approx(0.5).epsilon(1e-15));

    const Var one = t.softmax(t.constant(Tensor({1}, {3.7})), 0);
    CHECK(t.value(one)[0] == 1.0); // exact
}

TEST_CASE("unit kernel cross-correlation is the activation of the input") {
    ad::Tape t;
    Rng rng(3);
    Tensor h = random_tensor(rng, {4, 5, 1});
    Tensor unit({1, 1, 1, 1}, {1.0});
    const Var out = t.relu(t.conv2d(t.constant(h), t.constant(unit)));
    const Tensor& v = t.value(out);
    CHECK(v.shape() == Shape{4, 5, 1});
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == (h[i] > 0.0 ? h[i] : 0.0));
}

TEST_CASE("backward of a plain sum is all ones") {
    ad::Tape t;
    Rng rng(4);
    const Var p = t.param(random_tensor(rng, {2, 3}));
    t.backward(t.sum_all(p));
    const Tensor& g = t.grad(p);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 1.0);
}

TEST_CASE("backward of (p-3)^2 at p=5 gives 4") {
    ad::Tape t;
    const Var p = t.param(Tensor::scalar(5.0));
    const Var d = t.sub(p, t.constant(Tensor::scalar(3.0)));
    t.backward(t.mul(d, d));
    CHECK(t.grad(p)[0] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("backward requires a scalar loss") {
    ad::Tape t;
    const Var p = t.param(Tensor({2}, {1.0, 2.0}));
    CHECK_THROWS_AS(t.backward(p), NotScalar);
}

TEST_CASE("shape mismatches name the operator and shapes") {
    ad::Tape t;
    const Var a = t.constant(Tensor({2, 3}));
    const Var b = t.constant(Tensor({2, 3}));
    CHECK_THROWS_WITH_AS(t.matmul(a, b), "matmul: (2x3) vs (2x3)", ShapeMismatch);
    CHECK_THROWS_AS(t.add(a, t.constant(Tensor({3, 2}))), ShapeMismatch);
    CHECK_THROWS_AS(t.conv2d(a, b), ShapeMismatch);
}

TEST_CASE("every primitive's adjoint passes central differences") {
    Rng rng(2024);
    double worst = 0.0;
    auto run = [&](const ad::BuildFn& f, std::vector<Tensor> point) {
        const double err = ad::grad_check(f, point);
        worst = std::max(worst, err);
        CHECK(err <= 1e-6);
    };

    for (int trial = 0; trial < 6; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 4));
        const auto m = static_cast<std::size_t>(rng.uniform_int(1, 4));
        const auto k = static_cast<std::size_t>(rng.uniform_int(1, 4));

        run([&rng](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(7);
            return scalarize(t, t.add(v[0], v[1]), r2);
        }, {random_tensor(rng, {n, m}), random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(8);
            return scalarize(t, t.sub(v[0], v[1]), r2);
        }, {random_tensor(rng, {n, m}), random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(9);
            return scalarize(t, t.mul(v[0], v[1]), r2);
        }, {random_tensor(rng, {n, m}), random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(10);
            return scalarize(t, t.scale(v[0], -1.7), r2);
        }, {random_tensor(rng, {n, m, k})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(11);
            return scalarize(t, t.matmul(v[0], v[1]), r2);
        }, {random_tensor(rng, {n, k}), random_tensor(rng, {k, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(12);
            return scalarize(t, t.transpose(v[0]), r2);
        }, {random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(13);
            return scalarize(t, t.tanh_op(v[0]), r2);
        }, {random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(14);
            return scalarize(t, t.sigmoid(v[0]), r2);
        }, {random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(15);
            return scalarize(t, t.relu(v[0]), r2);
        }, {random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(16);
            return scalarize(t, t.leaky_relu(v[0], 0.2), r2);
        }, {random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(17);
            return scalarize(t, t.softmax(v[0], 1), r2);
        }, {random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(18);
            return scalarize(t, t.add_rowvec(v[0], v[1]), r2);
        }, {random_tensor(rng, {n, m}), random_tensor(rng, {m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(19);
            return scalarize(t, t.outer_sum(v[0], v[1]), r2);
        }, {random_tensor(rng, {n}), random_tensor(rng, {m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(20);
            return scalarize(t, t.normalize_rows(v[0]), r2);
        }, {random_tensor(rng, {n, m}, 0.5)});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(21);
            return scalarize(t, t.scale_by(v[0], v[1]), r2);
        }, {random_tensor(rng, {n, m}), random_tensor(rng, {1})});

        run([m](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(22);
            return scalarize(t, t.concat({v[0], v[1]}, 1), r2);
        }, {random_tensor(rng, {n, m}), random_tensor(rng, {n, m})});

        {
            const auto len = static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(m)));
            const auto start = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(m - len)));
            run([start, len](ad::Tape& t, const std::vector<Var>& v) {
                Rng r2(23);
                return scalarize(t, t.slice(v[0], 1, start, len), r2);
            }, {random_tensor(rng, {n, m})});
        }

        run([n, m](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(24);
            return scalarize(t, t.reshape(v[0], {m * n}), r2);
        }, {random_tensor(rng, {n, m})});

        run([](ad::Tape& t, const std::vector<Var>& v) {
            Rng r2(25);
            return scalarize(t, t.sum_axis(v[0], 1), r2);
        }, {random_tensor(rng, {n, m, k})});

        run([](ad::Tape& t, const std::vector<Var>& v) { return t.mean_all(v[0]); },
            {random_tensor(rng, {n, m})});

        {
            // masked softmax with a random mask that keeps the diagonal
            Tensor mask({n, n});
            for (std::size_t i = 0; i < n; ++i) {
                mask.at(i, i) = 1.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (rng.bernoulli(0.4)) mask.at(i, j) = 1.0;
            }
            run([mask](ad::Tape& t, const std::vector<Var>& v) {
                Rng r2(26);
                return scalarize(t, t.masked_row_softmax(v[0], mask), r2);
            }, {random_tensor(rng, {n, n})});
        }

        {
            const auto nn = static_cast<std::size_t>(rng.uniform_int(2, 4));
            const auto tt = static_cast<std::size_t>(rng.uniform_int(2, 5));
            const auto ci = static_cast<std::size_t>(rng.uniform_int(1, 2));
            const auto co = static_cast<std::size_t>(rng.uniform_int(1, 2));
            const auto ks = static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(nn)));
            const auto kt = static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(tt)));
            run([](ad::Tape& t, const std::vector<Var>& v) {
                Rng r2(27);
                return scalarize(t, t.conv2d(v[0], v[1]), r2);
            }, {random_tensor(rng, {nn, tt, ci}), random_tensor(rng, {co, ks, kt, ci})});
        }
    }
    MESSAGE("worst primitive gradient error: ", worst);
}

TEST_CASE("softmax rows are positive and sum to one") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 6));
        const auto m = static_cast<std::size_t>(rng.uniform_int(1, 6));
        ad::Tape t;
        Tensor x({n, m});
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-30.0, 30.0);
        const Tensor& y = t.value(t.softmax(t.constant(x), 1));
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                CHECK(y.at(i, j) > 0.0);
                row += y.at(i, j);
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("composite graphs match finite differences") {
    Rng rng(55);
    // three stacked layers with mixed primitives
    const ad::BuildFn f = [](ad::Tape& t, const std::vector<Var>& v) {
        const Var h1 = t.tanh_op(t.matmul(v[0], v[1]));
        const Var h2 = t.sigmoid(t.add_rowvec(t.matmul(h1, v[2]), v[3]));
        const Var h3 = t.softmax(t.matmul(h2, t.transpose(v[2])), 1);
        return t.mean_all(t.mul(h3, h3));
    };
    const double err = ad::grad_check(f, {random_tensor(rng, {3, 4}), random_tensor(rng, {4, 4}),
                                          random_tensor(rng, {4, 2}), random_tensor(rng, {2})});
    CHECK(err <= 1e-6);
}

TEST_CASE("forward evaluation is deterministic") {
    Rng rng(77);
    const Tensor x = random_tensor(rng, {4, 4});
    const Tensor w = random_tensor(rng, {4, 3});
    auto eval = [&]() {
        ad::Tape t;
        return t.value(t.softmax(t.matmul(t.constant(x), t.constant(w)), 1));
    };
    CHECK(eval() == eval());
}
