#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fsl/common/errors.hpp"
#include "fsl/numerics/gradcheck.hpp"
#include "fsl/numerics/ops.hpp"
#include "fsl/triview/triview.hpp"
#include "support/random.hpp"

using namespace fsl;
using namespace fsl::triview;
using numerics::Tape;

namespace {

Tensor unit(std::vector<double> v) {
    double n = 0.0;
    for (const double x : v) {
        n += x * x;
    }
    for (double& x : v) {
        x /= std::sqrt(n);
    }
    return Tensor::vector(std::move(v));
}

ViewEmbeddings views(Tensor a, Tensor f, Tensor p, Tensor n, double tau) {
    return ViewEmbeddings{std::move(a), std::move(f), std::move(p), std::move(n), tau, 0.1};
}

// Independent scalar re-evaluation of the contrastive ratio in long double.
long double naive_loss(long double s_f, long double s_p, long double s_n, long double tau) {
    const long double pos = std::exp(s_f / tau) + std::exp(s_p / tau);
    const long double neg = std::exp(s_n / tau);
    return -std::log(pos / (pos + neg));
}

long double naive_cos(const Tensor& a, const Tensor& b) {
    long double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += static_cast<long double>(a[i]) * b[i];
        aa += static_cast<long double>(a[i]) * a[i];
        bb += static_cast<long double>(b[i]) * b[i];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

} // namespace

TEST_CASE("partition functions") {
    const Tensor x = unit({1, 2, 3});
    CHECK(pos_partition(views(x, x, x, x, 1.0)) == doctest::Approx(2.0 * std::numbers::e).epsilon(1e-12));
    CHECK(std::abs(pos_partition(views(x, x, x, x, 1.0)) - 5.436564) < 1e-6);
    const Tensor a = unit({1, 0, 0});
    const Tensor b = unit({0, 1, 0});
    CHECK(pos_partition(views(a, b, b, b, 1.0)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(neg_partition(views(a, a, a, a, 1.0)) - 2.718282) < 1e-6);
    CHECK(neg_partition(views(a, a, a, b, 1.0)) == doctest::Approx(1.0).epsilon(1e-12));
    const Tensor minus_a = unit({-1, 0, 0});
    CHECK(std::abs(neg_partition(views(a, a, a, minus_a, 0.5)) - 0.135335) < 1e-6);
    CHECK_THROWS_AS((void)pos_partition(views(a, a, a, a, 0.0)), ConfigError);
    CHECK_THROWS_AS((void)neg_partition(views(a, a, a, a, -1.0)), ConfigError);
    CHECK_THROWS_AS((void)triview_loss(views(a, a, a, a, 0.0)), ConfigError);

    auto eng = rng::make_engine(77);
    for (int i = 0; i < 20; ++i) {
        const auto v = views(testing::random_tensor({6}, eng), testing::random_tensor({6}, eng),
                             testing::random_tensor({6}, eng), testing::random_tensor({6}, eng), 0.07);
        const long double expected =
            std::exp(naive_cos(v.anchor, v.future) / 0.07L) + std::exp(naive_cos(v.anchor, v.paraphrase) / 0.07L);
        CHECK(std::abs(pos_partition(v) - static_cast<double>(expected)) < 1e-9 * std::max(1.0L, expected));
    }
}

TEST_CASE("tri-view loss closed forms") {
    const Tensor x = unit({0.2, -1, 3});
    for (const double tau : {0.07, 0.5, 1.0, 3.0}) {
        CHECK(std::abs(triview_loss(views(x, x, x, x, tau)) - std::log(1.5)) < 1e-9);
    }
    const Tensor a = unit({1, 0});
    const Tensor b = unit({0, 1});
    const double l = triview_loss(views(a, a, a, b, 1.0));
    // -ln(2e / (2e + 1)) evaluated at 30 digits: 0.168847623498305772...
    CHECK(std::abs(l - 0.1688476234983058) < 1e-12);
    CHECK(std::abs(l - static_cast<double>(naive_loss(1, 1, 0, 1))) < 1e-12);
}

TEST_CASE("tri-view loss matches a long-double re-evaluation and stays positive") {
    auto eng = rng::make_engine(5);
    for (int i = 0; i < 200; ++i) {
        const double tau = i % 2 == 0 ? 0.07 : 0.8;
        const auto v = views(testing::random_tensor({5}, eng), testing::random_tensor({5}, eng),
                             testing::random_tensor({5}, eng), testing::random_tensor({5}, eng), tau);
        const double got = triview_loss(v);
        const long double expected = naive_loss(naive_cos(v.anchor, v.future), naive_cos(v.anchor, v.paraphrase),
                                                naive_cos(v.anchor, v.counterfactual), tau);
        CHECK(got > 0.0);
        CHECK(std::abs(got - static_cast<double>(expected)) < 1e-9);
    }
}

TEST_CASE("tri-view loss monotonicity") {
    // Work directly in similarity space through 2-D unit vectors at chosen angles.
    auto at = [](double angle) { return Tensor::vector({std::cos(angle), std::sin(angle)}); };
    const Tensor anchor = at(0.0);
    for (const double tau : {0.07, 1.0}) {
        const double base = triview_loss(views(anchor, at(0.6), at(0.9), at(2.0), tau));
        CHECK(triview_loss(views(anchor, at(0.6), at(0.9), at(1.8), tau)) > base);  // negative closer
        CHECK(triview_loss(views(anchor, at(0.5), at(0.9), at(2.0), tau)) < base);  // future closer
        CHECK(triview_loss(views(anchor, at(0.6), at(0.8), at(2.0), tau)) < base);  // paraphrase closer
    }
}

TEST_CASE("tri-view loss is scale invariant under cosine") {
    auto eng = rng::make_engine(6);
    for (int i = 0; i < 30; ++i) {
        auto v = views(testing::random_tensor({4}, eng), testing::random_tensor({4}, eng),
                       testing::random_tensor({4}, eng), testing::random_tensor({4}, eng), 0.2);
        const double before = triview_loss(v);
        for (double& x : v.paraphrase.data()) {
            x *= 7.5;
        }
        for (double& x : v.anchor.data()) {
            x *= 0.01;
        }
        CHECK(std::abs(triview_loss(v) - before) < 1e-9);
    }
}

TEST_CASE("tri-view gradient check") {
    auto eng = rng::make_engine(8);
    for (int i = 0; i < 20; ++i) {
        const numerics::TensorMap params{{"a", testing::random_tensor({6}, eng)},
                                         {"f", testing::random_tensor({6}, eng)},
                                         {"p", testing::random_tensor({6}, eng)},
                                         {"n", testing::random_tensor({6}, eng)}};
        for (const double tau : {0.07, 1.0}) {
            ContrastiveConfig cfg;
            cfg.tau = tau;
            const numerics::ScalarProgram prog = [&](Tape& t, const numerics::TensorMap& m) {
                return triview_loss(t.param("a", m.at("a")), t.param("f", m.at("f")), t.param("p", m.at("p")),
                                    t.param("n", m.at("n")), cfg);
            };
            CHECK(numerics::finite_diff_check(prog, params) < 1e-4);
        }
    }
}

TEST_CASE("view masks and stop-gradient") {
    auto eng = rng::make_engine(9);
    const Tensor a = testing::random_tensor({4}, eng);
    const Tensor f = testing::random_tensor({4}, eng);
    const Tensor p = testing::random_tensor({4}, eng);
    const Tensor n = testing::random_tensor({4}, eng);
    SUBCASE("dropping the negative zeroes the loss") {
        Tape t;
        ContrastiveConfig cfg;
        cfg.views.counterfactual = false;
        const Var loss = triview_loss(t.param("a", a), t.param("f", f), t.param("p", p), t.param("n", n), cfg);
        CHECK(loss.value().item() == 0.0);
        const auto g = t.backward(loss);
        CHECK(g.at("a").l2_norm_squared() == 0.0);
    }
    SUBCASE("dropping a positive removes its term") {
        Tape t;
        ContrastiveConfig cfg;
        cfg.tau = 0.5;
        cfg.views.future = false;
        const double got =
            triview_loss(t.constant(a), t.constant(f), t.constant(p), t.constant(n), cfg).value().item();
        const long double sp = naive_cos(a, p);
        const long double sn = naive_cos(a, n);
        const long double expected = -std::log(std::exp(sp / 0.5L) / (std::exp(sp / 0.5L) + std::exp(sn / 0.5L)));
        CHECK(std::abs(got - static_cast<double>(expected)) < 1e-12);
        cfg.views.paraphrase = false;
        CHECK_THROWS_AS((void)triview_loss(t.constant(a), t.constant(f), t.constant(p), t.constant(n), cfg),
                        ConfigError);
    }
    SUBCASE("stop_gradient_views blocks view gradients") {
        Tape t;
        ContrastiveConfig cfg;
        cfg.stop_gradient_views = true;
        const auto g =
            t.backward(triview_loss(t.param("a", a), t.param("f", f), t.param("p", p), t.param("n", n), cfg));
        CHECK(g.at("f").l2_norm_squared() == 0.0);
        CHECK(g.at("n").l2_norm_squared() == 0.0);
        CHECK(g.at("a").l2_norm_squared() > 0.0);
    }
    SUBCASE("dot-product similarity") {
        const double expected = static_cast<double>(naive_loss(0.6, 0.6, 0.6, 0.3));
        const Tensor u = Tensor::vector({0.6, 0.0});
        const Tensor one = Tensor::vector({1.0, 0.0});
        CHECK(std::abs(triview_loss(views(u, one, one, one, 0.3), Similarity::dot) - expected) < 1e-12);
    }
}

TEST_CASE("local objective") {
    CHECK(local_objective(4.2, 9.0, 0.0) == 4.2);
    CHECK(local_objective(5.0, 0.4, 0.1) == doctest::Approx(5.04).epsilon(1e-12));
    CHECK(local_objective(1.0, 2.0 * 0.7, 1.0) - local_objective(1.0, 0.7, 1.0) == doctest::Approx(0.7));
    CHECK_THROWS_AS((void)local_objective(1.0, 1.0, -0.1), ConfigError);
}
