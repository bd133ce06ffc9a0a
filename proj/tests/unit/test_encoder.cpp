#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fsl/common/errors.hpp"
#include "fsl/encoder/encoder.hpp"
#include "fsl/numerics/gradcheck.hpp"
#include "fsl/numerics/ops.hpp"
#include "support/random.hpp"

using namespace fsl;
using namespace fsl::encoder;
using numerics::GradMap;
using numerics::ScalarProgram;

namespace {

ModelDims small_dims(std::size_t n_items = 20, std::size_t d = 8) { return ModelDims{n_items, d, kMaxSeqLen}; }

ItemList random_items(rng::Engine& eng, std::size_t len, std::size_t n_items) {
    ItemList out(len);
    for (auto& v : out) {
        v = static_cast<ItemId>(rng::uniform_index(eng, n_items));
    }
    return out;
}

// Loss that depends on every coordinate of the encoding.
ScalarProgram encoding_program(BackboneKind kind, ModelDims dims, ItemList items, ItemId target) {
    return [=](numerics::Tape& t, const numerics::TensorMap& m) {
        const ParamSet p = ParamSet::from_tensors(m);
        ModelGraph g(t, p);
        (void)kind;
        (void)dims;
        return next_item_loss(g, items, target);
    };
}

} // namespace

TEST_CASE("parameter set layout") {
    const auto p = ParamSet::initialize(BackboneKind::gru, small_dims(), 1);
    CHECK(p.tensors().size() == 10);
    CHECK(p.at(slot::item_embeddings).rows() == 21);
    for (const double v : p.at(slot::item_embeddings).row(20)) {
        CHECK(v == 0.0);
    }
    const auto a = ParamSet::initialize(BackboneKind::attention, small_dims(), 1);
    CHECK(a.tensors().size() == 6);
    CHECK(a.at(slot::attn_positional).rows() == 50);
    CHECK(ParamSet::from_tensors(a.tensors()) == a);
    CHECK(!a.same_layout(p));
    CHECK(ParamSet::initialize(BackboneKind::attention, small_dims(), 1) == a);
    CHECK_FALSE(ParamSet::initialize(BackboneKind::attention, small_dims(), 2) == a);
    auto broken = a.tensors();
    broken.erase(slot::attn_w_q);
    CHECK_THROWS_AS((void)ParamSet::from_tensors(broken), DimensionError);
}

TEST_CASE("gru_cell reference cases") {
    const auto dims = small_dims();
    const ParamSet zero = ParamSet::zeros(BackboneKind::gru, dims);
    auto eng = rng::make_engine(3);
    {
        numerics::Tape t;
        ModelGraph g(t, zero);
        const Var x = t.constant(testing::random_tensor({8}, eng));
        const Var h = t.constant(Tensor({8}));
        for (const double v : gru_cell(g, x, h).value().data()) {
            CHECK(v == 0.0);
        }
    }
    {
        ParamSet p = ParamSet::initialize(BackboneKind::gru, dims, 5);
        for (double& v : p.at(slot::gru_b_z).data()) {
            v = -60.0;
        }
        numerics::Tape t;
        ModelGraph g(t, p);
        const Tensor hv = testing::random_tensor({8}, eng);
        const Tensor out = gru_cell(g, t.constant(testing::random_tensor({8}, eng)), t.constant(hv)).value();
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(std::abs(out[i] - hv[i]) < 1e-12);
        }
    }
    {
        numerics::Tape t;
        ModelGraph g(t, zero);
        CHECK_THROWS_AS((void)gru_cell(g, t.constant(Tensor({3})), t.constant(Tensor({8}))), DimensionError);
    }
}

TEST_CASE("gru_cell gradient check") {
    const auto dims = small_dims();
    auto eng = rng::make_engine(8);
    for (int seed = 0; seed < 5; ++seed) {
        ParamSet p = ParamSet::initialize(BackboneKind::gru, dims, seed);
        for (const char* b : {slot::gru_b_z, slot::gru_b_r, slot::gru_b_h}) {
            p.at(b) = testing::random_tensor({8}, eng, 0.3);
        }
        auto m = p.tensors();
        m.emplace("x", testing::random_tensor({8}, eng));
        m.emplace("h", testing::random_tensor({8}, eng, 0.5));
        const Tensor proj = testing::random_tensor({8}, eng);
        const ScalarProgram prog = [&](numerics::Tape& t, const numerics::TensorMap& mm) {
            numerics::TensorMap only = mm;
            only.erase("x");
            only.erase("h");
            const ParamSet ps = ParamSet::from_tensors(only);
            ModelGraph g(t, ps);
            for (const auto& [name, tensor] : mm) {
                (void)t.param(name, tensor);
            }
            const Var out = gru_cell(g, t.param("x", mm.at("x")), t.param("h", mm.at("h")));
            return numerics::sum(numerics::mul(out, t.constant(proj)));
        };
        CHECK(numerics::finite_diff_check(prog, m) < 1e-4);
    }
}

TEST_CASE("encode_gru") {
    const auto dims = small_dims();
    const ParamSet p = ParamSet::initialize(BackboneKind::gru, dims, 12);
    SUBCASE("length-1 sequence is one cell application") {
        numerics::Tape t;
        ModelGraph g(t, p);
        const ItemList one{7};
        const Var x = numerics::row(numerics::embedding_lookup(g.param(slot::item_embeddings), one), 0);
        const Tensor direct = gru_cell(g, x, t.constant(Tensor({8}))).value();
        CHECK(encode(p, one) == direct);
    }
    SUBCASE("zero parameters give a zero state") {
        const ParamSet z = ParamSet::zeros(BackboneKind::gru, dims);
        const Tensor h = encode(z, ItemList{1, 2, 3, 4});
        for (const double v : h.data()) {
            CHECK(v == 0.0);
        }
    }
    SUBCASE("order sensitivity") {
        auto eng = rng::make_engine(99);
        for (int seed = 0; seed < 10; ++seed) {
            ItemList s = random_items(eng, 5, 20);
            s[0] = 1;
            s[4] = 2;
            ItemList r(s.rbegin(), s.rend());
            CHECK_FALSE(encode(p, s) == encode(p, r));
        }
    }
    SUBCASE("empty sequence is rejected") {
        CHECK_THROWS_AS((void)encode(p, ItemList{}), ContractError);
    }
}

TEST_CASE("encode_attention") {
    const auto dims = small_dims();
    const ParamSet p = ParamSet::initialize(BackboneKind::attention, dims, 4);
    SUBCASE("single token attends only to itself") {
        const ItemList one{5};
        numerics::Tape t;
        const Var x = t.constant(Tensor::vector(std::vector<double>(p.at(slot::item_embeddings).row(5).begin(),
                                                                   p.at(slot::item_embeddings).row(5).end())));
        const Var pos = t.constant(Tensor::vector(std::vector<double>(p.at(slot::attn_positional).row(0).begin(),
                                                                     p.at(slot::attn_positional).row(0).end())));
        const Var x1 = numerics::add(x, pos);
        const Var expected = numerics::add(
            numerics::matmul(numerics::matmul(x1, t.constant(p.at(slot::attn_w_v))), t.constant(p.at(slot::attn_w_o))), x1);
        const Tensor got = encode(p, one);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(got[i] == doctest::Approx(expected.value()[i]).epsilon(1e-12));
        }
    }
    SUBCASE("causality: prefixes are unaffected by suffixes") {
        auto eng = rng::make_engine(31);
        for (int seed = 0; seed < 10; ++seed) {
            const ItemList s = random_items(eng, 12, 20);
            numerics::Tape t;
            ModelGraph g(t, p, false);
            const Tensor all = encode_attention_all(g, s).value();
            for (std::size_t len = 1; len <= s.size(); ++len) {
                const Tensor prefix = encode(p, std::span<const ItemId>(s).first(len));
                for (std::size_t j = 0; j < 8; ++j) {
                    CHECK(prefix[j] == all.at(len - 1, j));
                }
            }
        }
    }
    SUBCASE("length limits") {
        CHECK_THROWS_AS((void)encode(p, ItemList{}), ContractError);
        CHECK_THROWS_AS((void)encode(p, ItemList(51, 1)), ContractError);
        CHECK_NOTHROW((void)encode(p, ItemList(50, 1)));
    }
}

TEST_CASE("backbone gradient checks") {
    auto eng = rng::make_engine(17);
    for (const auto kind : {BackboneKind::gru, BackboneKind::attention}) {
        for (int seed = 0; seed < 3; ++seed) {
            const ParamSet p = ParamSet::initialize(kind, small_dims(), 100 + seed, InitConfig{0.5, 1.0, 0.3});
            const ItemList s = random_items(eng, 6, 20);
            const auto report = numerics::finite_diff_report(encoding_program(kind, small_dims(), s, 3), p.tensors());
            CAPTURE(to_string(kind));
            CAPTURE(report.worst_param);
            CHECK(report.max_rel_error < 1e-4);
        }
    }
}

TEST_CASE("all-position loss gradient check") {
    auto eng = rng::make_engine(18);
    const ParamSet p = ParamSet::initialize(BackboneKind::attention, small_dims(), 7, InitConfig{0.5, 1.0, 0.3});
    const ItemList s = random_items(eng, 6, 20);
    const ScalarProgram prog = [&](numerics::Tape& t, const numerics::TensorMap& m) {
        const ParamSet ps = ParamSet::from_tensors(m);
        ModelGraph g(t, ps);
        return next_item_loss_all(g, s);
    };
    CHECK(numerics::finite_diff_check(prog, p.tensors()) < 1e-4);
    const ParamSet gp = ParamSet::initialize(BackboneKind::gru, small_dims(), 7);
    numerics::Tape t;
    ModelGraph g(t, gp);
    CHECK_THROWS_AS((void)next_item_loss_all(g, s), ConfigError);
}

TEST_CASE("score_items") {
    SUBCASE("orthonormal rows recover the query item") {
        ParamSet p = ParamSet::zeros(BackboneKind::attention, ModelDims{6, 6, 50});
        auto& e = p.at(slot::item_embeddings);
        for (std::size_t i = 0; i < 6; ++i) {
            e[i * 6 + i] = 1.0;
        }
        for (std::size_t j = 0; j < 6; ++j) {
            const Tensor h = Tensor::vector(std::vector<double>(e.row(j).begin(), e.row(j).end()));
            const Tensor s = score_items(p, h);
            CHECK(s.size() == 6);
            CHECK(static_cast<std::size_t>(std::max_element(s.data().begin(), s.data().end()) - s.data().begin()) == j);
        }
        const Tensor zero_scores = score_items(p, Tensor({6}));
        for (const double v : zero_scores.data()) {
            CHECK(v == 0.0);
        }
    }
    SUBCASE("matches a per-item loop and is linear in h") {
        auto eng = rng::make_engine(41);
        const ParamSet p = ParamSet::initialize(BackboneKind::gru, small_dims(), 41);
        const Tensor h = testing::random_tensor({8}, eng);
        const Tensor s = score_items(p, h);
        const auto& e = p.at(slot::item_embeddings);
        for (std::size_t i = 0; i < 20; ++i) {
            double naive = 0.0;
            for (std::size_t j = 0; j < 8; ++j) {
                naive += h[j] * e.at(i, j);
            }
            CHECK(std::abs(naive - s[i]) < 1e-12);
        }
        Tensor h3 = h;
        for (double& v : h3.data()) {
            v *= 3.0;
        }
        const Tensor s3 = score_items(p, h3);
        for (std::size_t i = 0; i < 20; ++i) {
            CHECK(std::abs(s3[i] - 3.0 * s[i]) < 1e-12);
        }
    }
}

TEST_CASE("next_item_loss") {
    const ModelDims dims{200, 8, 50};
    for (const auto kind : {BackboneKind::gru, BackboneKind::attention}) {
        const ParamSet z = ParamSet::zeros(kind, dims);
        CHECK(std::abs(next_item_loss(z, ItemList{1, 2, 3}, 9) - std::log(200.0)) < 1e-12);
    }
    ParamSet p = ParamSet::zeros(BackboneKind::attention, dims);
    // h = e_last + pos_0 contributions; make item 9 point along the query.
    auto& e = p.at(slot::item_embeddings);
    e[3 * 8 + 0] = 1000.0;
    e[9 * 8 + 0] = 2000.0;
    CHECK(next_item_loss(p, ItemList{3}, 9) < 1e-9);
    CHECK_THROWS_AS((void)next_item_loss(p, ItemList{3}, 200), IndexError);

    auto eng = rng::make_engine(5);
    const ParamSet r = ParamSet::initialize(BackboneKind::attention, ModelDims{20, 8, 50}, 5);
    for (int i = 0; i < 20; ++i) {
        CHECK(next_item_loss(r, random_items(eng, 4, 20), static_cast<ItemId>(i)) > 0.0);
    }
}
