#include <doctest.h>

#include "test_support.hpp"

using namespace kansynth;
using testutil::random_point;

namespace {

KanNetwork scalar_affine_net(double a, double b) {
    Layer layer = Layer::zeros(1, 1);
    layer.edges[0][0] = EdgeFunction::affine(a, b);
    return KanNetwork(1, {layer});
}

bool same_structure(const KanNetwork& x, const KanNetwork& y) {
    if (x.input_width() != y.input_width() || x.depth() != y.depth()) return false;
    for (int l = 0; l < x.depth(); ++l) {
        if (x.layer(l).width() != y.layer(l).width()) return false;
        for (std::size_t k = 0; k < x.layer(l).edges.size(); ++k)
            for (std::size_t j = 0; j < x.layer(l).edges[k].size(); ++j)
                if (x.layer(l).edges[k][j] != y.layer(l).edges[k][j]) return false;
    }
    return true;
}

} // namespace

TEST_CASE("affine closed form of a two-layer chain") {
    KanNetwork net = serial_compose(scalar_affine_net(3.0, 0.0), scalar_affine_net(2.0, 1.0));
    auto form = affine_closed_form(net);
    REQUIRE(form.has_value());
    CHECK(form->matrix == std::vector<std::vector<double>>{{6.0}});
    CHECK(form->offset == std::vector<double>{3.0});
}

TEST_CASE("non-affine edges make the closed form absent") {
    Layer layer = Layer::zeros(1, 1);
    layer.edges[0][0] = EdgeFunction::named("silu");
    CHECK_FALSE(affine_closed_form(KanNetwork(1, {layer})).has_value());

    // a linear polynomial is affine as a function but not the Affine variant
    Layer poly = Layer::zeros(1, 1);
    poly.edges[0][0] = EdgeFunction::polynomial({0.0, 1.0});
    CHECK_FALSE(affine_closed_form(KanNetwork(1, {poly})).has_value());
}

TEST_CASE("closed form agrees with evaluation on random all-affine networks") {
    Sampler s(77);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 1 + static_cast<int>(s.uniform_int(0, 2));
        KanNetwork net = testutil::random_affine_network(s, n, 1 + static_cast<int>(s.uniform_int(0, 3)));
        auto form = affine_closed_form(net);
        REQUIRE(form.has_value());
        for (int i = 0; i < 100; ++i) {
            auto x = random_point(s, n, -10.0, 10.0);
            auto via_eval = eval_kan(net, x);
            auto via_form = form->eval(x);
            for (std::size_t k = 0; k < via_eval.size(); ++k)
                CHECK(std::abs(via_eval[k] - via_form[k]) <= 1e-12 * (1.0 + std::abs(via_eval[k])));
        }
    }
}

TEST_CASE("depth_equalize pads with identity layers") {
    KanNetwork id = identity_network();
    KanNetwork padded = depth_equalize(id, 4);
    CHECK(padded.depth() == 4);
    CHECK(eval_kan(padded, {-2.5}) == std::vector<double>{-2.5});

    SUBCASE("padding never changes the function") {
        Sampler s(13);
        for (int trial = 0; trial < 20; ++trial) {
            KanNetwork net = testutil::random_mixed_network(s, 2, 2);
            KanNetwork deeper = depth_equalize(net, net.depth() + 3);
            for (int i = 0; i < 100; ++i) {
                auto x = random_point(s, 2, -2.0, 2.0);
                double before = eval_kan(net, x)[0];
                double after = eval_kan(deeper, x)[0];
                CHECK(std::abs(before - after) <= 1e-15 * (1.0 + std::abs(before)));
            }
        }
    }
    SUBCASE("equal target depth is a structural no-op") {
        Sampler s(14);
        KanNetwork net = testutil::random_mixed_network(s, 2, 3);
        CHECK(same_structure(net, depth_equalize(net, net.depth())));
    }
    SUBCASE("shrinking is rejected") {
        CHECK_THROWS_AS(depth_equalize(depth_equalize(identity_network(), 3), 2), ValidationError);
    }
}

TEST_CASE("parallel_compose concatenates outputs") {
    KanNetwork two = parallel_compose(identity_network(), identity_network());
    CHECK(two.output_width() == 2);
    CHECK(eval_kan(two, {5.0}) == std::vector<double>{5.0, 5.0});

    SUBCASE("depths are equalized and branches stay independent") {
        Sampler s(15);
        KanNetwork a = testutil::random_mixed_network(s, 2, 1);
        KanNetwork b = testutil::random_mixed_network(s, 2, 3);
        KanNetwork par = parallel_compose(a, b);
        CHECK(par.depth() == 3);
        CHECK(collect_affine_dictionary(par).count({0.0, 0.0}) == 1);
        for (int i = 0; i < 200; ++i) {
            auto x = random_point(s, 2, -2.0, 2.0);
            double ya = eval_kan(a, x)[0];
            double yb = eval_kan(b, x)[0];
            auto both = eval_kan(par, x);
            CHECK(std::abs(both[0] - ya) <= 1e-13 * (1.0 + std::abs(ya)));
            CHECK(std::abs(both[1] - yb) <= 1e-13 * (1.0 + std::abs(yb)));
        }
    }
    SUBCASE("input widths must match") {
        Layer wide = Layer::zeros(1, 2);
        CHECK_THROWS_AS(parallel_compose(identity_network(), KanNetwork(2, {wide})), ValidationError);
    }
}

TEST_CASE("serial_compose feeds one network into another") {
    CHECK(eval_kan(serial_compose(scalar_affine_net(1.0, 3.0), scalar_affine_net(2.0, 0.0)), {4.0}) ==
          std::vector<double>{11.0});

    SUBCASE("identity outer preserves the inner function") {
        Sampler s(16);
        KanNetwork inner = testutil::random_mixed_network(s, 2, 2);
        KanNetwork chained = serial_compose(identity_network(), inner);
        for (int i = 0; i < 100; ++i) {
            auto x = random_point(s, 2, -2.0, 2.0);
            CHECK(eval_kan(chained, x)[0] == eval_kan(inner, x)[0]);
        }
    }
    SUBCASE("associativity") {
        Sampler s(17);
        KanNetwork a = testutil::random_mixed_network(s, 1, 2);
        KanNetwork b = testutil::random_mixed_network(s, 1, 2);
        KanNetwork c = testutil::random_mixed_network(s, 1, 1);
        KanNetwork left = serial_compose(serial_compose(a, b), c);
        KanNetwork right = serial_compose(a, serial_compose(b, c));
        for (int i = 0; i < 100; ++i) {
            double t = s.uniform(-2.0, 2.0);
            double yl = eval_kan(left, {t})[0];
            double yr = eval_kan(right, {t})[0];
            CHECK(std::abs(yl - yr) <= 1e-12 * (1.0 + std::abs(yr)));
        }
    }
    SUBCASE("width mismatch is rejected") {
        CHECK_THROWS_AS(serial_compose(KanNetwork(2, {Layer::zeros(1, 2)}), identity_network()),
                        ValidationError);
    }
}

TEST_CASE("collect_affine_dictionary") {
    SUBCASE("all-sigma network yields the empty set") {
        Layer layer = Layer::zeros(2, 1);
        layer.edges[0][0] = EdgeFunction::named("silu");
        layer.edges[1][0] = EdgeFunction::named("tanh");
        Layer out = Layer::zeros(1, 2);
        out.edges[0][0] = EdgeFunction::named("silu");
        out.edges[0][1] = EdgeFunction::named("silu");
        CHECK(collect_affine_dictionary(KanNetwork(1, {layer, out})).empty());
    }
    SUBCASE("distinct payloads are collected once") {
        Layer layer = Layer::zeros(2, 2);
        layer.edges[0][0] = EdgeFunction::affine(1.0, 0.0);
        layer.edges[0][1] = EdgeFunction::affine(1.0, 0.0);
        layer.edges[1][0] = EdgeFunction::affine(0.5, 0.0);
        layer.edges[1][1] = EdgeFunction::named("silu");
        auto dict = collect_affine_dictionary(KanNetwork(2, {layer}));
        CHECK(dict == AffineDictionary{{1.0, 0.0}, {0.5, 0.0}});
    }
}

TEST_CASE("polynomial edges bound the composed degree") {
    // affine + degree-d polynomial edges with L hidden layers compose to a
    // polynomial of degree at most d^(L+1); its finite differences of order
    // d^(L+1)+1 vanish
    Sampler s(18);
    const int d = 2;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Layer> layers;
        Layer l0 = Layer::zeros(2, 2);
        for (auto& row : l0.edges)
            for (auto& e : row)
                e = EdgeFunction::polynomial(
                    {s.uniform(-0.3, 0.3), s.uniform(-0.3, 0.3), s.uniform(-0.3, 0.3)});
        Layer l1 = Layer::zeros(1, 2);
        l1.edges[0][0] = EdgeFunction::polynomial({s.uniform(-0.3, 0.3), s.uniform(-0.3, 0.3),
                                                   s.uniform(-0.3, 0.3)});
        l1.edges[0][1] = EdgeFunction::affine(s.uniform(-0.5, 0.5), s.uniform(-0.5, 0.5));
        KanNetwork net(2, {l0, l1}); // one hidden layer

        const int order = d * d + 1; // d^(L+1) + 1 with L = 1
        auto x0 = random_point(s, 2, -0.5, 0.5);
        int axis = static_cast<int>(s.uniform_int(0, 1));
        const double h = 0.5;
        auto f = [&](double t) {
            auto x = x0;
            x[static_cast<std::size_t>(axis)] += t;
            return eval_kan(net, x)[0];
        };
        double diff = 0.0, scale = 0.0, binom = 1.0;
        for (int i = 0; i <= order; ++i) {
            double term = binom * f(static_cast<double>(i) * h);
            diff += ((order - i) % 2 == 0 ? term : -term);
            scale += std::abs(term);
            binom = binom * static_cast<double>(order - i) / static_cast<double>(i + 1);
        }
        CHECK(std::abs(diff) <= 1e-6 * (1.0 + scale));
    }
}
