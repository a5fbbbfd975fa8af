#include <doctest.h>

#include <thread>

#include "test_support.hpp"

using namespace kansynth;
using testutil::random_point;

TEST_CASE("single affine edge") {
    Layer layer = Layer::zeros(1, 1);
    layer.edges[0][0] = EdgeFunction::affine(2.0, 1.0);
    KanNetwork net(1, {layer});
    CHECK(eval_kan(net, {3.0}) == std::vector<double>{7.0});
}

TEST_CASE("nodes sum their incoming edges") {
    Layer layer = Layer::zeros(1, 2);
    layer.edges[0][0] = EdgeFunction::identity();
    layer.edges[0][1] = EdgeFunction::identity();
    KanNetwork net(2, {layer});
    CHECK(eval_kan(net, {1.5, 2.5}) == std::vector<double>{4.0});
}

TEST_CASE("input length must match the input width") {
    KanNetwork net = identity_network();
    CHECK_THROWS_AS(eval_kan(net, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(eval_kan(net, std::vector<double>{}), ValidationError);
    CHECK_THROWS_AS(eval_kan(net, {std::nan("")}), ValidationError);
}

TEST_CASE("construction validates the dimension chain") {
    Layer first = Layer::zeros(2, 1);
    Layer second = Layer::zeros(1, 3); // expects fan-in 2
    CHECK_THROWS_WITH_AS(KanNetwork(1, {first, second}),
                         doctest::Contains("layer 1"), ValidationError);
    CHECK_THROWS_AS(KanNetwork(1, {}), ValidationError);
    CHECK_THROWS_AS(KanNetwork(0, {Layer::zeros(1, 1)}), ValidationError);
}

TEST_CASE("overflow is reported with the offending layer") {
    Layer l0 = Layer::zeros(1, 1);
    l0.edges[0][0] = EdgeFunction::affine(1e308, 0.0);
    Layer l1 = Layer::zeros(1, 1);
    l1.edges[0][0] = EdgeFunction::affine(1e308, 0.0);
    KanNetwork net(1, {l0, l1});
    try {
        eval_kan(net, {10.0});
        FAIL("expected EvalError");
    } catch (const EvalError& e) {
        CHECK(e.layer_index == 0);
    }
}

TEST_CASE("trace exposes every layer's node values") {
    Layer l0 = Layer::zeros(2, 1);
    l0.edges[0][0] = EdgeFunction::affine(1.0, 0.0);
    l0.edges[1][0] = EdgeFunction::affine(-1.0, 1.0);
    Layer l1 = Layer::zeros(1, 2);
    l1.edges[0][0] = EdgeFunction::identity();
    l1.edges[0][1] = EdgeFunction::identity();
    KanNetwork net(1, {l0, l1});
    auto trace = eval_kan_trace(net, {2.0});
    REQUIRE(trace.size() == 2);
    CHECK(trace[0] == std::vector<double>{2.0, -1.0});
    CHECK(trace[1] == std::vector<double>{1.0});
}

TEST_CASE("evaluation is reentrant across threads") {
    Sampler s(999);
    KanNetwork net = testutil::random_mixed_network(s, 2, 3);
    std::vector<std::vector<double>> points;
    for (int i = 0; i < 64; ++i) points.push_back(random_point(s, 2, -2.0, 2.0));
    std::vector<double> expected;
    for (const auto& x : points) expected.push_back(eval_kan(net, x)[0]);

    std::vector<std::thread> workers;
    std::vector<int> mismatches(4, 0);
    for (int w = 0; w < 4; ++w) {
        workers.emplace_back([&, w] {
            for (int rep = 0; rep < 50; ++rep)
                for (std::size_t i = 0; i < points.size(); ++i)
                    if (eval_kan(net, points[i])[0] != expected[i]) ++mismatches[static_cast<std::size_t>(w)];
        });
    }
    for (auto& t : workers) t.join();
    for (int m : mismatches) CHECK(m == 0);
}

TEST_CASE("node values are additive over edge rows") {
    // replacing a row by the sum of two affine rows sums the node values
    Sampler s(321);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 1 + static_cast<int>(s.uniform_int(0, 2));
        KanNetwork base = testutil::random_affine_network(s, n, 1 + static_cast<int>(s.uniform_int(0, 2)));
        int last = base.depth() - 1;
        int node = static_cast<int>(s.uniform_int(0, base.layer(last).width() - 1));
        int fan = base.layer(last).fan_in();

        auto with_row = [&](const std::vector<AffineMap>& row) {
            std::vector<Layer> layers = base.layers();
            for (int j = 0; j < fan; ++j)
                layers[static_cast<std::size_t>(last)]
                    .edges[static_cast<std::size_t>(node)][static_cast<std::size_t>(j)] =
                    EdgeFunction::affine(row[static_cast<std::size_t>(j)].a,
                                         row[static_cast<std::size_t>(j)].b);
            return KanNetwork(base.input_width(), std::move(layers));
        };

        std::vector<AffineMap> r1, r2, sum;
        for (int j = 0; j < fan; ++j) {
            AffineMap a{s.uniform(-1.0, 1.0), s.uniform(-1.0, 1.0)};
            AffineMap b{s.uniform(-1.0, 1.0), s.uniform(-1.0, 1.0)};
            r1.push_back(a);
            r2.push_back(b);
            sum.push_back(AffineMap{a.a + b.a, a.b + b.b});
        }
        auto x = random_point(s, n, -3.0, 3.0);
        double lhs = eval_kan(with_row(sum), x)[static_cast<std::size_t>(node)];
        double rhs = eval_kan(with_row(r1), x)[static_cast<std::size_t>(node)] +
                     eval_kan(with_row(r2), x)[static_cast<std::size_t>(node)];
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }
}
