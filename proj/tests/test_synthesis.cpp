#include <doctest.h>

#include "test_support.hpp"

using namespace kansynth;
using testutil::mlp_direct;
using testutil::random_mlp;
using testutil::random_point;

TEST_CASE("shallow compiler: single unit passes through") {
    MlpNetwork mlp;
    mlp.n = 2;
    mlp.activation = EdgeFunction::named("tanh");
    mlp.units = {MlpUnit{{1.0, 0.0}, 0.0, 1.0}};
    for (OutputScaling scaling : {OutputScaling::affine_layer, OutputScaling::scaled_edge}) {
        KanNetwork net = mlp_to_kan_shallow(mlp, scaling);
        CHECK(eval_kan(net, {0.3, 9.0})[0] == doctest::Approx(std::tanh(0.3)).epsilon(1e-15));
    }
}

TEST_CASE("shallow compiler matches the direct formula") {
    Sampler s(41);
    MlpNetwork mlp = random_mlp(s, 4, 8, EdgeFunction::named("silu"));
    KanNetwork split = mlp_to_kan_shallow(mlp);
    KanNetwork literal = mlp_to_kan_shallow(mlp, OutputScaling::scaled_edge);
    CHECK(literal.depth() == 2);
    for (int i = 0; i < 1000; ++i) {
        auto x = random_point(s, 4, -3.0, 3.0);
        double want = mlp_direct(mlp, x);
        CHECK(testutil::rel_err(eval_kan(split, x)[0], want) <= 1e-13);
        CHECK(testutil::rel_err(eval_kan(literal, x)[0], want) <= 1e-13);
    }
}

TEST_CASE("shallow compiler: zero output coefficients give the zero function") {
    Sampler s(42);
    MlpNetwork mlp = random_mlp(s, 3, 5, EdgeFunction::named("tanh"));
    for (auto& u : mlp.units) u.c = 0.0;
    KanNetwork net = mlp_to_kan_shallow(mlp);
    for (int i = 0; i < 50; ++i) CHECK(eval_kan(net, random_point(s, 3, -3.0, 3.0))[0] == 0.0);
}

TEST_CASE("two-hidden compiler is the exact three-layer construction") {
    Sampler s(43);
    MlpNetwork mlp = random_mlp(s, 3, 10, EdgeFunction::named("tanh"));
    KanNetwork net = mlp_to_kan_two_hidden(mlp);
    REQUIRE(net.depth() == 3);
    CHECK(net.layer(0).width() == 10);
    CHECK(net.layer(1).width() == 10);
    CHECK(net.output_width() == 1);

    for (int i = 0; i < 1000; ++i) {
        auto x = random_point(s, 3, -3.0, 3.0);
        CHECK(testutil::rel_err(eval_kan(net, x)[0], mlp_direct(mlp, x)) <= 1e-13);
    }

    // dictionary is exactly the builder-emitted affine payloads
    AffineDictionary expected{{0.0, 0.0}};
    for (const auto& u : mlp.units) {
        expected.insert({u.w[0], u.b});
        for (std::size_t j = 1; j < u.w.size(); ++j) expected.insert({u.w[j], 0.0});
        expected.insert({u.c, 0.0});
    }
    CHECK(collect_affine_dictionary(net) == expected);
}

TEST_CASE("compilers canonicalize affine activations into the Affine variant") {
    MlpNetwork mlp;
    mlp.n = 1;
    mlp.activation = EdgeFunction::polynomial({0.5, -2.0}); // -2t + 0.5, affine
    mlp.units = {MlpUnit{{1.5}, 0.25, 2.0}, MlpUnit{{-1.0}, 0.0, 1.0}};
    KanNetwork net = mlp_to_kan_two_hidden(mlp);
    auto form = affine_closed_form(net);
    REQUIRE(form.has_value());
    Sampler s(44);
    for (int i = 0; i < 50; ++i) {
        double t = s.uniform(-4.0, 4.0);
        CHECK(std::abs(form->eval({t})[0] - mlp_direct(mlp, {t})) <= 1e-12);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("fd quadratic: degree two is the zeroth difference") {
    FdQuadratic fdq = fd_quadratic_gadget(EdgeFunction::polynomial({0.0, 0.0, 1.0}), 1.0);
    CHECK(fdq.weights == std::vector<double>{1.0});
    CHECK(fdq.A == doctest::Approx(1.0));
    CHECK(fdq.B == doctest::Approx(0.0));
    CHECK(fdq.C == doctest::Approx(0.0));
    CHECK(eval_kan(fdq.gadget.network, {3.0})[0] == doctest::Approx(9.0));
}

TEST_CASE("fd quadratic: cubic sigma with unit step") {
    // sigma = t^3 + t, h = 1: q(t) = 3t^2 + 3t + 2
    FdQuadratic fdq = fd_quadratic_gadget(EdgeFunction::polynomial({0.0, 1.0, 0.0, 1.0}), 1.0);
    CHECK(fdq.A == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(fdq.B == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(fdq.C == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(eval_kan(fdq.gadget.network, {-2.0})[0] == doctest::Approx(8.0));
    CHECK(eval_kan(fdq.gadget.network, {0.0})[0] == doctest::Approx(2.0));
    CHECK(eval_kan(fdq.gadget.network, {1.5})[0] == doctest::Approx(13.25));
}

TEST_CASE("fd quadratic: quartic weights carry the binomial signs") {
    FdQuadratic fdq = fd_quadratic_gadget(EdgeFunction::polynomial({0.0, 0.0, 0.0, 0.0, 1.0}), 1.0);
    CHECK(fdq.weights == std::vector<double>{1.0, -2.0, 1.0});
}

TEST_CASE("fd quadratic rejects bad inputs") {
    CHECK_THROWS_AS(fd_quadratic_gadget(EdgeFunction::polynomial({0.0, 1.0}), 1.0), ValidationError);
    CHECK_THROWS_AS(fd_quadratic_gadget(EdgeFunction::polynomial({0.0, 0.0, 1.0}), 0.0),
                    ValidationError);
    CHECK_THROWS_AS(fd_quadratic_gadget(EdgeFunction::named("tanh"), 1.0), ValidationError);
}

TEST_CASE("leading coefficient law across degrees and steps") {
    Sampler s(45);
    for (int d = 2; d <= 8; ++d) {
        for (double h : {1.0, 0.5, -2.0}) {
            std::vector<double> coeffs(static_cast<std::size_t>(d) + 1);
            for (auto& c : coeffs) c = s.uniform(-1.0, 1.0);
            if (std::abs(coeffs.back()) < 0.5) coeffs.back() = coeffs.back() < 0 ? -0.7 : 0.7;
            EdgeFunction sigma = EdgeFunction::polynomial(coeffs);

            double factorial_half = 0.5;
            for (int i = 2; i <= d; ++i) factorial_half *= static_cast<double>(i);
            double law = coeffs.back() * factorial_half * std::pow(h, d - 2);

            FdQuadratic fdq = fd_quadratic_gadget(sigma, h);
            CHECK(std::abs(fdq.A - law) <= 1e-12 * std::abs(law));
            CHECK(std::abs(fd_quadratic_expanded_lead(sigma, h) - law) <= 1e-12 * std::abs(law));
        }
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("square gadget squares") {
    SUBCASE("sigma = t^2") {
        GadgetReport sq = square_gadget(EdgeFunction::polynomial({0.0, 0.0, 1.0}), 1.0);
        CHECK(std::abs(eval_kan(sq.network, {3.0})[0] - 9.0) <= 1e-12);
    }
    SUBCASE("sigma = t^3 + t over [-10, 10]") {
        GadgetReport sq = square_gadget(EdgeFunction::polynomial({0.0, 1.0, 0.0, 1.0}), 1.0);
        for (int i = 0; i < 1000; ++i) {
            double t = -10.0 + 20.0 * i / 999.0;
            CHECK(std::abs(eval_kan(sq.network, {t})[0] - t * t) <= 1e-9);
        }
    }
    SUBCASE("sigma = 2t^5 - t + 4 with h = 1/2 cancels harder") {
        GadgetReport sq = square_gadget(EdgeFunction::polynomial({4.0, -1.0, 0.0, 0.0, 0.0, 2.0}), 0.5);
        for (int i = 0; i < 1000; ++i) {
            double t = -10.0 + 20.0 * i / 999.0;
            CHECK(std::abs(eval_kan(sq.network, {t})[0] - t * t) <= 1e-7);
        }
    }
    SUBCASE("vanishing leading coefficient is a conditioning error") {
        CHECK_THROWS_AS(square_gadget(EdgeFunction::polynomial({0.0, 0.0, 1e-300}), 1.0),
                        ConditioningError);
    }
}

TEST_CASE("squaring composes with scalar networks") {
    GadgetReport sq = square_gadget(EdgeFunction::polynomial({0.0, 1.0, 0.0, 1.0}), 1.0);

    SUBCASE("after a summing net it squares the sum") {
        Layer sum = Layer::zeros(1, 2);
        sum.edges[0][0] = EdgeFunction::identity();
        sum.edges[0][1] = EdgeFunction::identity();
        KanNetwork net = serial_compose(sq.network, KanNetwork(2, {sum}));
        CHECK(eval_kan(net, {1.0, 2.0})[0] == doctest::Approx(9.0).epsilon(1e-12));
    }
    SUBCASE("after random scalar networks") {
        Sampler s(46);
        for (int trial = 0; trial < 10; ++trial) {
            KanNetwork u = testutil::random_mixed_network(s, 2, 2);
            KanNetwork squared = serial_compose(sq.network, u);
            for (int i = 0; i < 100; ++i) {
                auto x = random_point(s, 2, -2.0, 2.0);
                double want = eval_kan(u, x)[0];
                want *= want;
                CHECK(std::abs(eval_kan(squared, x)[0] - want) <= 1e-8 * (1.0 + want));
            }
        }
    }
}

TEST_CASE("multiply gadget implements the polarization identity") {
    GadgetReport sq = square_gadget(EdgeFunction::polynomial({0.0, 1.0, 0.0, 1.0}), 1.0);
    for (bool a0 : {false, true}) {
        KanNetwork mul = multiply_gadget(sq, a0);
        CHECK(std::abs(eval_kan(mul, {2.0, 3.0})[0] - 6.0) <= 1e-10);
        CHECK(std::abs(eval_kan(mul, {-1.0, 5.0})[0] + 5.0) <= 1e-10);
        Sampler s(47);
        for (int i = 0; i < 1000; ++i) {
            auto x = random_point(s, 2, -5.0, 5.0);
            CHECK(std::abs(eval_kan(mul, x)[0] - x[0] * x[1]) <= 1e-8);
        }
    }
}

TEST_CASE("multiply gadget wants a scalar squaring network") {
    GadgetReport bogus = make_gadget_report(KanNetwork(2, {Layer::zeros(1, 2)}));
    CHECK_THROWS_AS(multiply_gadget(bogus), ValidationError);
}

// ---------------------------------------------------------------------------

TEST_CASE("polynomial gadget computes sparse polynomials") {
    EdgeFunction sigma = EdgeFunction::polynomial({0.0, 0.0, 1.0});

    SUBCASE("x1*x2") {
        SparsePolynomial p{2, {Monomial{{1, 1}, 1.0}}};
        GadgetReport g = polynomial_gadget(p, sigma, 1.0);
        CHECK(std::abs(eval_kan(g.network, {2.0, 3.0})[0] - 6.0) <= 1e-10);
    }
    SUBCASE("x1^2 x2 - 3 x1 + 1/2") {
        SparsePolynomial p{2, {Monomial{{2, 1}, 1.0}, Monomial{{1, 0}, -3.0}, Monomial{{0, 0}, 0.5}}};
        GadgetReport g = polynomial_gadget(p, sigma, 1.0);
        CHECK(std::abs(eval_kan(g.network, {1.0, 2.0})[0] + 0.5) <= 1e-9);
        Sampler s(48);
        for (int i = 0; i < 200; ++i) {
            auto x = random_point(s, 2, -1.0, 1.0);
            CHECK(std::abs(eval_kan(g.network, x)[0] - eval_sparse_polynomial(p, x)) <= 1e-9);
        }
    }
    SUBCASE("constant one") {
        SparsePolynomial p{3, {Monomial{{0, 0, 0}, 1.0}}};
        GadgetReport g = polynomial_gadget(p, sigma, 1.0);
        Sampler s(49);
        for (int i = 0; i < 50; ++i)
            CHECK(std::abs(eval_kan(g.network, random_point(s, 3, -2.0, 2.0))[0] - 1.0) <= 1e-12);
    }
    SUBCASE("empty monomial list is the zero network") {
        GadgetReport g = polynomial_gadget(SparsePolynomial{2, {}}, sigma, 1.0);
        CHECK(eval_kan(g.network, {1.5, -0.5})[0] == 0.0);
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(polynomial_gadget(SparsePolynomial{2, {Monomial{{1}, 1.0}}}, sigma, 1.0),
                        ValidationError);
        CHECK_THROWS_AS(polynomial_gadget(SparsePolynomial{1, {Monomial{{-1}, 1.0}}}, sigma, 1.0),
                        ValidationError);
    }
}

TEST_CASE("dyadic polynomial gadget stays inside A0 plus the squaring dictionary") {
    EdgeFunction sigma = EdgeFunction::polynomial({0.0, 1.0, 0.0, 1.0});
    GadgetReport sq = square_gadget(sigma, 1.0);

    SparsePolynomial p{2, {Monomial{{1, 1}, 0.75}, Monomial{{2, 0}, -0.5}, Monomial{{0, 0}, 1.25}}};
    PolynomialGadgetOptions opts;
    opts.dyadic = true;
    GadgetReport g = polynomial_gadget(p, sigma, 1.0, opts);

    AffineDictionary allowed = a0_family();
    for (const auto& entry : sq.dictionary) allowed.insert(entry);
    CHECK(dictionary_subset(g.dictionary, allowed));

    Sampler s(50);
    for (int i = 0; i < 200; ++i) {
        auto x = random_point(s, 2, -1.0, 1.0);
        CHECK(std::abs(eval_kan(g.network, x)[0] - eval_sparse_polynomial(p, x)) <= 1e-9);
    }

    SUBCASE("non-dyadic coefficients are rejected") {
        SparsePolynomial bad{1, {Monomial{{1}, 1e-30}}};
        CHECK_THROWS_AS(polynomial_gadget(bad, sigma, 1.0, opts), ValidationError);
    }
}

TEST_CASE("square gadget dictionary matches the construction's edge list") {
    // sigma = t^3, h = 1: q(t) = (t+1)^3 - t^3 = 3t^2 + 3t + 1, A = 3, B = 3, C = 1.
    // shifts (1,0) and (1,1); difference weights (-1,0) and (1,0); parallel
    // padding (0,0) and (1,0); combination (1/3, 0) and (-B/3, -C/3)
    GadgetReport sq = square_gadget(EdgeFunction::polynomial({0.0, 0.0, 0.0, 1.0}), 1.0);
    const double third = 1.0 / 3.0;
    AffineDictionary expected{{1.0, 0.0}, {1.0, 1.0},  {-1.0, 0.0},
                              {0.0, 0.0}, {third, 0.0}, {-third * 3.0, -third * 1.0}};
    CHECK(sq.dictionary == expected);
}

TEST_CASE("gadget reports record dictionary, depth and width") {
    GadgetReport sq = square_gadget(EdgeFunction::polynomial({0.0, 1.0, 0.0, 1.0}), 1.0);
    CHECK(sq.depth == sq.network.depth());
    CHECK(sq.max_width == sq.network.max_width());
    CHECK(sq.dictionary == collect_affine_dictionary(sq.network));

    GadgetReport da = dyadic_affine_gadget(Dyadic(5, 2), Dyadic(-3, 1));
    CHECK(da.depth == da.network.depth());
    CHECK(da.max_width == da.network.max_width());
    CHECK(da.dictionary == collect_affine_dictionary(da.network));
}
