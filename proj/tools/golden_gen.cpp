// Writes the golden network documents used by the serialization tests: one
// document per builder, with probe inputs and recorded outputs stored in the
// metadata block. Run with the destination directory as the only argument.

#include <iostream>
#include <string>
#include <vector>

#include "kansynth/kansynth.hpp"
#include "kansynth/report_io.hpp"

using namespace kansynth;

namespace {

MlpNetwork small_mlp(int n, int units, const EdgeFunction& act, std::uint64_t seed) {
    Sampler sampler(seed);
    MlpNetwork mlp;
    mlp.n = n;
    mlp.activation = act;
    for (int k = 0; k < units; ++k) {
        MlpUnit u;
        for (int j = 0; j < n; ++j) u.w.push_back(sampler.uniform(-2.0, 2.0));
        u.b = sampler.uniform(-1.0, 1.0);
        u.c = sampler.uniform(-1.5, 1.5);
        mlp.units.push_back(std::move(u));
    }
    return mlp;
}

std::vector<std::vector<double>> probe_points(int n, std::uint64_t seed, int count = 8) {
    Sampler sampler(seed);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < count; ++i) {
        std::vector<double> x;
        for (int j = 0; j < n; ++j) x.push_back(sampler.uniform(-3.0, 3.0));
        pts.push_back(std::move(x));
    }
    return pts;
}

void write_golden(const std::string& dir, const std::string& name, const KanNetwork& net,
                  nlohmann::json meta, std::uint64_t probe_seed) {
    auto points = probe_points(net.input_width(), probe_seed);
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& x : points)
        probes.push_back(nlohmann::json{{"x", x}, {"y", eval_kan(net, x)}});
    meta["probes"] = std::move(probes);
    save_network_file(dir + "/" + name + ".json", net, std::move(meta));
    std::cout << "wrote " << name << ".json\n";
}

} // namespace

int main(int argc, char** argv) {
    std::string dir = argc > 1 ? argv[1] : "tests/golden";

    {
        MlpNetwork mlp = small_mlp(3, 4, EdgeFunction::named("silu"), 101);
        write_golden(dir, "mlp_shallow_silu", mlp_to_kan_shallow(mlp),
                     {{"builder", "mlp_shallow"}}, 1001);
        write_golden(dir, "mlp_shallow_scaled", mlp_to_kan_shallow(mlp, OutputScaling::scaled_edge),
                     {{"builder", "mlp_shallow(scaled_edge)"}}, 1002);
        write_golden(dir, "mlp_two_hidden_tanh",
                     mlp_to_kan_two_hidden(small_mlp(2, 5, EdgeFunction::named("tanh"), 102)),
                     {{"builder", "mlp_two_hidden"}}, 1003);
    }
    {
        GadgetReport g = dyadic_affine_gadget(Dyadic(-5, 3), Dyadic(7, 2));
        write_golden(dir, "dyadic_affine", g.network, {{"builder", "dyadic_affine"}}, 1004);
    }
    {
        MlpNetwork mlp;
        mlp.n = 2;
        mlp.activation = EdgeFunction::named("tanh");
        mlp.units = {MlpUnit{{0.5, -0.75}, 0.25, 1.5}, MlpUnit{{1.0, 0.125}, -0.5, -0.375}};
        GadgetReport g = dyadic_mlp_gadget(mlp);
        write_golden(dir, "dyadic_mlp", g.network, {{"builder", "dyadic_mlp"}}, 1005);
    }
    {
        EdgeFunction cubic = EdgeFunction::polynomial({0.0, 1.0, 0.0, 1.0}); // t^3 + t
        FdQuadratic fdq = fd_quadratic_gadget(cubic, 1.0);
        write_golden(dir, "fd_quadratic", fdq.gadget.network,
                     {{"builder", "fd_quadratic"}, {"A", fdq.A}, {"B", fdq.B}, {"C", fdq.C}}, 1006);

        EdgeFunction quintic = EdgeFunction::polynomial({4.0, -1.0, 0.0, 0.0, 0.0, 2.0}); // 2t^5 - t + 4
        write_golden(dir, "square", square_gadget(quintic, 0.5).network, {{"builder", "square"}}, 1007);
        write_golden(dir, "multiply", multiply_gadget(square_gadget(cubic, 1.0)),
                     {{"builder", "multiply"}}, 1008);
    }
    {
        SparsePolynomial p;
        p.n = 2;
        p.terms = {Monomial{{2, 1}, 1.0}, Monomial{{1, 0}, -3.0}, Monomial{{0, 0}, 0.5}};
        GadgetReport g = polynomial_gadget(p, EdgeFunction::polynomial({0.0, 0.0, 1.0}), 1.0);
        write_golden(dir, "polynomial", g.network, {{"builder", "polynomial"}}, 1009);
    }
    {
        PipelineConfig config;
        config.target = make_target("gaussian", {-1.0}, {1.0}, 41);
        config.sigma = EdgeFunction::named("silu");
        config.num_units = 4;
        config.seed = 7;
        config.mode = PipelineMode::spline_edges;
        config.spline_degree = 3;
        config.spline_interior_knots = 4;
        FitReport report = approximate_pipeline(config);
        write_golden(dir, "spline_edges", report.kan, {{"builder", "approx:spline_edges"}}, 1010);
    }
    return 0;
}
