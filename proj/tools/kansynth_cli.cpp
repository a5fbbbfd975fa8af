// Command-line surface: synthesize networks from the constructive builders,
// evaluate and verify them against oracles, run approximation pipelines, and
// audit affine dictionaries.
//
// Exit codes: 0 success, 2 validation failure, 3 tolerance exceeded,
// 4 I/O or parse error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kansynth/kansynth.hpp"
#include "kansynth/report_io.hpp"

namespace {

using namespace kansynth;

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParseError(what + ": cannot parse number '" + item + "'");
        }
    }
    if (out.empty()) throw ParseError(what + ": empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    for (double v : parse_double_list(text, what)) {
        if (v != static_cast<double>(static_cast<int>(v)))
            throw ParseError(what + ": expected integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

// "coeff:e1,e2;coeff:e1,e2" -> sparse polynomial terms
SparsePolynomial parse_monomials(const std::string& text) {
    SparsePolynomial poly;
    std::stringstream ss(text);
    std::string term;
    while (std::getline(ss, term, ';')) {
        auto colon = term.find(':');
        if (colon == std::string::npos)
            throw ParseError("monomials: term '" + term + "' lacks 'coeff:exponents'");
        Monomial m;
        try {
            m.coeff = std::stod(term.substr(0, colon));
        } catch (const std::exception&) {
            throw ParseError("monomials: bad coefficient in '" + term + "'");
        }
        m.exponents = parse_int_list(term.substr(colon + 1), "monomials");
        poly.terms.push_back(std::move(m));
    }
    if (poly.terms.empty()) throw ParseError("monomials: empty list");
    poly.n = static_cast<int>(poly.terms.front().exponents.size());
    return poly;
}

nlohmann::json dictionary_to_json(const AffineDictionary& dict) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [a, b] : dict) arr.push_back(nlohmann::json::array({a, b}));
    return arr;
}

EdgeFunction sigma_from_flags(const std::string& name, const std::string& coeffs) {
    if (!coeffs.empty()) return EdgeFunction::polynomial(parse_double_list(coeffs, "sigma coefficients"));
    if (name.empty()) throw ParseError("need --sigma or --sigma-coeffs");
    return EdgeFunction::named(name);
}

double default_tolerance() {
    if (const char* env = std::getenv("KANSYNTH_TOLERANCE")) {
        try {
            return std::stod(env);
        } catch (const std::exception&) {
            throw ParseError("KANSYNTH_TOLERANCE: cannot parse '" + std::string(env) + "'");
        }
    }
    return 1e-9;
}

int run_synth(const std::string& builder, const std::string& out_path, std::int64_t q_num, int q_exp,
              std::int64_t b_num, int b_exp, const std::string& sigma_coeffs, double h,
              const std::string& monomials, bool dyadic, bool a0_scaffold, const std::string& mlp_path,
              bool scaled_edge, int fanout_bound, int naive_limit) {
    nlohmann::json meta{{"builder", builder}};
    std::optional<KanNetwork> net;

    auto attach_report = [&meta](const GadgetReport& report) {
        meta["dictionary"] = dictionary_to_json(report.dictionary);
        meta["depth"] = report.depth;
        meta["max_width"] = report.max_width;
    };

    GadgetOptions gopts;
    gopts.fanout_bound = fanout_bound;
    gopts.naive_fanout_limit = naive_limit;

    if (builder == "dyadic_affine") {
        GadgetReport report = dyadic_affine_gadget(Dyadic(q_num, q_exp), Dyadic(b_num, b_exp), gopts);
        meta["q"] = Dyadic(q_num, q_exp).str();
        meta["b"] = Dyadic(b_num, b_exp).str();
        attach_report(report);
        net = std::move(report.network);
    } else if (builder == "fd_quadratic") {
        FdQuadratic fdq = fd_quadratic_gadget(
            EdgeFunction::polynomial(parse_double_list(sigma_coeffs, "sigma coefficients")), h);
        meta["A"] = fdq.A;
        meta["B"] = fdq.B;
        meta["C"] = fdq.C;
        meta["h"] = fdq.h;
        meta["weights"] = fdq.weights;
        attach_report(fdq.gadget);
        net = std::move(fdq.gadget.network);
    } else if (builder == "square") {
        GadgetReport report = square_gadget(
            EdgeFunction::polynomial(parse_double_list(sigma_coeffs, "sigma coefficients")), h);
        attach_report(report);
        net = std::move(report.network);
    } else if (builder == "multiply") {
        GadgetReport sq = square_gadget(
            EdgeFunction::polynomial(parse_double_list(sigma_coeffs, "sigma coefficients")), h);
        net = multiply_gadget(sq, a0_scaffold);
        meta["dictionary"] = dictionary_to_json(collect_affine_dictionary(*net));
    } else if (builder == "polynomial") {
        PolynomialGadgetOptions popts;
        popts.dyadic = dyadic;
        popts.gadget = gopts;
        GadgetReport report = polynomial_gadget(
            parse_monomials(monomials),
            EdgeFunction::polynomial(parse_double_list(sigma_coeffs, "sigma coefficients")), h, popts);
        attach_report(report);
        net = std::move(report.network);
    } else if (builder == "mlp_shallow") {
        MlpNetwork mlp = load_mlp_file(mlp_path);
        net = mlp_to_kan_shallow(mlp, scaled_edge ? OutputScaling::scaled_edge : OutputScaling::affine_layer);
    } else if (builder == "mlp_two_hidden") {
        net = mlp_to_kan_two_hidden(load_mlp_file(mlp_path));
    } else if (builder == "dyadic_mlp") {
        GadgetReport report = dyadic_mlp_gadget(load_mlp_file(mlp_path), gopts);
        attach_report(report);
        net = std::move(report.network);
    } else {
        throw ValidationError("unknown builder '" + builder + "'");
    }

    save_network_file(out_path, *net, std::move(meta));
    std::cout << "wrote " << out_path << " (depth " << net->depth() << ", max width "
              << net->max_width() << ")\n";
    return 0;
}

int run_eval(const std::string& net_path, const std::vector<std::string>& point_flags,
             const std::string& points_path, const std::string& out_path) {
    DecodedNetwork doc = load_network_file(net_path);
    std::vector<std::vector<double>> points;
    for (const auto& p : point_flags) points.push_back(parse_double_list(p, "--point"));
    if (!points_path.empty()) {
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(read_file(points_path));
        } catch (const nlohmann::json::exception& err) {
            throw ParseError(std::string("points file: ") + err.what());
        }
        if (!arr.is_array()) throw ParseError("points file: expected an array of points");
        for (std::size_t i = 0; i < arr.size(); ++i)
            points.push_back(detail::finite_array(arr[i], "points[" + std::to_string(i) + "]"));
    }
    if (points.empty()) throw ValidationError("eval: no points given (use --point or --points)");

    nlohmann::json results = nlohmann::json::array();
    for (const auto& x : points) results.push_back(eval_kan(doc.network, x));
    std::string text = results.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_file_atomic(out_path, text);
    return 0;
}

int run_verify(const std::string& net_path, const std::string& oracle, const std::string& coeffs,
               const std::string& mlp_path, std::string lo_text, std::string hi_text, int grid,
               std::optional<double> tolerance_flag) {
    DecodedNetwork doc = load_network_file(net_path);
    const KanNetwork& net = doc.network;
    const int n = net.input_width();

    std::function<double(const std::vector<double>&)> f;
    if (oracle == "square") {
        if (n != 1) throw ValidationError("verify: square oracle needs a scalar-input network");
        f = [](const std::vector<double>& x) { return x[0] * x[0]; };
    } else if (oracle == "product") {
        if (n != 2) throw ValidationError("verify: product oracle needs a 2-input network");
        f = [](const std::vector<double>& x) { return x[0] * x[1]; };
    } else if (oracle == "poly") {
        std::vector<double> c = parse_double_list(coeffs, "--coeffs");
        if (n != 1) throw ValidationError("verify: poly oracle needs a scalar-input network");
        f = [c](const std::vector<double>& x) {
            double acc = c.back();
            for (std::size_t i = c.size() - 1; i-- > 0;) acc = acc * x[0] + c[i];
            return acc;
        };
    } else if (oracle == "mlp") {
        MlpNetwork mlp = load_mlp_file(mlp_path);
        if (mlp.n != n) throw ValidationError("verify: mlp oracle dimension mismatch");
        f = [mlp](const std::vector<double>& x) { return eval_mlp(mlp, x); };
    } else {
        throw ValidationError("verify: unknown oracle '" + oracle + "'");
    }

    TargetSpec spec;
    spec.dimension = n;
    spec.lower = lo_text.empty() ? std::vector<double>(static_cast<std::size_t>(n), -1.0)
                                 : parse_double_list(lo_text, "--lo");
    spec.upper = hi_text.empty() ? std::vector<double>(static_cast<std::size_t>(n), 1.0)
                                 : parse_double_list(hi_text, "--hi");
    spec.name = oracle;
    spec.function = f;
    spec.grid_density = grid;

    SupError err = sup_error_on_grid(spec, net);
    double tolerance = tolerance_flag ? *tolerance_flag : default_tolerance();
    std::cout << "max deviation " << err.value << " at (";
    for (std::size_t j = 0; j < err.argmax.size(); ++j)
        std::cout << (j ? ", " : "") << err.argmax[j];
    std::cout << "), tolerance " << tolerance << "\n";
    if (err.value > tolerance) {
        std::cerr << "tolerance exceeded\n";
        return 3;
    }
    return 0;
}

int run_approx(const std::string& config_path, std::string target_name, std::string lo_text,
               std::string hi_text, std::string sigma_name, std::string sigma_coeffs, int units,
               std::uint64_t seed, std::string mode_name, std::optional<int> dyadic_scale, int grid,
               int spline_degree, int spline_knots, const std::string& out_network,
               const std::string& out_report, bool flags_passed[8]) {
    nlohmann::json cfg = nlohmann::json::object();
    if (!config_path.empty()) {
        try {
            cfg = nlohmann::json::parse(read_file(config_path));
        } catch (const nlohmann::json::exception& err) {
            throw ParseError(std::string("config file: ") + err.what());
        }
    }
    auto str_from_cfg = [&cfg](const char* key, std::string& slot, bool flag_passed) {
        if (!flag_passed && cfg.contains(key) && cfg[key].is_string()) slot = cfg[key].get<std::string>();
    };
    str_from_cfg("target", target_name, flags_passed[0]);
    str_from_cfg("sigma", sigma_name, flags_passed[1]);
    str_from_cfg("mode", mode_name, flags_passed[2]);
    if (!flags_passed[3] && cfg.contains("units")) units = cfg["units"].get<int>();
    if (!flags_passed[4] && cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
    if (!flags_passed[5] && cfg.contains("grid")) grid = cfg["grid"].get<int>();
    if (!flags_passed[6] && cfg.contains("lo") && cfg["lo"].is_array()) {
        lo_text.clear();
        for (const auto& v : cfg["lo"]) lo_text += (lo_text.empty() ? "" : ",") + std::to_string(v.get<double>());
    }
    if (!flags_passed[7] && cfg.contains("hi") && cfg["hi"].is_array()) {
        hi_text.clear();
        for (const auto& v : cfg["hi"]) hi_text += (hi_text.empty() ? "" : ",") + std::to_string(v.get<double>());
    }
    if (!dyadic_scale && cfg.contains("dyadic_scale")) dyadic_scale = cfg["dyadic_scale"].get<int>();

    if (lo_text.empty() || hi_text.empty()) throw ValidationError("approx: need --lo and --hi");

    PipelineConfig config;
    config.target = make_target(target_name, parse_double_list(lo_text, "--lo"),
                                parse_double_list(hi_text, "--hi"), grid);
    config.sigma = sigma_from_flags(sigma_name, sigma_coeffs);
    config.num_units = units;
    config.seed = seed;
    config.mode = pipeline_mode_from_name(mode_name);
    config.dyadic_scale = dyadic_scale;
    config.spline_degree = spline_degree;
    config.spline_interior_knots = spline_knots;

    FitReport report = approximate_pipeline(config);

    std::cout << "sup_error " << report.sup_error;
    if (report.dyadic_sup_error) std::cout << ", dyadic sup_error " << *report.dyadic_sup_error;
    std::cout << ", kan_vs_mlp " << report.kan_vs_mlp_error << "\n";
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

    if (!out_network.empty()) {
        nlohmann::json meta{{"builder", std::string("approx:") + pipeline_mode_name(config.mode)},
                            {"target", target_name},
                            {"units", units},
                            {"seed", seed}};
        save_network_file(out_network, report.kan, std::move(meta));
    }
    if (!out_report.empty()) {
        nlohmann::json rj = fit_report_to_json(report);
        rj["mode"] = pipeline_mode_name(config.mode);
        rj["target"] = target_name;
        rj["seed"] = seed;
        write_file_atomic(out_report, rj.dump(2) + "\n");
    }
    return 0;
}

int run_audit(const std::string& net_path, const std::string& family) {
    DecodedNetwork doc = load_network_file(net_path);
    AffineDictionary dict = collect_affine_dictionary(doc.network);
    std::cout << "affine dictionary (" << dict.size() << " entries):\n";
    for (const auto& [a, b] : dict) std::cout << "  a=" << a << " b=" << b << "\n";
    if (family.empty()) return 0;
    if (family != "A0") throw ValidationError("audit: unknown family '" + family + "'");
    bool ok = true;
    for (const auto& entry : dict) {
        if (a0_family().find(entry) == a0_family().end()) {
            std::cerr << "violation: (" << entry.first << ", " << entry.second << ") not in A0\n";
            ok = false;
        }
    }
    std::cout << (ok ? "dictionary contained in A0\n" : "dictionary NOT contained in A0\n");
    return ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kolmogorov-Arnold network synthesis toolkit"};
    app.require_subcommand(1);

    int exit_code = 0;

    // synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "build a network from a named constructive builder");
    std::string builder, synth_out, sigma_coeffs, monomials, mlp_path;
    std::int64_t q_num = 0, b_num = 0;
    int q_exp = 0, b_exp = 0;
    double fd_h = 1.0;
    bool dyadic_flag = false, a0_scaffold = false, scaled_edge = false;
    int fanout_bound = 4096, naive_limit = 64;
    synth->add_option("builder", builder,
                      "dyadic_affine | fd_quadratic | square | multiply | polynomial | "
                      "mlp_shallow | mlp_two_hidden | dyadic_mlp")
        ->required();
    synth->add_option("--out", synth_out, "output network file")->required();
    synth->add_option("--q-num", q_num, "dyadic slope numerator");
    synth->add_option("--q-exp", q_exp, "dyadic slope exponent");
    synth->add_option("--b-num", b_num, "dyadic intercept numerator");
    synth->add_option("--b-exp", b_exp, "dyadic intercept exponent");
    synth->add_option("--sigma-coeffs", sigma_coeffs, "polynomial sigma, ascending coefficients");
    synth->add_option("--step", fd_h, "finite-difference step");
    synth->add_option("--monomials", monomials, "terms as coeff:e1,e2;...");
    synth->add_flag("--dyadic", dyadic_flag, "restrict scaffolding to A0");
    synth->add_flag("--a0-scaffold", a0_scaffold, "A0-only combination in multiply");
    synth->add_option("--mlp", mlp_path, "mlp description file");
    synth->add_flag("--scaled-edge", scaled_edge, "emit literal c*sigma output edges");
    synth->add_option("--fanout-bound", fanout_bound, "gadget fan-out hard bound");
    synth->add_option("--naive-limit", naive_limit, "largest numerator realized by literal copies");
    synth->callback([&] {
        exit_code = run_synth(builder, synth_out, q_num, q_exp, b_num, b_exp, sigma_coeffs, fd_h,
                              monomials, dyadic_flag, a0_scaffold, mlp_path, scaled_edge, fanout_bound,
                              naive_limit);
    });

    // eval ---------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "evaluate a network at points");
    std::string eval_net, points_path, eval_out;
    std::vector<std::string> point_flags;
    eval->add_option("network", eval_net, "network file")->required();
    eval->add_option("--point", point_flags, "comma-separated input point (repeatable)");
    eval->add_option("--points", points_path, "JSON file with an array of points");
    eval->add_option("--out", eval_out, "write results to file instead of stdout");
    eval->callback([&] { exit_code = run_eval(eval_net, point_flags, points_path, eval_out); });

    // verify -------------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "compare a network against a builtin oracle");
    std::string verify_net, oracle, verify_coeffs, verify_mlp, verify_lo, verify_hi;
    int verify_grid = 101;
    double tolerance = 0.0;
    verify->add_option("network", verify_net, "network file")->required();
    verify->add_option("--oracle", oracle, "square | product | poly | mlp")->required();
    verify->add_option("--coeffs", verify_coeffs, "oracle polynomial coefficients");
    verify->add_option("--mlp", verify_mlp, "oracle mlp file");
    verify->add_option("--lo", verify_lo, "box lower corner (comma list)");
    verify->add_option("--hi", verify_hi, "box upper corner (comma list)");
    verify->add_option("--grid", verify_grid, "grid density per axis");
    auto* tol_opt = verify->add_option("--tolerance", tolerance, "max allowed deviation");
    verify->callback([&] {
        exit_code = run_verify(verify_net, oracle, verify_coeffs, verify_mlp, verify_lo, verify_hi,
                               verify_grid,
                               tol_opt->count() ? std::optional<double>(tolerance) : std::nullopt);
    });

    // approx -------------------------------------------------------------
    auto* approx = app.add_subcommand("approx", "fit, round, compile and certify");
    std::string config_path, target_name, approx_lo, approx_hi, sigma_name = "tanh", approx_sigma_coeffs;
    std::string mode_name = "two_hidden", out_network, out_report;
    int units = 32, approx_grid = 101, spline_degree = 3, spline_knots = 8;
    std::uint64_t seed = 0;
    int dyadic_scale_val = -1;
    approx->add_option("--config", config_path, "JSON config file (flags override)");
    auto* o_target = approx->add_option("--target", target_name, "target registry name");
    auto* o_sigma = approx->add_option("--sigma", sigma_name, "named activation");
    approx->add_option("--sigma-coeffs", approx_sigma_coeffs, "polynomial activation coefficients");
    auto* o_mode = approx->add_option("--mode", mode_name, "shallow | two_hidden | dyadic_A0 | spline_edges");
    auto* o_units = approx->add_option("--units", units, "number of hidden units");
    auto* o_seed = approx->add_option("--seed", seed, "fit seed");
    auto* o_grid = approx->add_option("--grid", approx_grid, "estimation grid density");
    auto* o_lo = approx->add_option("--lo", approx_lo, "box lower corner");
    auto* o_hi = approx->add_option("--hi", approx_hi, "box upper corner");
    approx->add_option("--dyadic-scale", dyadic_scale_val, "rounding exponent r");
    approx->add_option("--spline-degree", spline_degree, "spline_edges degree");
    approx->add_option("--spline-knots", spline_knots, "spline_edges interior knots");
    approx->add_option("--out-network", out_network, "compiled network file");
    approx->add_option("--out-report", out_report, "fit report file");
    approx->callback([&] {
        bool passed[8] = {o_target->count() > 0, o_sigma->count() > 0, o_mode->count() > 0,
                          o_units->count() > 0,  o_seed->count() > 0,  o_grid->count() > 0,
                          o_lo->count() > 0,     o_hi->count() > 0};
        exit_code = run_approx(config_path, target_name, approx_lo, approx_hi, sigma_name,
                               approx_sigma_coeffs, units, seed, mode_name,
                               dyadic_scale_val >= 0 ? std::optional<int>(dyadic_scale_val) : std::nullopt,
                               approx_grid, spline_degree, spline_knots, out_network, out_report, passed);
    });

    // audit --------------------------------------------------------------
    auto* audit = app.add_subcommand("audit", "list the affine dictionary, optionally check a family");
    std::string audit_net, family;
    audit->add_option("network", audit_net, "network file")->required();
    audit->add_option("--family", family, "named family to check containment against (A0)");
    audit->callback([&] { exit_code = run_audit(audit_net, family); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const kansynth::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const kansynth::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return exit_code;
}
