// hcbands: subwavelength band structures of the bubbly honeycomb crystal.
//
// Subcommands: bands (dispersion along a k-path, CSV + gnuplot script),
// dirac (cone diagnostics at the zone corner, JSON), capacitance (matrix
// entries and leading-order bands along a k-path, CSV), probe-green (point
// evaluation of the quasi-periodic Green's function), selftest (invariant
// suite). Configuration precedence, strongest last: defaults, the
// HCBANDS_OUTPUT_DIR environment variable, --config file, flags.
//
// Exit codes: 0 success, 1 selftest failure, 2 configuration error,
// 3 numerical failure.

#include <hcb/bands.hpp>
#include <hcb/capacitance.hpp>
#include <hcb/greens.hpp>
#include <hcb/lattice.hpp>
#include <hcb/operators.hpp>
#include <hcb/runconfig.hpp>
#include <hcb/selfcheck.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace {

constexpr int kExitSelftest = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void warn(hcb::Vec2 alpha, const std::string& message) {
    std::fprintf(stderr, "WARN alpha=(%.6g, %.6g): %s\n", alpha.x, alpha.y, message.c_str());
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

/// Node list: comma-separated G | K | M symbols or x:y coordinate pairs.
std::vector<hcb::Vec2> parse_path_nodes(const hcb::LatticeGeometry& g, const std::string& spec) {
    std::vector<hcb::Vec2> nodes;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto a = tok.find_first_not_of(" \t");
        const auto b = tok.find_last_not_of(" \t");
        tok = a == std::string::npos ? std::string() : tok.substr(a, b - a + 1);
        if (tok == "G") {
            nodes.push_back(g.gammaPoint);
        } else if (tok == "K") {
            nodes.push_back(g.kPoint);
        } else if (tok == "M") {
            nodes.push_back(g.mPoint);
        } else if (tok.find(':') != std::string::npos) {
            const auto colon = tok.find(':');
            std::size_t ux = 0, uy = 0;
            double x = 0.0, y = 0.0;
            const std::string sx = tok.substr(0, colon), sy = tok.substr(colon + 1);
            try {
                x = std::stod(sx, &ux);
                y = std::stod(sy, &uy);
            } catch (const std::exception&) {
                throw std::invalid_argument("path: bad coordinate pair '" + tok + "'");
            }
            if (ux != sx.size() || uy != sy.size())
                throw std::invalid_argument("path: bad coordinate pair '" + tok + "'");
            nodes.push_back({x, y});
        } else {
            throw std::invalid_argument("path: unknown node '" + tok +
                                        "' (valid symbols: G, K, M; coordinates as x:y)");
        }
    }
    if (nodes.size() < 2) throw std::invalid_argument("path: need at least two nodes");
    return nodes;
}

int cmd_bands(const hcb::RunConfig& rc, const std::string& pathSpec, double omegaMax) {
    const hcb::ResolvedRun run = hcb::resolve(rc);
    const auto nodes = parse_path_nodes(run.geometry, pathSpec);
    const auto path = hcb::path_through(nodes, rc.pointsPerSegment);
    const auto sweep =
        hcb::band_sweep(run.geometry, run.crystal, run.trunc, path, omegaMax, rc.nScan);

    // With the automatic window only the resonant pair is reported; an
    // explicit --omega-max opens the diagram up to every root found below it.
    const std::size_t bandCap = omegaMax == 0.0 ? 2 : sweep.size() * 100;

    struct Row {
        double omega, sigma;
        int mult;
    };
    std::ostringstream csv;
    csv << "arclength,alpha_x,alpha_y,band_index,omega,sigma_min,multiplicity\n";
    bool degraded = false;
    std::size_t maxBand = 0;
    for (const auto& p : sweep) {
        if (!p.note.empty()) warn(p.alpha.value, p.note);
        std::vector<Row> rows;
        // The constant Bloch mode at the zone center sits at omega = 0,
        // outside the (0, omegaMax] scan; reinstate it so the acoustic curve
        // reaches the origin.
        if (hcb::norm(p.alpha.value) == 0.0) rows.push_back({0.0, 0.0, 1});
        for (std::size_t i = 0; i < p.frequencies.size(); ++i)
            for (int j = 0; j < std::max(1, p.multiplicityFlags[i]); ++j)
                rows.push_back({p.frequencies[i], p.sigmaMinAtRoots[i], p.multiplicityFlags[i]});
        if (rows.empty() || rows.size() < std::min<std::size_t>(bandCap, 2)) {
            degraded = true;
            if (p.note.empty()) warn(p.alpha.value, "fewer bands than expected");
        }
        for (std::size_t b = 0; b < rows.size() && b < bandCap; ++b) {
            maxBand = std::max(maxBand, b + 1);
            csv << g17(p.arclength) << ',' << g17(p.alpha.value.x) << ','
                << g17(p.alpha.value.y) << ',' << b + 1 << ',' << g17(rows[b].omega) << ','
                << g17(rows[b].sigma) << ',' << rows[b].mult << '\n';
        }
    }

    open_output(run.outputDir, "bands.csv") << csv.str();

    std::ostringstream gp;
    gp << "# band diagram along " << pathSpec << "\n"
       << "set datafile separator ','\n"
       << "set key off\n"
       << "set xlabel 'arclength along " << pathSpec << "'\n"
       << "set ylabel 'omega'\n"
       << "set grid\n"
       << "plot ";
    for (std::size_t b = 1; b <= std::max<std::size_t>(maxBand, 1); ++b) {
        if (b > 1) gp << ", \\\n     ";
        gp << "'bands.csv' every ::1 using 1:($4==" << b << "?$5:1/0) with points pt 7 ps 0.4";
    }
    gp << '\n';
    open_output(run.outputDir, "bands.gp") << gp.str();

    return degraded ? kExitNumerical : 0;
}

int cmd_dirac(const hcb::RunConfig& rc) {
    const hcb::ResolvedRun run = hcb::resolve(rc);
    const hcb::DiracData asym = hcb::dirac_data(run.geometry, run.crystal, run.trunc);
    const hcb::ConeFit fit =
        hcb::cone_fit(run.geometry, run.crystal, run.trunc, run.coneWindow);

    // The leading-order slope carries an O(delta) correction, so the packed
    // crystal gets the looser bound.
    const double slopeTol = rc.radius < 0.1 ? 0.05 : 0.15;
    const double slopeGap = std::abs(fit.lambdaFit - asym.lambda) / asym.lambda;
    const double degeneracyGap = fit.cornerGap;
    const bool pass = degeneracyGap / fit.omegaStarFit < 1e-6 && slopeGap < slopeTol;

    std::ostringstream js;
    js << "{\n"
       << "  \"omega_star_asymptotic\": " << g17(asym.omegaStar) << ",\n"
       << "  \"omega_star_fit\": " << g17(fit.omegaStarFit) << ",\n"
       << "  \"lambda_asymptotic\": " << g17(asym.lambda) << ",\n"
       << "  \"lambda_fit\": " << g17(fit.lambdaFit) << ",\n"
       << "  \"c_abs\": " << g17(std::abs(asym.gradient.c)) << ",\n"
       << "  \"linear_residual\": " << g17(fit.linearResidual) << ",\n"
       << "  \"degeneracy_gap\": " << g17(degeneracyGap) << ",\n"
       << "  \"slope_gap\": " << g17(slopeGap) << ",\n"
       << "  \"slope_tolerance\": " << g17(slopeTol) << ",\n"
       << "  \"relaxed_tolerance\": " << (rc.radius < 0.1 ? "false" : "true") << "\n"
       << "}\n";

    std::cout << js.str();
    open_output(run.outputDir, "dirac.json") << js.str();
    return pass ? 0 : kExitNumerical;
}

int cmd_capacitance(const hcb::RunConfig& rc, const std::string& pathSpec) {
    const hcb::ResolvedRun run = hcb::resolve(rc);
    const auto nodes = parse_path_nodes(run.geometry, pathSpec);
    std::vector<hcb::BlochVector> blochNodes;
    for (const auto n : nodes) blochNodes.push_back(hcb::BlochVector{n});
    // k_path counts endpoints per segment, path_through counts steps; +1
    // keeps both commands at the same sampling density.
    const auto pts =
        hcb::k_path(run.geometry, blochNodes, rc.pointsPerSegment + 1, run.gammaOffset);

    struct Row {
        hcb::Vec2 alpha;
        double c11 = 0.0;
        std::complex<double> c12;
        bool ok = false;
        std::string note;
    };
    std::vector<Row> rows(pts.size());
    hcb::parallel_for(pts.size(), [&](std::size_t i) {
        rows[i].alpha = pts[i].alpha.value;
        try {
            const Eigen::Matrix2cd c =
                hcb::capacitance(run.geometry, run.crystal, run.trunc, pts[i].alpha);
            rows[i].c11 = c(0, 0).real();
            rows[i].c12 = c(0, 1);
            rows[i].ok = true;
        } catch (const std::exception& e) {
            rows[i].note = e.what();
        }
    });

    std::ostringstream csv;
    csv << "alpha_x,alpha_y,c11,re_c12,im_c12,lambda1,lambda2,omega1_asym,omega2_asym\n";
    bool degraded = false;
    const double scale =
        run.crystal.delta / (std::numbers::pi * run.crystal.radius * run.crystal.radius);
    for (const auto& r : rows) {
        if (!r.ok) {
            warn(r.alpha, r.note);
            degraded = true;
            continue;
        }
        const double off = std::abs(r.c12);
        double w1 = run.crystal.vb * std::sqrt(scale * (r.c11 - off));
        double w2 = run.crystal.vb * std::sqrt(scale * (r.c11 + off));
        if (w1 > w2) std::swap(w1, w2);
        csv << g17(r.alpha.x) << ',' << g17(r.alpha.y) << ',' << g17(r.c11) << ','
            << g17(r.c12.real()) << ',' << g17(r.c12.imag()) << ',' << g17(r.c11 - off) << ','
            << g17(r.c11 + off) << ',' << g17(w1) << ',' << g17(w2) << '\n';
    }

    open_output(run.outputDir, "capacitance.csv") << csv.str();
    return degraded ? kExitNumerical : 0;
}

int cmd_probe_green(const hcb::RunConfig& rc, double ax, double ay, double k, double px,
                    double py) {
    const hcb::ResolvedRun run = hcb::resolve(rc);
    const hcb::BlochVector alpha{{ax, ay}};
    const hcb::Vec2 x{px, py};

    hcb::EwaldParams base;
    base.targetTol = std::clamp(rc.greensTol, 1e-14, 1e-6);
    hcb::EwaldParams wide = base;
    wide.eta = 1.4 * std::sqrt(std::numbers::pi) / rc.latticeConstant;

    const auto ev = hcb::make_evaluator(run.geometry, alpha, k, base);
    const auto ew = hcb::make_evaluator(run.geometry, alpha, k, wide);
    const std::complex<double> value = ev.green(x);
    const double residual = std::abs(value - ew.green(x)) / (1.0 + std::abs(value));

    std::printf("G(alpha=(%.17g, %.17g), k=%.17g) at x=(%.17g, %.17g)\n", ax, ay, k, px, py);
    std::printf("value = %.17g %+.17gi\n", value.real(), value.imag());
    std::printf("eta-independence residual = %.3e\n", residual);
    return 0;
}

int cmd_selftest(const hcb::RunConfig& rc) {
    const hcb::ResolvedRun run = hcb::resolve(rc);
    const auto results = hcb::run_selfchecks(run.geometry, run.crystal, run.trunc);
    bool allPass = true;
    for (const auto& r : results) {
        std::printf("%s %-26s residual %11.3e  threshold %11.3e\n", r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.residual, r.threshold);
        allPass = allPass && r.pass;
    }
    return allPass ? 0 : kExitSelftest;
}

} // namespace

int main(int argc, char** argv) {
    hcb::RunConfig rc;
    if (const char* env = std::getenv("HCBANDS_OUTPUT_DIR"); env && *env) rc.outputPath = env;

    // The config file sits between the environment and the flags in
    // precedence, so it is applied before CLI11 parses argv.
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string_view arg(argv[i]);
            if (arg == "--config" && i + 1 < argc)
                hcb::apply_config_file(rc, argv[i + 1]);
            else if (arg.starts_with("--config="))
                hcb::apply_config_file(rc, std::string(arg.substr(9)));
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    CLI::App app{"Subwavelength band structures of the bubbly honeycomb crystal"};
    app.require_subcommand(1);
    std::string configPath;
    app.add_option("--config", configPath, "flat key = value config file (flags override it)");
    app.add_option("--radius", rc.radius, "bubble radius");
    app.add_option("--delta", rc.delta, "density contrast");
    app.add_option("--v", rc.v, "background wave speed");
    app.add_option("--vb", rc.vb, "bubble wave speed");
    app.add_option("--lattice-constant", rc.latticeConstant, "lattice constant");
    app.add_option("--multipole-order", rc.multipoleOrder, "Fourier truncation order (0: auto)");
    app.add_option("--quadrature-points", rc.quadraturePoints, "boundary quadrature points (0: auto)");
    app.add_option("--n-scan", rc.nScan, "frequency grid resolution of the root scan");
    app.add_option("--points-per-segment", rc.pointsPerSegment, "path sampling density");
    app.add_option("--greens-tol", rc.greensTol, "lattice-sum truncation tolerance");
    app.add_option("--gamma-offset", rc.gammaOffset, "zone-center exclusion radius (0: auto)");
    app.add_option("--cone-window", rc.coneWindow, "cone fit radius around the corner (0: auto)");
    app.add_option("--output-path", rc.outputPath, "output directory");

    auto* sBands = app.add_subcommand("bands", "band diagram along a k-path");
    std::string bandsPath = "M,G,K,M";
    double omegaMax = 0.0;
    sBands->add_option("--path", bandsPath, "node list, e.g. M,G,K,M or 0:0,1.0472:0.6046");
    sBands->add_option("--omega-max", omegaMax, "scan ceiling (0: resonant pair only)");
    sBands->fallthrough();

    auto* sDirac = app.add_subcommand("dirac", "Dirac cone diagnostics at the zone corner");
    sDirac->fallthrough();

    auto* sCap = app.add_subcommand("capacitance", "capacitance entries along a k-path");
    std::string capPath = "M,G,K,M";
    sCap->add_option("--path", capPath, "node list, e.g. M,G,K,M");
    sCap->fallthrough();

    auto* sProbe = app.add_subcommand("probe-green", "evaluate the lattice Green's function");
    double ax = 0.7, ay = 0.31, k = 0.5, px = 0.3, py = 0.2;
    sProbe->add_option("--alpha-x", ax, "quasi-momentum x");
    sProbe->add_option("--alpha-y", ay, "quasi-momentum y");
    sProbe->add_option("--k", k, "wavenumber");
    sProbe->add_option("--x", px, "evaluation point x");
    sProbe->add_option("--y", py, "evaluation point y");
    sProbe->fallthrough();

    auto* sSelf = app.add_subcommand("selftest", "operator and lattice-sum invariant suite");
    sSelf->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sBands->parsed()) return cmd_bands(rc, bandsPath, omegaMax);
        if (sDirac->parsed()) return cmd_dirac(rc);
        if (sCap->parsed()) return cmd_capacitance(rc, capPath);
        if (sProbe->parsed()) return cmd_probe_green(rc, ax, ay, k, px, py);
        if (sSelf->parsed()) return cmd_selftest(rc);
    } catch (const hcb::ResonanceError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}
