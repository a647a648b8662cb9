#pragma once
// Run configuration shared by every CLI command: crystal parameters,
// discretization knobs, and output routing. Values arrive from three layers,
// strongest last: built-in defaults (the dilute crystal), a flat key = value
// config file, then command-line flags. The integer and window fields accept
// 0 as "derive from the crystal".

#include <hcb/lattice.hpp>
#include <hcb/operators.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hcb {

struct RunConfig {
    double radius = 0.02;
    double delta = 1.0 / 9000.0;
    double v = 1.0;
    double vb = 1.0;
    double latticeConstant = 2.0 * std::numbers::sqrt3;
    int multipoleOrder = 0;    // 0: pick from the bubble size
    int quadraturePoints = 0;  // 0: pick from the multipole order
    int nScan = 200;
    int pointsPerSegment = 30;
    double greensTol = 1e-11;
    double gammaOffset = 0.0;  // 0: one percent of |alpha1|
    double coneWindow = 0.0;   // 0: five percent of |K|
    std::string outputPath;    // empty: HCBANDS_OUTPUT_DIR or the working directory
};

/// Geometry and solver parameters derived from a RunConfig, with every auto
/// field resolved to its concrete value.
struct ResolvedRun {
    LatticeGeometry geometry;
    CrystalConfig crystal;
    TruncationParams trunc;
    double gammaOffset = 0.0;
    double coneWindow = 0.0;
    std::string outputDir;
};

namespace detail {

inline int pow2_at_least(int m, int floorValue) {
    int p = floorValue;
    while (p < m) p *= 2;
    return p;
}

} // namespace detail

inline ResolvedRun resolve(const RunConfig& rc) {
    if (!(rc.latticeConstant > 0.0) || !std::isfinite(rc.latticeConstant))
        throw std::invalid_argument("latticeConstant must be positive");
    if (!(rc.delta > 0.0))
        throw std::invalid_argument("delta must be positive: zero contrast carries no resonance");
    if (rc.nScan <= 0 || rc.pointsPerSegment <= 0)
        throw std::invalid_argument("nScan and pointsPerSegment must be positive");
    if (rc.multipoleOrder < 0 || rc.quadraturePoints < 0)
        throw std::invalid_argument("multipoleOrder and quadraturePoints must not be negative");
    if (rc.gammaOffset < 0.0 || rc.coneWindow < 0.0)
        throw std::invalid_argument("gammaOffset and coneWindow must not be negative");

    ResolvedRun run;
    run.geometry = build_geometry(rc.latticeConstant);
    run.crystal = CrystalConfig{rc.radius, rc.delta, rc.v, rc.vb};
    validate(run.crystal);

    run.trunc = auto_truncation(run.crystal);
    if (rc.multipoleOrder > 0) {
        run.trunc.multipoleOrder = rc.multipoleOrder;
        run.trunc.quadraturePoints =
            detail::pow2_at_least(8 * (rc.multipoleOrder + 1), 64);
    }
    if (rc.quadraturePoints > 0) run.trunc.quadraturePoints = rc.quadraturePoints;
    run.trunc.greensTol = rc.greensTol;
    validate(run.trunc);

    // Twice the static-kernel guard radius, so path points snapped onto the
    // exclusion circle stay clearly evaluable.
    run.gammaOffset = rc.gammaOffset > 0.0 ? rc.gammaOffset : 2e-2 * norm(run.geometry.alpha1);
    run.coneWindow =
        rc.coneWindow > 0.0 ? rc.coneWindow : 0.05 * norm(run.geometry.kPoint);
    run.outputDir = rc.outputPath.empty() ? std::string(".") : rc.outputPath;
    return run;
}

/// Apply one config-file entry. Unknown keys are hard errors by contract.
inline void apply_config_entry(RunConfig& rc, const std::string& key, const std::string& value) {
    const auto numeric = [&](double& slot) {
        std::size_t used = 0;
        double parsed = 0.0;
        try {
            parsed = std::stod(value, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("config: bad numeric value for '" + key + "': " + value);
        }
        if (used != value.size())
            throw std::invalid_argument("config: bad numeric value for '" + key + "': " + value);
        slot = parsed;
    };
    const auto integer = [&](int& slot) {
        double d = 0.0;
        numeric(d);
        if (d != std::floor(d) || std::abs(d) > 1e9)
            throw std::invalid_argument("config: '" + key + "' expects an integer, got " + value);
        slot = static_cast<int>(d);
    };

    if (key == "radius") numeric(rc.radius);
    else if (key == "delta") numeric(rc.delta);
    else if (key == "v") numeric(rc.v);
    else if (key == "vb") numeric(rc.vb);
    else if (key == "lattice_constant") numeric(rc.latticeConstant);
    else if (key == "multipole_order") integer(rc.multipoleOrder);
    else if (key == "quadrature_points") integer(rc.quadraturePoints);
    else if (key == "n_scan") integer(rc.nScan);
    else if (key == "points_per_segment") integer(rc.pointsPerSegment);
    else if (key == "greens_tol") numeric(rc.greensTol);
    else if (key == "gamma_offset") numeric(rc.gammaOffset);
    else if (key == "cone_window") numeric(rc.coneWindow);
    else if (key == "output_path") rc.outputPath = value;
    else
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

/// Flat `key = value` file: one entry per line, '#' starts a comment, blank
/// lines are skipped.
inline void apply_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::string line;
    int lineNo = 0;
    const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string entry = trim(line);
        if (entry.empty()) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineNo) +
                                        " is not of the form key = value");
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = trim(entry.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config: line " + std::to_string(lineNo) +
                                        " has an empty key or value");
        apply_config_entry(rc, key, value);
    }
}

} // namespace hcb
