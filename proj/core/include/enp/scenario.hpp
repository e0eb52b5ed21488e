#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "enp/market.hpp"
#include "enp/mc.hpp"
#include "enp/scr.hpp"

namespace enp {

/// Configuration file problem: unknown key, wrong type, missing field,
/// inconsistent dimensions. The CLI maps this to exit code 2.
class scenario_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AssetConfig {
    VolKind vol_kind = VolKind::LogNormal;
    double sigma = 0.0;
    std::string driver_law = "standard_normal";
    double mu3 = 0.0;                  // shifted_lognormal
    std::vector<double> samples;       // empirical
};

struct ClaimConfig {
    bool multivariate = false;
    double sigma_l = 0.0;                           // univariate gaussian
    std::vector<std::vector<double>> covariance;    // multivariate gaussian
};

struct PhiGridConfig {
    double start = 0.0;
    double stop = 1.5;
    int count = 31;

    std::vector<double> values() const;
};

struct OptimizeConfig {
    std::vector<double> sigma_grid;
    std::vector<double> mu3_values;
    double lower = 0.3;
    double upper = 1.4;
};

struct ScrConfig {
    MismatchConvention mismatch = MismatchConvention::ExcessUnits;
    double understatement_threshold = 0.10;
    std::optional<double> phi_star;
};

struct ScenarioConfig {
    int schema_version = 1;
    double alpha = 0.005;
    std::vector<AssetConfig> assets;
    std::vector<std::vector<double>> asset_corr;  // empty: identity
    ClaimConfig claims;
    McConfig mc;
    PhiGridConfig phi_grid;
    std::vector<std::string> outputs = {"var", "es"};
    OptimizeConfig optimize;
    ScrConfig scr;
    std::string config_hash;  // FNV-1a of the raw config bytes
};

/// Parses and schema-validates a scenario; unknown keys are rejected.
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::string& path);

/// Instantiates the market model a config describes.
MarketModel build_model(const ScenarioConfig& cfg);

/// Locale-independent CSV with a metadata header line carrying the schema
/// version, seed and config hash; numbers at 12 significant digits. Output is
/// byte-identical for identical config and seed.
class CsvWriter {
public:
    CsvWriter(const std::string& kind, std::vector<std::string> columns,
              std::uint64_t seed, const std::string& config_hash);

    /// Comment lines are emitted after the metadata line, before the header.
    void comment(const std::string& line);
    void row(const std::vector<double>& values);
    std::string str() const;

private:
    std::string preamble_;
    std::string header_;
    std::string body_;
    std::size_t n_columns_;
};

std::string format_significant(double v);
std::string fnv1a_hex(const std::string& bytes);

/// Profile subcommand body: (phi, mc_value, mc_se, exp2, exp3, exp4,
/// cornish_fisher) rows for one measure. Univariate scenarios.
std::string run_profile_csv(const ScenarioConfig& cfg, Measure measure);

/// Optimize subcommand body: (sigma, mu3, phi_star_formula, phi_star_mc, gap)
/// rows over the configured grids. Univariate scenarios.
std::string run_optimize_csv(const ScenarioConfig& cfg);

/// SCR subcommand body: (phi, scr_integrated, scr_enp, scr_rp) plus a summary
/// comment block (phi_star, max ENP gap, understatement region).
std::string run_scr_csv(const ScenarioConfig& cfg);

/// Debug export of the K-term bundle over the configured grid of evaluation
/// points: aggregate density, K and its first two derivatives per component,
/// the K[L] derivatives and the hyperplane terms.
std::string run_kterms_csv(const ScenarioConfig& cfg);

/// Debug dump of surplus draws at one allocation (at most `count` rows).
std::string run_samples_csv(const ScenarioConfig& cfg, double phi,
                            std::int64_t count);

}  // namespace enp
