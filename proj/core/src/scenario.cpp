#include "enp/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "enp/expansions.hpp"
#include "enp/kterms.hpp"

namespace enp {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw scenario_error("unknown key '" + it.key() + "' in " + context);
        }
    }
}

double require_number(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.contains(key) || !obj[key].is_number()) {
        throw scenario_error(std::string("missing or non-numeric '") + key +
                             "' in " + ctx);
    }
    return obj[key].get<double>();
}

std::vector<std::vector<double>> parse_matrix(const json& m, const std::string& ctx) {
    if (!m.is_array() || m.empty()) {
        throw scenario_error(ctx + " must be a non-empty array of rows");
    }
    std::vector<std::vector<double>> out;
    for (const auto& row : m) {
        if (!row.is_array()) throw scenario_error(ctx + " rows must be arrays");
        std::vector<double> r;
        for (const auto& v : row) {
            if (!v.is_number()) throw scenario_error(ctx + " entries must be numbers");
            r.push_back(v.get<double>());
        }
        out.push_back(std::move(r));
    }
    for (const auto& r : out) {
        if (r.size() != out.size()) throw scenario_error(ctx + " must be square");
    }
    return out;
}

AssetConfig parse_asset(const json& a, const std::string& ctx) {
    check_keys(a, {"vol_kind", "sigma", "driver"}, ctx);
    AssetConfig out;
    if (!a.contains("vol_kind") || !a["vol_kind"].is_string()) {
        throw scenario_error("missing 'vol_kind' in " + ctx);
    }
    const std::string kind = a["vol_kind"].get<std::string>();
    if (kind == "normal") {
        out.vol_kind = VolKind::Normal;
    } else if (kind == "lognormal") {
        out.vol_kind = VolKind::LogNormal;
    } else {
        throw scenario_error("vol_kind must be 'normal' or 'lognormal' in " + ctx);
    }
    out.sigma = require_number(a, "sigma", ctx);
    if (!a.contains("driver") || !a["driver"].is_object()) {
        throw scenario_error("missing 'driver' object in " + ctx);
    }
    const json& d = a["driver"];
    check_keys(d, {"law", "mu3", "samples"}, ctx + ".driver");
    if (!d.contains("law") || !d["law"].is_string()) {
        throw scenario_error("missing 'law' in " + ctx + ".driver");
    }
    out.driver_law = d["law"].get<std::string>();
    if (out.driver_law == "shifted_lognormal") {
        out.mu3 = require_number(d, "mu3", ctx + ".driver");
    } else if (out.driver_law == "implied_lognormal") {
        out.mu3 = implied_lognormal_skew(out.sigma);
    } else if (out.driver_law == "empirical") {
        if (!d.contains("samples") || !d["samples"].is_array()) {
            throw scenario_error("empirical driver needs 'samples' in " + ctx);
        }
        for (const auto& v : d["samples"]) out.samples.push_back(v.get<double>());
    } else if (out.driver_law != "standard_normal") {
        throw scenario_error("unknown driver law '" + out.driver_law + "' in " + ctx);
    }
    return out;
}

DriverSpec build_driver(const AssetConfig& a) {
    if (a.driver_law == "standard_normal") return DriverSpec::standard_normal();
    if (a.driver_law == "shifted_lognormal" || a.driver_law == "implied_lognormal") {
        return DriverSpec::shifted_lognormal(a.mu3);
    }
    return DriverSpec::empirical(a.samples);
}

}  // namespace

std::vector<double> PhiGridConfig::values() const {
    std::vector<double> out;
    out.reserve(count);
    if (count == 1) {
        out.push_back(start);
        return out;
    }
    for (int i = 0; i < count; ++i) {
        out.push_back(start + (stop - start) * i / (count - 1.0));
    }
    return out;
}

ScenarioConfig parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw scenario_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw scenario_error("config root must be an object");
    check_keys(root,
               {"schema_version", "alpha", "assets", "asset_corr", "claims", "mc",
                "phi_grid", "outputs", "optimize", "scr"},
               "config");

    ScenarioConfig cfg;
    cfg.config_hash = fnv1a_hex(json_text);
    if (root.contains("schema_version")) {
        cfg.schema_version = root["schema_version"].get<int>();
        if (cfg.schema_version != 1) {
            throw scenario_error("unsupported schema_version");
        }
    }
    cfg.alpha = require_number(root, "alpha", "config");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw scenario_error("alpha must be in (0,1)");
    }

    if (!root.contains("assets") || !root["assets"].is_array() ||
        root["assets"].empty()) {
        throw scenario_error("config needs a non-empty 'assets' array");
    }
    int idx = 0;
    for (const auto& a : root["assets"]) {
        cfg.assets.push_back(parse_asset(a, "assets[" + std::to_string(idx++) + "]"));
    }

    if (root.contains("asset_corr")) {
        cfg.asset_corr = parse_matrix(root["asset_corr"], "asset_corr");
        if (cfg.asset_corr.size() != cfg.assets.size()) {
            throw scenario_error("asset_corr dimension must match asset count");
        }
    }

    if (!root.contains("claims") || !root["claims"].is_object()) {
        throw scenario_error("config needs a 'claims' object");
    }
    const json& cl = root["claims"];
    check_keys(cl, {"kind", "sigma_l", "cov"}, "claims");
    if (!cl.contains("kind") || !cl["kind"].is_string()) {
        throw scenario_error("claims needs a 'kind'");
    }
    const std::string ckind = cl["kind"].get<std::string>();
    if (ckind == "gaussian") {
        cfg.claims.multivariate = false;
        cfg.claims.sigma_l = require_number(cl, "sigma_l", "claims");
    } else if (ckind == "multivariate_gaussian") {
        cfg.claims.multivariate = true;
        if (!cl.contains("cov")) throw scenario_error("claims needs 'cov'");
        cfg.claims.covariance = parse_matrix(cl["cov"], "claims.cov");
        if (cfg.claims.covariance.size() != cfg.assets.size()) {
            throw scenario_error("claims.cov dimension must match asset count");
        }
    } else {
        throw scenario_error("claims kind must be 'gaussian' or "
                             "'multivariate_gaussian'");
    }

    if (root.contains("mc")) {
        const json& mc = root["mc"];
        check_keys(mc, {"n_samples", "seed", "n_chunks", "jobs"}, "mc");
        if (mc.contains("n_samples")) cfg.mc.n_samples = mc["n_samples"].get<std::int64_t>();
        if (mc.contains("seed")) cfg.mc.seed = mc["seed"].get<std::uint64_t>();
        if (mc.contains("n_chunks")) cfg.mc.n_chunks = mc["n_chunks"].get<int>();
        if (mc.contains("jobs")) cfg.mc.jobs = mc["jobs"].get<int>();
    }
    cfg.mc.alpha = cfg.alpha;
    cfg.mc.validate();

    if (root.contains("phi_grid")) {
        const json& g = root["phi_grid"];
        check_keys(g, {"start", "stop", "count"}, "phi_grid");
        cfg.phi_grid.start = require_number(g, "start", "phi_grid");
        cfg.phi_grid.stop = require_number(g, "stop", "phi_grid");
        cfg.phi_grid.count = g.contains("count") ? g["count"].get<int>() : 31;
        if (cfg.phi_grid.count < 1 || cfg.phi_grid.stop < cfg.phi_grid.start) {
            throw scenario_error("invalid phi_grid");
        }
    }

    if (root.contains("outputs")) {
        cfg.outputs.clear();
        for (const auto& o : root["outputs"]) {
            const std::string name = o.get<std::string>();
            if (name != "var" && name != "es") {
                throw scenario_error("outputs entries must be 'var' or 'es'");
            }
            cfg.outputs.push_back(name);
        }
    }

    if (root.contains("optimize")) {
        const json& o = root["optimize"];
        check_keys(o, {"sigma_grid", "mu3_values", "lower", "upper"}, "optimize");
        if (o.contains("sigma_grid")) {
            for (const auto& v : o["sigma_grid"]) {
                cfg.optimize.sigma_grid.push_back(v.get<double>());
            }
        }
        if (o.contains("mu3_values")) {
            for (const auto& v : o["mu3_values"]) {
                cfg.optimize.mu3_values.push_back(v.get<double>());
            }
        }
        if (o.contains("lower")) cfg.optimize.lower = o["lower"].get<double>();
        if (o.contains("upper")) cfg.optimize.upper = o["upper"].get<double>();
    }

    if (root.contains("scr")) {
        const json& s = root["scr"];
        check_keys(s, {"mismatch", "understatement_threshold", "phi_star"}, "scr");
        if (s.contains("mismatch")) {
            const std::string m = s["mismatch"].get<std::string>();
            if (m == "excess_units") {
                cfg.scr.mismatch = MismatchConvention::ExcessUnits;
            } else if (m == "literal") {
                cfg.scr.mismatch = MismatchConvention::Literal;
            } else {
                throw scenario_error("scr.mismatch must be 'excess_units' or 'literal'");
            }
        }
        if (s.contains("understatement_threshold")) {
            cfg.scr.understatement_threshold =
                s["understatement_threshold"].get<double>();
        }
        if (s.contains("phi_star")) cfg.scr.phi_star = s["phi_star"].get<double>();
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw scenario_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

MarketModel build_model(const ScenarioConfig& cfg) {
    std::vector<AssetFamily> assets;
    assets.reserve(cfg.assets.size());
    for (const AssetConfig& a : cfg.assets) {
        assets.push_back(build_asset(a.vol_kind, a.sigma, build_driver(a)));
    }
    const auto n = static_cast<Eigen::Index>(assets.size());
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
    if (!cfg.asset_corr.empty()) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                corr(i, j) = cfg.asset_corr[i][j];
            }
        }
    }
    ClaimModel claims = [&] {
        if (!cfg.claims.multivariate) return ClaimModel::gaussian(cfg.claims.sigma_l);
        Eigen::MatrixXd cov(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                cov(i, j) = cfg.claims.covariance[i][j];
            }
        }
        return ClaimModel::multivariate_gaussian(std::move(cov));
    }();
    return MarketModel(std::move(assets), std::move(corr), std::move(claims));
}

std::string format_significant(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                   std::chars_format::general, 12);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

CsvWriter::CsvWriter(const std::string& kind, std::vector<std::string> columns,
                     std::uint64_t seed, const std::string& config_hash)
    : n_columns_(columns.size()) {
    preamble_ = "# enp-csv schema=1 kind=" + kind + " seed=" + std::to_string(seed) +
                " config=" + config_hash + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) header_ += ',';
        header_ += columns[i];
    }
    header_ += '\n';
}

void CsvWriter::comment(const std::string& line) { preamble_ += "# " + line + "\n"; }

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != n_columns_) {
        throw std::logic_error("CsvWriter: column count mismatch");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) body_ += ',';
        body_ += format_significant(values[i]);
    }
    body_ += '\n';
}

std::string CsvWriter::str() const { return preamble_ + header_ + body_; }

std::string run_profile_csv(const ScenarioConfig& cfg, Measure measure) {
    if (cfg.assets.size() != 1) {
        throw scenario_error("profile: univariate scenario required");
    }
    const MarketModel model = build_model(cfg);
    const VolKind kind = model.asset(0).vol_kind();
    const std::vector<double> grid = cfg.phi_grid.values();
    std::vector<Allocation> allocations;
    allocations.reserve(grid.size());
    for (double phi : grid) allocations.emplace_back(phi);
    const auto profile = risk_profile(model, allocations, cfg.mc, measure);

    CsvWriter csv(measure == Measure::VaR ? "profile_var" : "profile_es",
                  {"phi", "mc_value", "mc_se", "exp2", "exp3", "exp4",
                   "cornish_fisher"},
                  cfg.mc.seed, cfg.config_hash);
    if (auto warn = tail_sample_warning(cfg.mc)) csv.comment("warning: " + *warn);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double phi = grid[i];
        auto expand = [&](int order) {
            return measure == Measure::VaR
                       ? var_expand_1d(model, phi, cfg.alpha, order, kind).value
                       : es_expand_1d(model, phi, cfg.alpha, order, kind).value;
        };
        csv.row({phi, profile[i].value, profile[i].std_error, expand(2), expand(3),
                 expand(4), cornish_fisher_var(model, phi, cfg.alpha)});
    }
    return csv.str();
}

std::string run_optimize_csv(const ScenarioConfig& cfg) {
    if (cfg.assets.size() != 1) {
        throw scenario_error("optimize: univariate scenario required");
    }
    if (cfg.optimize.sigma_grid.empty() || cfg.optimize.mu3_values.empty()) {
        throw scenario_error("optimize: sigma_grid and mu3_values required");
    }
    CsvWriter csv("optimize",
                  {"sigma", "mu3", "phi_star_formula", "phi_star_mc", "gap"},
                  cfg.mc.seed, cfg.config_hash);
    for (double mu3 : cfg.optimize.mu3_values) {
        for (double sigma : cfg.optimize.sigma_grid) {
            ScenarioConfig point = cfg;
            point.assets[0].sigma = sigma;
            point.assets[0].driver_law =
                (mu3 == 0.0) ? "standard_normal" : "shifted_lognormal";
            point.assets[0].mu3 = mu3;
            const MarketModel model = build_model(point);
            const double formula =
                phi_star_var3_1d(model, cfg.alpha, sigma).phi_star;
            const McMinimum mc = minimize_risk_mc(model, {cfg.optimize.lower},
                                                  {cfg.optimize.upper}, cfg.mc,
                                                  Measure::VaR);
            csv.row({sigma, mu3, formula, mc.phi_star[0],
                     formula - mc.phi_star[0]});
        }
    }
    return csv.str();
}

std::string run_kterms_csv(const ScenarioConfig& cfg) {
    const MarketModel model = build_model(cfg);
    const int n = model.n();
    std::vector<std::string> columns = {"y", "f_agg", "f_agg_d1", "kl_d1", "kl_d2",
                                        "h2"};
    for (int i = 0; i < n; ++i) {
        const std::string tag = std::to_string(i);
        columns.push_back("k" + tag);
        columns.push_back("k" + tag + "_d1");
        columns.push_back("k" + tag + "_d2");
    }
    for (int i = 0; i + 1 < n; ++i) columns.push_back("h" + std::to_string(i));

    CsvWriter csv("kterms", columns, cfg.mc.seed, cfg.config_hash);
    for (double y : cfg.phi_grid.values()) {
        const KTermBundle b = k_bundle(model.claims(), model.asset_covariance(), y);
        std::vector<double> row = {y,      b.f_agg, b.f_agg_d1,
                                   b.kL_d1, b.kL_d2, b.h2};
        for (int i = 0; i < n; ++i) {
            row.push_back(b.kvec(i));
            row.push_back(b.kvec_d1(i));
            row.push_back(b.kvec_d2(i));
        }
        for (int i = 0; i + 1 < n; ++i) row.push_back(b.h(i));
        csv.row(row);
    }
    return csv.str();
}

std::string run_samples_csv(const ScenarioConfig& cfg, double phi,
                            std::int64_t count) {
    if (count < 1) throw scenario_error("samples: count must be >= 1");
    const MarketModel model = build_model(cfg);
    const std::vector<double> s = simulate_surplus(
        model, Allocation(std::vector<double>(model.n(), phi)), cfg.mc);
    CsvWriter csv("samples", {"index", "surplus"}, cfg.mc.seed, cfg.config_hash);
    csv.comment("phi=" + format_significant(phi));
    const auto limit = std::min<std::int64_t>(count, cfg.mc.n_samples);
    for (std::int64_t i = 0; i < limit; ++i) {
        csv.row({static_cast<double>(i), s[static_cast<std::size_t>(i)]});
    }
    return csv.str();
}

std::string run_scr_csv(const ScenarioConfig& cfg) {
    if (cfg.assets.size() != 1) {
        throw scenario_error("scr: univariate scenario required");
    }
    const MarketModel model = build_model(cfg);
    ScrOptions options;
    options.mismatch = cfg.scr.mismatch;
    options.understatement_threshold = cfg.scr.understatement_threshold;
    options.phi_star = cfg.scr.phi_star;
    const ScrReport rep =
        scr_comparison_report(model, cfg.phi_grid.values(), cfg.mc, options);

    CsvWriter csv("scr", {"phi", "scr_integrated", "scr_enp", "scr_rp"},
                  cfg.mc.seed, cfg.config_hash);
    csv.comment("summary: phi_star=" + format_significant(rep.phi_star) +
                " scr_l=" + format_significant(rep.scr_l) +
                " max_enp_gap=" + format_significant(rep.max_enp_gap));
    if (rep.rp_understatement_phis.empty()) {
        csv.comment("summary: rp_understatement_region=none");
    } else {
        csv.comment("summary: rp_understatement_region=[" +
                    format_significant(rep.rp_understatement_phis.front()) + "," +
                    format_significant(rep.rp_understatement_phis.back()) + "]");
    }
    for (std::size_t i = 0; i < rep.phi_grid.size(); ++i) {
        csv.row({rep.phi_grid[i], rep.scr_integrated[i], rep.scr_modular_enp[i],
                 rep.scr_modular_rp[i]});
    }
    return csv.str();
}

}  // namespace enp
