#include "enp/scr.hpp"

#include <cmath>
#include <stdexcept>

#include "enp/rng.hpp"

namespace enp {

namespace {

void require_univariate(const MarketModel& model, const char* who) {
    if (model.n() != 1) {
        throw std::domain_error(std::string(who) + ": univariate model required");
    }
}

double default_phi_star(const MarketModel& model, double alpha) {
    // The ENP uses the VaR minimizer from the expansion unless the caller
    // supplies one; Sigma-free, so it only needs the claim law.
    return phi_star_var2_multi(model, alpha).total;
}

double mismatch_var(const SurplusCache& cache, double phi, double ref,
                    MismatchConvention convention, double alpha) {
    const double units = phi - ref;
    if (units == 0.0) {
        // Exactly hedged: the mismatch is riskless. The literal convention
        // still carries the cash shortfall -phi, whose VaR is phi.
        return convention == MismatchConvention::ExcessUnits ? 0.0 : phi;
    }
    const std::vector<double>& excess = cache.asset_excess(0);
    std::vector<double> s(excess.size());
    if (convention == MismatchConvention::ExcessUnits) {
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = units * excess[i];
    } else {
        // (phi - ref) X - phi
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = units * (excess[i] + 1.0) - phi;
        }
    }
    return risk_from_samples(s, Measure::VaR, alpha).value;
}

}  // namespace

double scr_integrated(const MarketModel& model, double phi, const McConfig& cfg) {
    return var_mc(model, Allocation(std::vector<double>(model.n(), phi)), cfg).value;
}

double scr_market(const MarketModel& model, double phi, ScrReference reference,
                  const McConfig& cfg, const ScrOptions& options) {
    require_univariate(model, "scr_market");
    const double ref = (reference == ScrReference::RP)
                           ? 0.0
                           : options.phi_star.value_or(
                                 default_phi_star(model, cfg.alpha));
    SurplusCache cache(model, cfg);
    return mismatch_var(cache, phi, ref, options.mismatch, cfg.alpha);
}

double aggregate_sqrt(double scr_l, double scr_m) {
    if (scr_l < 0.0 || scr_m < 0.0) {
        throw std::domain_error("aggregate_sqrt: inputs must be >= 0");
    }
    return std::sqrt(scr_l * scr_l + scr_m * scr_m);
}

ScrReport scr_comparison_report(const MarketModel& model,
                                const std::vector<double>& phi_grid,
                                const McConfig& cfg, const ScrOptions& options) {
    require_univariate(model, "scr_comparison_report");
    ScrReport rep;
    rep.phi_grid = phi_grid;
    rep.scr_l = claim_quantile(model.claims(), cfg.alpha);
    rep.phi_star = options.phi_star.value_or(default_phi_star(model, cfg.alpha));

    SurplusCache cache(model, cfg);
    rep.scr_integrated.resize(phi_grid.size());
    rep.scr_modular_enp.resize(phi_grid.size());
    rep.scr_modular_rp.resize(phi_grid.size());
    const int jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
    parallel_chunks(jobs, phi_grid.size(), [&](std::size_t i) {
        const double phi = phi_grid[i];
        const double integrated = cache.risk({phi}, Measure::VaR, cfg.alpha).value;
        const double m_enp =
            mismatch_var(cache, phi, rep.phi_star, options.mismatch, cfg.alpha);
        const double m_rp = mismatch_var(cache, phi, 0.0, options.mismatch, cfg.alpha);
        rep.scr_integrated[i] = integrated;
        rep.scr_modular_enp[i] = aggregate_sqrt(rep.scr_l, std::max(0.0, m_enp));
        rep.scr_modular_rp[i] = aggregate_sqrt(rep.scr_l, std::max(0.0, m_rp));
    });
    for (std::size_t i = 0; i < phi_grid.size(); ++i) {
        const double integrated = rep.scr_integrated[i];
        if (integrated <= 0.0) continue;
        rep.max_enp_gap = std::max(
            rep.max_enp_gap, std::fabs(rep.scr_modular_enp[i] - integrated) / integrated);
        if (rep.scr_modular_rp[i] <
            (1.0 - options.understatement_threshold) * integrated) {
            rep.rp_understatement_phis.push_back(phi_grid[i]);
        }
    }
    return rep;
}

}  // namespace enp
