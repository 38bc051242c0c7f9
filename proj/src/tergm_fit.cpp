#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polnet/rng.hpp"
#include "polnet/tergm.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polnet {

namespace {

constexpr double kGradTol = 1e-8;
constexpr int kMaxIter = 100;
constexpr double kSeparationBound = 25.0;

bool has_memory(const ModelSpec& spec) {
    for (const auto& t : spec.terms) {
        if (t.kind == TermKind::Memory) return true;
    }
    return false;
}

/// Previous-year ties aligned onto the current vertex ordering; NaN where
/// an entity has no row in the earlier year.
SymMatrix lag_matrix(const YearSlice& cur, const YearSlice* prev_slice) {
    SymMatrix prev(cur.vertices);
    const int n = static_cast<int>(cur.vertices.size());
    std::vector<int> remap(n, -1);
    if (prev_slice) {
        for (int i = 0; i < n; ++i) {
            auto it = std::find(prev_slice->vertices.begin(), prev_slice->vertices.end(), cur.vertices[i]);
            if (it != prev_slice->vertices.end()) {
                remap[i] = static_cast<int>(it - prev_slice->vertices.begin());
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (remap[i] >= 0 && remap[j] >= 0) {
                prev.set(i, j, prev_slice->outcome.at(remap[i], remap[j]) ? 1.0 : 0.0);
            } else {
                prev.set(i, j, std::numeric_limits<double>::quiet_NaN());
            }
        }
    }
    return prev;
}

struct YearObs {
    int year = 0;
    long n = 0;
    std::vector<double> x;        // n x p, row-major change statistics
    std::vector<std::uint8_t> y;  // observed tie indicators
};

struct Pooled {
    int p = 0;
    std::vector<std::string> labels;
    std::vector<YearObs> years;
    long dropped = 0;
};

Pooled build_observations(const PanelSeries& panel, const ModelSpec& spec, int year_lo, int year_hi) {
    spec.validate();
    Pooled pooled;
    pooled.p = static_cast<int>(spec.terms.size());
    for (const auto& t : spec.terms) pooled.labels.push_back(t.label());
    const bool needs_prev = has_memory(spec);

    for (const auto& slice : panel.years) {
        if (slice.year < year_lo || slice.year > year_hi) continue;
        const YearSlice* prev_slice = panel.find(slice.year - 1);
        if (needs_prev && !prev_slice) continue;  // year unusable without its lag
        SymMatrix prev = lag_matrix(slice, prev_slice);
        TermEvaluator eval(slice, needs_prev ? &prev : nullptr, spec);

        YearObs obs;
        obs.year = slice.year;
        const int n = static_cast<int>(slice.vertices.size());
        std::vector<double> delta(pooled.p);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (!eval.dyad_usable(i, j)) {
                    ++pooled.dropped;
                    continue;
                }
                eval.change(slice.outcome, i, j, delta);
                obs.x.insert(obs.x.end(), delta.begin(), delta.end());
                obs.y.push_back(slice.outcome.at(i, j) ? 1 : 0);
                ++obs.n;
            }
        }
        if (obs.n > 0) pooled.years.push_back(std::move(obs));
    }
    if (pooled.years.empty()) {
        throw std::invalid_argument("fit_mple: no usable years in [" + std::to_string(year_lo) + "," +
                                    std::to_string(year_hi) + "]");
    }
    return pooled;
}

double log1pexp(double eta) {
    // log(1 + e^eta), stable for both tails
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double pooled_loglik(const Pooled& pooled, const std::vector<double>& w,
                     const Eigen::VectorXd& beta) {
    double ll = 0.0;
    const int p = pooled.p;
    for (std::size_t t = 0; t < pooled.years.size(); ++t) {
        if (w[t] == 0.0) continue;
        const YearObs& obs = pooled.years[t];
        double year_ll = 0.0;
        for (long r = 0; r < obs.n; ++r) {
            const double* x = obs.x.data() + static_cast<std::size_t>(r) * p;
            double eta = 0.0;
            for (int k = 0; k < p; ++k) eta += beta[k] * x[k];
            year_ll += obs.y[r] * eta - log1pexp(eta);
        }
        ll += w[t] * year_ll;
    }
    return ll;
}

MpleFit fit_weighted(const Pooled& pooled, const std::vector<double>& w) {
    const int p = pooled.p;
    MpleFit fit;
    fit.labels = pooled.labels;
    fit.coef.assign(p, 0.0);
    fit.dropped_dyads = pooled.dropped;
    for (std::size_t t = 0; t < pooled.years.size(); ++t) {
        if (w[t] > 0.0) {
            fit.n_obs += static_cast<long>(w[t]) * pooled.years[t].n;
            fit.years_used.push_back(pooled.years[t].year);
        }
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double ll = pooled_loglik(pooled, w, beta);

    for (int iter = 1; iter <= kMaxIter; ++iter) {
        fit.iterations = iter;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p, p);
        for (std::size_t t = 0; t < pooled.years.size(); ++t) {
            if (w[t] == 0.0) continue;
            const YearObs& obs = pooled.years[t];
            for (long r = 0; r < obs.n; ++r) {
                const double* x = obs.x.data() + static_cast<std::size_t>(r) * p;
                double eta = 0.0;
                for (int k = 0; k < p; ++k) eta += beta[k] * x[k];
                const double mu = 1.0 / (1.0 + std::exp(-eta));
                const double resid = w[t] * (obs.y[r] - mu);
                const double wt = w[t] * mu * (1.0 - mu);
                for (int k = 0; k < p; ++k) {
                    grad[k] += resid * x[k];
                    for (int l = k; l < p; ++l) hess(k, l) += wt * x[k] * x[l];
                }
            }
        }
        for (int k = 0; k < p; ++k) {
            for (int l = 0; l < k; ++l) hess(k, l) = hess(l, k);
        }

        if (grad.lpNorm<Eigen::Infinity>() < kGradTol) {
            fit.converged = true;
            break;
        }

        hess.diagonal().array() += 1e-10;  // guards rank deficiency
        Eigen::VectorXd step = hess.ldlt().solve(grad);
        if (!step.allFinite()) {
            hess.diagonal().array() += 1e-6;
            step = hess.ldlt().solve(grad);
        }

        // step halving keeps the log-likelihood non-decreasing
        double new_ll = 0.0;
        Eigen::VectorXd cand;
        bool improved = false;
        for (int half = 0; half < 30; ++half) {
            cand = beta + step;
            new_ll = pooled_loglik(pooled, w, cand);
            if (new_ll >= ll - 1e-12) {
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;  // numerical dead end; report non-convergence
        beta = cand;
        ll = new_ll;
        fit.loglik_trace.push_back(ll);

        bool diverged = false;
        for (int k = 0; k < p; ++k) {
            if (std::abs(beta[k]) > kSeparationBound) {
                fit.separated.push_back(k);
                diverged = true;
            }
        }
        if (diverged) break;  // separation: coefficients flagged, not converged
    }

    fit.loglik = ll;
    for (int k = 0; k < p; ++k) fit.coef[k] = beta[k];
    return fit;
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace

MpleFit fit_mple(const PanelSeries& panel, const ModelSpec& spec, int year_lo, int year_hi) {
    Pooled pooled = build_observations(panel, spec, year_lo, year_hi);
    std::vector<double> w(pooled.years.size(), 1.0);
    return fit_weighted(pooled, w);
}

TergmFit bootstrap_ci(const PanelSeries& panel, const ModelSpec& spec, int year_lo, int year_hi,
                      int reps, std::uint64_t seed, int threads) {
    if (reps < 2) throw std::invalid_argument("bootstrap_ci: need reps >= 2");
    Pooled pooled = build_observations(panel, spec, year_lo, year_hi);
    const int p = pooled.p;
    const int n_years = static_cast<int>(pooled.years.size());

    std::vector<double> full_w(n_years, 1.0);
    MpleFit full = fit_weighted(pooled, full_w);

    std::vector<std::vector<double>> reps_coef(reps);
    std::vector<char> ok(reps, 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads)) if (threads > 1)
#endif
    for (int r = 0; r < reps; ++r) {
        Rng rng(Rng::derive(seed, {static_cast<std::uint64_t>(r)}));
        std::vector<double> w(n_years, 0.0);
        for (int t = 0; t < n_years; ++t) {
            w[rng.uniform_int(static_cast<std::uint64_t>(n_years))] += 1.0;
        }
        MpleFit fit = fit_weighted(pooled, w);
        if (fit.converged && fit.separated.empty()) {
            reps_coef[r] = fit.coef;
            ok[r] = 1;
        }
    }

    TergmFit out;
    out.labels = pooled.labels;
    out.coef = full.coef;
    for (int r = 0; r < reps; ++r) {
        if (ok[r]) out.replicates.push_back(reps_coef[r]);
    }
    const int excluded = reps - static_cast<int>(out.replicates.size());
    if (out.replicates.empty()) {
        throw std::runtime_error("bootstrap_ci: every replicate failed to converge");
    }
    for (int k = 0; k < p; ++k) {
        std::vector<double> col;
        col.reserve(out.replicates.size());
        for (const auto& row : out.replicates) col.push_back(row[k]);
        out.ci.emplace_back(percentile(col, 0.025), percentile(col, 0.975));
    }
    out.meta.years_used = full.years_used;
    out.meta.reps = reps;
    out.meta.seed = seed;
    out.meta.excluded_replicates = excluded;
    out.meta.dropped_dyads = full.dropped_dyads;
    return out;
}

Interpretation interpret(const TergmFit& fit, const std::string& term, bool others_at_zero) {
    int edges_idx = -1, term_idx = -1;
    for (std::size_t k = 0; k < fit.labels.size(); ++k) {
        if (fit.labels[k] == "edges") edges_idx = static_cast<int>(k);
        if (fit.labels[k] == term) term_idx = static_cast<int>(k);
    }
    if (term_idx < 0) throw std::invalid_argument("interpret: unknown term '" + term + "'");
    if (edges_idx < 0) throw std::invalid_argument("interpret: fit has no edges term");
    double eta = fit.coef[edges_idx];
    if (!others_at_zero && term_idx != edges_idx) eta += fit.coef[term_idx];
    Interpretation out;
    out.probability = 1.0 / (1.0 + std::exp(-eta));
    out.odds_multiplier = std::exp(fit.coef[term_idx]);
    return out;
}

std::vector<BitAdjacency> simulate(const std::vector<double>& coef, const YearSlice& cov,
                                   const SymMatrix* prev, const ModelSpec& spec,
                                   const SimulateConfig& sim_cfg, std::uint64_t seed) {
    for (double c : coef) {
        if (!std::isfinite(c)) throw std::invalid_argument("simulate: coefficients must be finite");
    }
    const int n = static_cast<int>(cov.vertices.size());
    TermEvaluator eval(cov, prev, spec);
    if (static_cast<int>(coef.size()) != eval.n_terms()) {
        throw std::invalid_argument("simulate: coefficient/term count mismatch");
    }

    std::vector<std::pair<int, int>> dyads;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (!eval.dyad_usable(i, j)) {
                throw std::invalid_argument("simulate: covariates incomplete for dyad (" +
                                            cov.vertices[i] + "," + cov.vertices[j] + ")");
            }
            dyads.emplace_back(i, j);
        }
    }
    const long n_dyads = static_cast<long>(dyads.size());
    const long burn_in = sim_cfg.burn_in >= 0 ? sim_cfg.burn_in : 20 * n_dyads;
    const long thin = sim_cfg.thin >= 0 ? std::max<long>(1, sim_cfg.thin) : 2 * n_dyads;

    Rng rng(seed);
    BitAdjacency state(n);
    std::vector<double> delta(coef.size());
    std::vector<BitAdjacency> draws;
    draws.reserve(sim_cfg.n_sims);

    const long total = burn_in + static_cast<long>(sim_cfg.n_sims) * thin;
    for (long step = 1; step <= total; ++step) {
        const auto& [i, j] = dyads[rng.uniform_int(static_cast<std::uint64_t>(n_dyads))];
        eval.change(state, i, j, delta);
        double eta = 0.0;
        for (std::size_t k = 0; k < coef.size(); ++k) eta += coef[k] * delta[k];
        const double p_edge = 1.0 / (1.0 + std::exp(-eta));
        state.set(i, j, rng.uniform01() < p_edge);
        if (step > burn_in && (step - burn_in) % thin == 0) draws.push_back(state);
    }
    return draws;
}

namespace {

GofBinRow envelope(double bin, double observed, std::vector<double> sims) {
    GofBinRow row;
    row.bin = bin;
    row.observed = observed;
    std::sort(sims.begin(), sims.end());
    row.qmin = sims.front();
    row.qmax = sims.back();
    row.q25 = percentile(sims, 0.25);
    row.median = percentile(sims, 0.5);
    row.q75 = percentile(sims, 0.75);
    return row;
}

}  // namespace

GofReport gof(const std::vector<double>& coef, const PanelSeries& panel, const ModelSpec& spec,
              int year_lo, int year_hi, int n_sims, std::uint64_t seed, int threads) {
    const bool needs_prev = has_memory(spec);
    GofReport report;

    std::vector<const YearSlice*> slices;
    for (const auto& slice : panel.years) {
        if (slice.year < year_lo || slice.year > year_hi) continue;
        if (needs_prev && !panel.find(slice.year - 1)) continue;
        slices.push_back(&slice);
    }
    report.years.resize(slices.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads)) if (threads > 1)
#endif
    for (long si = 0; si < static_cast<long>(slices.size()); ++si) {
        const YearSlice& slice = *slices[si];
        SymMatrix prev = lag_matrix(slice, panel.find(slice.year - 1));
        SimulateConfig sim_cfg;
        sim_cfg.n_sims = n_sims;
        auto sims = simulate(coef, slice, needs_prev ? &prev : nullptr, spec, sim_cfg,
                             Rng::derive(seed, {static_cast<std::uint64_t>(slice.year)}));

        GofYearReport yr;
        yr.year = slice.year;
        const int n = static_cast<int>(slice.vertices.size());

        auto obs_deg = degree_histogram(slice.outcome);
        auto obs_esp = esp_histogram(slice.outcome);
        std::vector<std::vector<long>> sim_deg, sim_esp;
        std::vector<double> sim_mod;
        int max_deg = 0, max_esp = 0;
        for (int i = 0; i < n; ++i) max_deg = std::max(max_deg, slice.outcome.degree(i));
        for (std::size_t k = 0; k < obs_esp.size(); ++k) {
            if (obs_esp[k] > 0) max_esp = std::max(max_esp, static_cast<int>(k));
        }
        for (const auto& net : sims) {
            sim_deg.push_back(degree_histogram(net));
            sim_esp.push_back(esp_histogram(net));
            sim_mod.push_back(greedy_modularity(net));
            for (int i = 0; i < n; ++i) max_deg = std::max(max_deg, net.degree(i));
            const auto& eh = sim_esp.back();
            for (std::size_t k = 0; k < eh.size(); ++k) {
                if (eh[k] > 0) max_esp = std::max(max_esp, static_cast<int>(k));
            }
        }

        // counts offset by 1 and logged
        for (int b = 0; b <= max_deg; ++b) {
            std::vector<double> vals;
            vals.reserve(sims.size());
            for (const auto& h : sim_deg) vals.push_back(std::log1p(static_cast<double>(h[b])));
            yr.degree.push_back(envelope(b, std::log1p(static_cast<double>(obs_deg[b])), std::move(vals)));
        }
        for (int b = 0; b <= max_esp; ++b) {
            std::vector<double> vals;
            vals.reserve(sims.size());
            for (const auto& h : sim_esp) vals.push_back(std::log1p(static_cast<double>(h[b])));
            yr.esp.push_back(envelope(b, std::log1p(static_cast<double>(obs_esp[b])), std::move(vals)));
        }
        yr.modularity = envelope(std::numeric_limits<double>::quiet_NaN(),
                                 greedy_modularity(slice.outcome), sim_mod);
        report.years[si] = std::move(yr);
    }
    return report;
}

std::vector<PredictRow> predict_aucpr(const PanelSeries& panel, const ModelSpec& spec, int window) {
    if (window < 1) throw std::invalid_argument("predict_aucpr: window must be >= 1");
    if (static_cast<int>(panel.years.size()) < window + 1) {
        throw std::invalid_argument("predict_aucpr: need at least window+1 years");
    }
    std::vector<PredictRow> rows;
    for (const auto& slice : panel.years) {
        const int test_year = slice.year;
        bool have_window = true;
        for (int t = test_year - window; t < test_year; ++t) {
            if (!panel.find(t)) {
                have_window = false;
                break;
            }
        }
        if (!have_window) continue;

        PredictRow row;
        row.test_year = test_year;

        long positives = 0, total = 0;
        const int n = static_cast<int>(slice.vertices.size());
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (slice.outcome.at(i, j)) ++positives;
            }
        }
        MpleFit fit;
        try {
            fit = fit_mple(panel, spec, test_year - window, test_year - 1);
        } catch (const std::exception& e) {
            row.skipped = true;
            row.note = e.what();
            rows.push_back(row);
            continue;
        }
        if (!fit.converged || !fit.separated.empty()) {
            row.skipped = true;
            row.note = "training fit did not converge";
            rows.push_back(row);
            continue;
        }

        const bool needs_prev = has_memory(spec);
        SymMatrix prev = lag_matrix(slice, panel.find(test_year - 1));
        if (needs_prev && !panel.find(test_year - 1)) {
            row.skipped = true;
            row.note = "no lag year for memory term";
            rows.push_back(row);
            continue;
        }
        TermEvaluator eval(slice, needs_prev ? &prev : nullptr, spec);
        std::vector<std::pair<double, int>> scored;
        std::vector<double> delta(fit.coef.size());
        positives = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (!eval.dyad_usable(i, j)) continue;
                eval.change(slice.outcome, i, j, delta);
                double eta = 0.0;
                for (std::size_t k = 0; k < delta.size(); ++k) eta += fit.coef[k] * delta[k];
                const int y = slice.outcome.at(i, j) ? 1 : 0;
                scored.emplace_back(1.0 / (1.0 + std::exp(-eta)), y);
                positives += y;
                ++total;
            }
        }
        if (positives == 0) {
            row.skipped = true;
            row.note = "no conflict onsets in test year";
            rows.push_back(row);
            continue;
        }
        row.aucpr = auc_pr(scored);
        row.baseline = static_cast<double>(positives) / static_cast<double>(total);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace polnet
