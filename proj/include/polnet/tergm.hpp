#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polnet/extract.hpp"
#include "polnet/graph.hpp"
#include "polnet/matrix.hpp"

namespace polnet {

/// One panel year: binary outcome network plus aligned covariates. Dyadic
/// covariate cells may be NaN (entity missing from a source); those dyads
/// drop out of the pseudolikelihood and contribute zero to statistics.
struct YearSlice {
    int year = 0;
    std::vector<EntityId> vertices;
    BitAdjacency outcome;
    std::map<std::string, SymMatrix> dyadic;
    std::map<std::string, std::vector<double>> nodal;
};

struct PanelSeries {
    std::vector<YearSlice> years;  // strictly increasing years

    const YearSlice* find(int year) const {
        for (const auto& s : years) {
            if (s.year == year) return &s;
        }
        return nullptr;
    }
};

enum class TermKind {
    Edges,
    AltTwoStars,
    FourCycles,
    Gwesp,
    Memory,
    EdgeCov,
    JointNodal,
    RatioNodal,
    BridgeNodal,
};

struct Term {
    TermKind kind = TermKind::Edges;
    std::string cov;             // covariate name where applicable
    double decay = 0.0;          // gwesp
    double lambda = 2.0;         // alternating k-stars
    bool raw_two_stars = false;  // reduce alt-2-stars to the plain 2-path count
    double threshold = 7.0;      // joint-nodal cutoff

    std::string label() const;
};

/// Term list for one model. The edges term must be present.
struct ModelSpec {
    std::vector<Term> terms;

    int index_of(const std::string& label) const;
    void validate() const;  // edges present, no duplicate labels
};

/// Evaluates sufficient statistics and change statistics for one model
/// bound to one year's covariates. `prev` (previous-year ties, NaN where
/// unaligned) is required exactly when the spec has a memory term.
class TermEvaluator {
public:
    TermEvaluator(const YearSlice& cov, const SymMatrix* prev, const ModelSpec& spec);

    int n_terms() const { return static_cast<int>(spec_->terms.size()); }

    std::vector<double> statistics(const BitAdjacency& net) const;

    /// Delta of every statistic when dyad (i,j) flips 0 -> 1, everything
    /// else held at `net`. Incremental; never mutates `net`.
    void change(const BitAdjacency& net, int i, int j, std::span<double> out) const;

    /// False when some covariate cell of (i,j) is NaN.
    bool dyad_usable(int i, int j) const;

private:
    const YearSlice* cov_;
    const SymMatrix* prev_;
    const ModelSpec* spec_;
    std::vector<const SymMatrix*> dyadic_ptr_;          // per term or null
    std::vector<const std::vector<double>*> nodal_ptr_;  // per term or null
};

struct MpleFit {
    std::vector<std::string> labels;
    std::vector<double> coef;
    bool converged = false;
    std::vector<int> separated;  // indices of diverging coefficients
    double loglik = 0.0;
    std::vector<double> loglik_trace;  // per accepted Newton step
    int iterations = 0;
    long n_obs = 0;
    long dropped_dyads = 0;
    std::vector<int> years_used;
};

struct FitMeta {
    std::vector<int> years_used;
    int reps = 0;
    std::uint64_t seed = 0;
    int excluded_replicates = 0;
    long dropped_dyads = 0;
};

struct TergmFit {
    std::vector<std::string> labels;
    std::vector<double> coef;
    std::vector<std::vector<double>> replicates;       // reps x terms
    std::vector<std::pair<double, double>> ci;         // 95% percentile
    FitMeta meta;
};

struct Interpretation {
    double probability = 0.0;
    double odds_multiplier = 0.0;
};

/// Adds community covariates to every panel year: `<prefix>community_tie`
/// (shared-community count), `<prefix>joint_member` (both endpoints'
/// single community coincides) and nodal `<prefix>bridge` (member of >= 2
/// communities). Years without a CommunitySet get zeros.
PanelSeries derive_covariates(const std::vector<CommunitySet>& communities, const PanelSeries& base,
                              const std::string& prefix = "");

std::vector<double> compute_statistics(const BitAdjacency& net, const YearSlice& cov,
                                       const SymMatrix* prev, const ModelSpec& spec);

std::vector<double> change_statistic(const BitAdjacency& net, const YearSlice& cov,
                                     const SymMatrix* prev, const ModelSpec& spec, int i, int j);

/// Pooled logistic regression of tie indicators on change statistics,
/// fitted by Newton iterations with step halving. Divergence is reported
/// via MpleFit::separated, never thrown.
MpleFit fit_mple(const PanelSeries& panel, const ModelSpec& spec, int year_lo, int year_hi);

/// Year-block bootstrap of the pseudolikelihood fit with percentile 95%
/// intervals. Replicates run in parallel over `threads`; results are
/// identical for any thread count given the same seed.
TergmFit bootstrap_ci(const PanelSeries& panel, const ModelSpec& spec, int year_lo, int year_hi,
                      int reps, std::uint64_t seed, int threads = 1);

/// probability = logistic(edges [+ term coefficient unless baseline]);
/// odds_multiplier = exp(term coefficient).
Interpretation interpret(const TergmFit& fit, const std::string& term, bool others_at_zero);

struct SimulateConfig {
    int n_sims = 50;
    long burn_in = -1;  // < 0: 20 * dyad count
    long thin = -1;     // < 0: 2 * dyad count
};

/// Gibbs sampler over dyad toggles with change-statistic log-odds.
std::vector<BitAdjacency> simulate(const std::vector<double>& coef, const YearSlice& cov,
                                   const SymMatrix* prev, const ModelSpec& spec,
                                   const SimulateConfig& sim_cfg, std::uint64_t seed);

struct GofBinRow {
    double bin = 0.0;  // degree value, shared-partner count, or NaN for scalars
    double observed = 0.0;
    double qmin = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, qmax = 0.0;
};

struct GofYearReport {
    int year = 0;
    std::vector<GofBinRow> degree;   // log(1+count) per degree bin
    std::vector<GofBinRow> esp;      // log(1+count) per shared-partner bin
    GofBinRow modularity;            // raw
};

struct GofReport {
    std::vector<GofYearReport> years;
};

/// Simulates n_sims networks per year from `coef` and reports quantile
/// envelopes for degree, edgewise-shared-partner and modularity statistics.
GofReport gof(const std::vector<double>& coef, const PanelSeries& panel, const ModelSpec& spec,
              int year_lo, int year_hi, int n_sims = 50, std::uint64_t seed = 0, int threads = 1);

struct PredictRow {
    int test_year = 0;
    double aucpr = 0.0;
    double baseline = 0.0;
    bool skipped = false;
    std::string note;
};

/// Rolling-window out-of-sample evaluation: fit on `window` years, score
/// the next year's dyads conditionally, report AUC-PR against the positive
/// rate baseline. Test years with zero positives are skipped with a note.
std::vector<PredictRow> predict_aucpr(const PanelSeries& panel, const ModelSpec& spec, int window = 5);

/// Area under the precision-recall curve by exhaustive threshold sweep over
/// the distinct scores (step integration, no trapezoids).
double auc_pr(std::vector<std::pair<double, int>> scored);

/// Newman modularity of the partition found by greedy agglomerative
/// merging.
double greedy_modularity(const BitAdjacency& net);

/// Degree histogram (length n) and edgewise-shared-partner histogram
/// (length n-1) used by the goodness-of-fit report.
std::vector<long> degree_histogram(const BitAdjacency& net);
std::vector<long> esp_histogram(const BitAdjacency& net);

}  // namespace polnet
