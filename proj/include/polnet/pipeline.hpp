#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace polnet {

struct PipelineOptions {
    std::string manifest_path;
    std::string out_dir = "out";
    std::optional<int> year_lo;
    std::optional<int> year_hi;
    std::uint64_t seed = 42;
    int threads = 1;
    bool force = false;
    std::optional<int> reps;       // overrides manifest bootstrap_reps
    std::optional<int> gof_sims;   // overrides manifest gof_sims
    std::string grid_path;         // optional JSON grid of settings
};

inline const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> stages = {
        "build-graphs", "embed", "distances", "detect", "derive-covariates",
        "fit", "gof", "predict", "report"};
    return stages;
}

/// Runs one stage (or "all"). Returns the process exit code: 0 success,
/// 1 usage error, 2 data validation failure, 3 numerical failure. Cached
/// stages whose inputs are unchanged are skipped unless force is set;
/// running a stage with stale upstream artifacts fails naming the dirty
/// stage. Every run appends one JSON line per stage to runlog.jsonl.
int run_pipeline(const std::string& subcommand, const PipelineOptions& opts);

}  // namespace polnet
