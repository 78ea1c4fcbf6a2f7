#pragma once

#include "teachsize/learner.hpp"
#include "teachsize/metrics.hpp"
#include "teachsize/sampling.hpp"
#include "teachsize/simplify.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace teachsize {

struct ProtocolConfig {
    double rho = 0.5;
    int n_trials = 50;
    double selection_temperature = 0.0;
    double teaching_temperature = 1.0;
};

struct ExperimentConfig {
    std::string dataset_path;
    std::vector<std::string> concepts;
    std::string hyponyms_path;
    std::string priors_path;
    std::string output_dir = "out";
    double eps_step = 1.0;
    SampleConfig sample;
    ProtocolConfig protocol;
    int concurrency = 1;
    std::vector<LearnerConfig> learners;
    std::vector<Modality> modalities{Modality::bitmap, Modality::coordinates};

    static ExperimentConfig load(const std::string& path);
    void validate() const;
    uint64_t config_hash() const;

    std::string cache_path() const { return output_dir + "/cache.ndjson"; }
    std::string manifest_path() const { return output_dir + "/manifest.json"; }
};

struct RunOptions {
    bool fresh = false;
    bool dry_run = false;
    std::optional<uint64_t> seed_override;
    std::vector<std::string> model_filter;      // empty = all configured learners
    std::optional<Modality> modality_filter;
};

// A sampled drawing expanded into its simplification ladder, with identical
// simplified geometries issued only once.
struct PreparedConcept {
    std::string concept_name;
    std::vector<std::pair<double, Drawing>> rungs; // (epsilon, rung geometry)
};

std::vector<PreparedConcept> prepare_concepts(const ExperimentConfig& cfg, uint64_t seed);

// --- aggregates over the cache ------------------------------------------------

struct SelectionCell {
    int prompts = 0;
    int correct = 0;
    int mistaken_for = 0; // times this concept was wrongly named for other stimuli
};

struct SelectionSummary {
    std::vector<std::string> concepts;
    std::vector<std::string> models;
    std::vector<Modality> modalities;
    // keys: concept|model|modality
    std::map<std::string, SelectionCell> cells;
    // keys: model|modality
    std::map<std::string, int> total_prompts;
    std::map<std::string, ConfusionMatrix> confusion;

    static std::string cell_key(const std::string& concept_name, const std::string& model,
                                Modality m);
    static std::string phase_key(const std::string& model, Modality m);
};

struct TsRow {
    std::string model;
    TeachingSizeResult result;
};

struct TeachingSummary {
    std::vector<TsRow> rows; // sorted by (modality, concept, model)
};

struct CorrelationRow {
    std::string model;
    std::string order_bitmap;
    std::string order_coordinates;
    int common_concepts = 0;
    std::optional<double> kendall_ts;
    std::optional<double> kendall_ts_prior_residual;
    std::optional<double> pearson_accuracy;
};

// Reports are pure functions of the cached records: these rebuild every
// aggregate without touching a learner or the dataset.
SelectionSummary selection_summary_from_cache(const ResponseCache& cache,
                                              const ExperimentConfig& cfg,
                                              const RunOptions& opts);
TeachingSummary teaching_summary_from_cache(const ResponseCache& cache,
                                            const ExperimentConfig& cfg,
                                            const RunOptions& opts);
std::vector<CorrelationRow> correlation_rows(const SelectionSummary& selection,
                                             const TeachingSummary& teaching,
                                             const PriorTable& priors);

// --- phases --------------------------------------------------------------------

struct PromptCount {
    int total = 0;
    int cached = 0;
    int to_issue() const { return total - cached; }
};

// Prompt totals per model|modality key for the selection phase, without
// issuing any call.
std::map<std::string, PromptCount> count_selection_prompts(const ExperimentConfig& cfg,
                                                           const RunOptions& opts);

SelectionSummary run_selection_phase(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct TeachingOutputs {
    TeachingSummary summary;
    std::vector<CorrelationRow> correlations;
};

TeachingOutputs run_teaching_size_phase(const ExperimentConfig& cfg, const RunOptions& opts = {});

PriorTable load_priors(const std::string& path);

void emit_reports(const std::string& out_dir, const SelectionSummary& selection,
                  const TeachingSummary& teaching,
                  const std::vector<CorrelationRow>& correlations);

// Recomputes every report from the cache alone.
void regenerate_reports(const ExperimentConfig& cfg, const RunOptions& opts = {});

} // namespace teachsize
