#pragma once

#include "teachsize/learner.hpp"
#include "teachsize/render.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace teachsize {

// rho and N of the teaching-size definition plus the query temperature.
struct Protocol {
    double rho = 0.5;
    int n_trials = 50;
    double temperature = 1.0;

    int required_successes() const;
    void validate() const;
};

struct TeachingSizeWitness {
    std::string drawing_id;
    double epsilon = 0.0;
};

// "not identified" is a first-class outcome: ts is empty when no candidate
// reached the success threshold.
struct TeachingSizeResult {
    std::string concept_name;
    Modality modality = Modality::bitmap;
    std::optional<int> ts;
    std::optional<TeachingSizeWitness> witness;
    int successes = 0;
    int trials = 0;
    bool identified() const { return ts.has_value(); }
};

// Runs one trial of a candidate and reports whether the learner named the
// concept. Implementations wrap a live learner, or replay cached records.
using TrialFn = std::function<bool(const Stimulus& stim, int trial_index)>;

// Minimal segment count whose drawing the learner identifies in at least
// ceil(rho*N) of N trials. Candidates are visited in ascending
// (segments, drawing_id, epsilon) order; a candidate is abandoned early once
// its failures exceed N - ceil(rho*N), which cannot change the outcome.
// Accepted candidates always run the full N trials so the reported success
// count is comparable across candidates.
TeachingSizeResult teaching_size(std::vector<Stimulus> candidates, const TrialFn& run_trial,
                                 const Protocol& proto);

// Fraction of the concept's selection-phase prompts that were judged correct.
double accuracy(std::span<const TrialRecord> trials, const std::string& concept_name);

// Fraction of all prompts in a phase where the learner named `concept` even
// though the stimulus was a different concept.
double frequency_of_mistakes(std::span<const TrialRecord> all_trials,
                             const std::string& concept_name, int n_total);

// Rows are actual concepts; columns the same concepts plus "Other" for
// answers that match no accepted set.
struct ConfusionMatrix {
    std::vector<std::string> concepts;
    std::vector<std::vector<int>> counts; // [row][col], one extra column for Other
    std::vector<int> row_totals;

    int other_column() const { return static_cast<int>(concepts.size()); }
    double row_percent(size_t row, size_t col) const;
};

ConfusionMatrix confusion_matrix(std::span<const TrialRecord> trials,
                                 const std::vector<std::string>& concepts);

// Sample Pearson product-moment correlation.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Tie-corrected Kendall rank correlation (tau-b).
double kendall_tau_b(std::span<const double> xs, std::span<const double> ys);

// tau-b over two score maps that share a key set (e.g. concept -> teaching
// size). Keys are paired in sorted order.
double kendall_tau_b(const std::map<std::string, double>& a,
                     const std::map<std::string, double>& b);

// Residuals of the least-squares line y = a + b*x; they sum to zero.
std::vector<double> ols_residuals(std::span<const double> ys, std::span<const double> xs);

// Concept -> prior in [0,1].
struct PriorTable {
    std::map<std::string, double> values;

    double at(const std::string& concept_name) const;
    void validate_covers(const std::vector<std::string>& concepts) const;
};

} // namespace teachsize
