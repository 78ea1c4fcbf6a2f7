#include "teachsize/metrics.hpp"

#include "teachsize/errors.hpp"

#include <algorithm>
#include <cmath>

namespace teachsize {

int Protocol::required_successes() const {
    return static_cast<int>(std::ceil(rho * static_cast<double>(n_trials) - 1e-9));
}

void Protocol::validate() const {
    if (rho <= 0.0 || rho > 1.0) throw ConfigError("protocol: rho must be in (0,1]");
    if (n_trials < 1) throw ConfigError("protocol: n_trials must be >= 1");
    if (temperature < 0.0 || temperature > 2.0)
        throw ConfigError("protocol: temperature must be in [0,2]");
    if (required_successes() > n_trials)
        throw ConfigError("protocol: required successes exceed n_trials");
}

TeachingSizeResult teaching_size(std::vector<Stimulus> candidates, const TrialFn& run_trial,
                                 const Protocol& proto) {
    proto.validate();

    std::sort(candidates.begin(), candidates.end(), [](const Stimulus& a, const Stimulus& b) {
        if (a.segment_count != b.segment_count) return a.segment_count < b.segment_count;
        if (a.drawing_id != b.drawing_id) return a.drawing_id < b.drawing_id;
        return a.epsilon < b.epsilon;
    });

    TeachingSizeResult result;
    if (!candidates.empty()) {
        result.concept_name = candidates.front().concept_name;
        result.modality = candidates.front().modality;
    }

    const int need = proto.required_successes();
    const int allowed_failures = proto.n_trials - need;

    for (const auto& cand : candidates) {
        int successes = 0;
        int failures = 0;
        int ran = 0;
        for (int t = 0; t < proto.n_trials; ++t) {
            ++ran;
            if (run_trial(cand, t)) {
                ++successes;
            } else {
                ++failures;
                if (failures > allowed_failures) break; // outcome decided
            }
        }
        if (successes >= need) {
            result.ts = cand.segment_count;
            result.witness = TeachingSizeWitness{cand.drawing_id, cand.epsilon};
            result.successes = successes;
            result.trials = ran;
            return result;
        }
    }
    return result; // not identified
}

double accuracy(std::span<const TrialRecord> trials, const std::string& concept_name) {
    int n = 0;
    int correct = 0;
    for (const auto& t : trials) {
        if (t.concept_name != concept_name) continue;
        ++n;
        if (t.judgment.verdict == Verdict::correct) ++correct;
    }
    if (n == 0) throw StatsError("accuracy: no trials for concept '" + concept_name + "'");
    return static_cast<double>(correct) / static_cast<double>(n);
}

double frequency_of_mistakes(std::span<const TrialRecord> all_trials,
                             const std::string& concept_name, int n_total) {
    if (n_total <= 0) throw StatsError("frequency_of_mistakes: n_total must be positive");
    int hits = 0;
    for (const auto& t : all_trials) {
        if (t.concept_name == concept_name) continue;
        if (t.judgment.verdict == Verdict::wrong_concept && t.judgment.predicted == concept_name) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(n_total);
}

double ConfusionMatrix::row_percent(size_t row, size_t col) const {
    if (row_totals[row] == 0) return 0.0;
    const double pct = 100.0 * counts[row][col] / static_cast<double>(row_totals[row]);
    return std::round(pct * 100.0) / 100.0;
}

ConfusionMatrix confusion_matrix(std::span<const TrialRecord> trials,
                                 const std::vector<std::string>& concepts) {
    ConfusionMatrix m;
    m.concepts = concepts;
    std::sort(m.concepts.begin(), m.concepts.end());
    m.counts.assign(m.concepts.size(), std::vector<int>(m.concepts.size() + 1, 0));
    m.row_totals.assign(m.concepts.size(), 0);

    auto index_of = [&](const std::string& c) -> int {
        const auto it = std::lower_bound(m.concepts.begin(), m.concepts.end(), c);
        if (it == m.concepts.end() || *it != c) return -1;
        return static_cast<int>(it - m.concepts.begin());
    };

    for (const auto& t : trials) {
        const int row = index_of(t.concept_name);
        if (row < 0) throw StatsError("confusion_matrix: trial concept '" + t.concept_name +
                                      "' not in concept set");
        int col = m.other_column();
        switch (t.judgment.verdict) {
            case Verdict::correct: col = row; break;
            case Verdict::wrong_concept: {
                const int c = index_of(t.judgment.predicted);
                if (c < 0) throw StatsError("confusion_matrix: predicted concept '" +
                                            t.judgment.predicted + "' not in concept set");
                col = c;
                break;
            }
            case Verdict::other: break;
        }
        ++m.counts[static_cast<size_t>(row)][static_cast<size_t>(col)];
        ++m.row_totals[static_cast<size_t>(row)];
    }
    return m;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw StatsError("pearson: length mismatch");
    const size_t n = xs.size();
    if (n < 2) throw StatsError("pearson: need at least 2 points");

    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw StatsError("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

double kendall_tau_b(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw StatsError("kendall_tau_b: length mismatch");
    const size_t n = xs.size();
    if (n < 2) throw StatsError("kendall_tau_b: need at least 2 items");

    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const bool tx = xs[i] == xs[j];
            const bool ty = ys[i] == ys[j];
            if (tx) ++ties_x;
            if (ty) ++ties_y;
            if (tx || ty) continue;
            const bool same = (xs[i] < xs[j]) == (ys[i] < ys[j]);
            same ? ++concordant : ++discordant;
        }
    }
    const long long pairs = static_cast<long long>(n) * (n - 1) / 2;
    const double denom = std::sqrt(static_cast<double>(pairs - ties_x) *
                                   static_cast<double>(pairs - ties_y));
    if (denom == 0.0) throw StatsError("kendall_tau_b: all pairs tied");
    return static_cast<double>(concordant - discordant) / denom;
}

double kendall_tau_b(const std::map<std::string, double>& a,
                     const std::map<std::string, double>& b) {
    if (a.size() != b.size()) throw StatsError("kendall_tau_b: item sets differ in size");
    std::vector<double> xs, ys;
    xs.reserve(a.size());
    ys.reserve(a.size());
    for (const auto& [item, score] : a) {
        const auto it = b.find(item);
        if (it == b.end()) throw StatsError("kendall_tau_b: item '" + item + "' missing");
        xs.push_back(score);
        ys.push_back(it->second);
    }
    return kendall_tau_b(xs, ys);
}

std::vector<double> ols_residuals(std::span<const double> ys, std::span<const double> xs) {
    if (xs.size() != ys.size()) throw StatsError("ols_residuals: length mismatch");
    const size_t n = xs.size();
    if (n < 3) throw StatsError("ols_residuals: need at least 3 points");

    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) throw StatsError("ols_residuals: x is constant");

    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    std::vector<double> res(n);
    for (size_t i = 0; i < n; ++i) res[i] = ys[i] - (intercept + slope * xs[i]);
    return res;
}

double PriorTable::at(const std::string& concept_name) const {
    const auto it = values.find(concept_name);
    if (it == values.end()) throw ConfigError("priors: missing concept '" + concept_name + "'");
    return it->second;
}

void PriorTable::validate_covers(const std::vector<std::string>& concepts) const {
    for (const auto& [concept_name, v] : values) {
        if (v < 0.0 || v > 1.0) {
            throw ConfigError("priors: value for '" + concept_name + "' outside [0,1]");
        }
    }
    for (const auto& c : concepts) at(c);
}

} // namespace teachsize
