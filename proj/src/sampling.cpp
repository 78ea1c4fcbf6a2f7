#include "teachsize/sampling.hpp"

#include "teachsize/errors.hpp"
#include "teachsize/rng.hpp"

#include <algorithm>
#include <cmath>

namespace teachsize {

int BinSpec::index_of(double v) const {
    int idx = static_cast<int>(std::floor((v - origin) / width));
    return std::clamp(idx, 0, count - 1);
}

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw StatsError("quantile: empty input");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    if (n == 1) return values[0];
    const double h = p * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, n - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double bin_width(const std::vector<int>& values) {
    if (values.empty()) throw StatsError("bin_width: empty input");
    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    const double range = static_cast<double>(*max_it - *min_it);
    if (range == 0.0) return 1.0;

    const double n = static_cast<double>(values.size());
    const double sturges_bins = std::ceil(std::log2(n)) + 1.0;
    const double w_sturges = range / sturges_bins;

    std::vector<double> vals(values.begin(), values.end());
    const double iqr = quantile_type7(vals, 0.75) - quantile_type7(vals, 0.25);
    if (iqr == 0.0) return w_sturges;

    const double w_fd = 2.0 * iqr * std::pow(n, -1.0 / 3.0);
    return std::min(w_sturges, w_fd);
}

BinSpec make_bins(const std::vector<int>& values) {
    BinSpec spec;
    spec.width = bin_width(values);
    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    spec.origin = static_cast<double>(*min_it);
    const double range = static_cast<double>(*max_it - *min_it);
    spec.count = static_cast<int>(std::floor(range / spec.width)) + 1;
    return spec;
}

std::vector<int> allocate_quotas(const std::vector<int>& bin_populations, int target) {
    int total = 0;
    for (int p : bin_populations) total += p;
    std::vector<int> quotas(bin_populations.size(), 0);
    if (total == 0) return quotas;
    for (size_t b = 0; b < bin_populations.size(); ++b) {
        if (bin_populations[b] == 0) continue;
        const double share =
            static_cast<double>(target) * bin_populations[b] / static_cast<double>(total);
        quotas[b] = std::min(bin_populations[b], static_cast<int>(std::floor(share + 0.5)));
    }
    return quotas;
}

std::vector<Drawing> stratified_sample(const ConceptCorpus& corpus, const SampleConfig& cfg) {
    if (corpus.drawings.empty()) return {};

    std::vector<int> segs;
    segs.reserve(corpus.drawings.size());
    for (const auto& d : corpus.drawings) segs.push_back(segment_count(d));

    const BinSpec spec = make_bins(segs);
    std::vector<std::vector<size_t>> members(static_cast<size_t>(spec.count));
    for (size_t i = 0; i < segs.size(); ++i) {
        members[static_cast<size_t>(spec.index_of(segs[i]))].push_back(i);
    }

    std::vector<int> populations;
    populations.reserve(members.size());
    for (const auto& m : members) populations.push_back(static_cast<int>(m.size()));
    const std::vector<int> quotas = allocate_quotas(populations, cfg.target_size);

    SplitRng rng(cfg.seed);
    std::vector<Drawing> out;
    for (size_t b = 0; b < members.size(); ++b) {
        auto& idx = members[b];
        const int quota = quotas[b];
        // Partial Fisher-Yates: the first `quota` slots are the sample.
        for (int k = 0; k < quota; ++k) {
            const size_t j = k + static_cast<size_t>(rng.below(idx.size() - k));
            std::swap(idx[k], idx[j]);
        }
        for (int k = 0; k < quota; ++k) out.push_back(corpus.drawings[idx[k]]);
    }
    return out;
}

} // namespace teachsize
