#pragma once

#include "teachsize/drawing.hpp"

#include <cstdint>
#include <vector>

namespace teachsize {

struct BinSpec {
    double width = 1.0;
    double origin = 0.0; // left edge of the first bin
    int count = 1;

    // floor((v - origin)/width), clamped so the maximum value lands in the
    // last bin.
    int index_of(double v) const;
};

struct SampleConfig {
    int target_size = 50;
    uint64_t seed = 0;
};

// Linear interpolation between order statistics (quantile type 7).
// p in [0,1]; values need not be sorted.
double quantile_type7(std::vector<double> values, double p);

// min(Sturges, Freedman-Diaconis) over the values, with Sturges as fallback
// when the IQR is zero and 1.0 when the range is zero.
double bin_width(const std::vector<int>& values);

BinSpec make_bins(const std::vector<int>& values);

// Per-bin quota: round-half-up of target * population/total, capped at the
// bin population. The sum can miss the target by rounding; that mirrors the
// sampling scheme this project follows.
std::vector<int> allocate_quotas(const std::vector<int>& bin_populations, int target);

// Proportional random stratified sample over segment counts. Deterministic
// for a fixed seed; output is a duplicate-free subset of the corpus.
std::vector<Drawing> stratified_sample(const ConceptCorpus& corpus, const SampleConfig& cfg);

} // namespace teachsize
