#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace teachsize {

// Coordinates live in the 0..255 space of the Quick, Draw! simplified files.
struct Point {
    int x = 0;
    int y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

// One continuous pen movement. Always holds >= 2 points after ingestion and
// never two identical consecutive points, so every point pair is a real
// segment.
struct Stroke {
    std::vector<Point> points;

    int segment_count() const { return static_cast<int>(points.size()) - 1; }
    friend bool operator==(const Stroke&, const Stroke&) = default;
};

struct Drawing {
    std::string id;      // dataset key, or content hash when the key is absent
    std::string concept_name; // lowercase concept label
    bool recognized = false;
    std::vector<Stroke> strokes;

    friend bool operator==(const Drawing&, const Drawing&) = default;
};

// Total straight-line segments, the |S^m| size measure. Identical for both
// modalities of the same drawing.
int segment_count(const Drawing& d);

// Hash of the stroke geometry only (no id/concept/flag). Used for content ids
// and for deduplicating identical simplified geometries.
uint64_t geometry_hash(const Drawing& d);

// One NDJSON record: {"key_id": ..., "word": ..., "recognized": ...,
// "drawing": [[[xs],[ys]], ...]}. Consecutive duplicate points are collapsed;
// coordinates outside [0,255] and strokes with fewer than two distinct points
// are rejected.
Drawing parse_dataset_line(std::string_view line);

// Canonical NDJSON form; parse(to_dataset_line(d)) == d for normalized d.
std::string to_dataset_line(const Drawing& d);

struct ConceptCorpus {
    std::string concept_name;
    std::vector<Drawing> drawings;
};

struct CorpusStats {
    size_t lines_read = 0;
    size_t skipped_unknown_concept = 0;
    size_t skipped_unrecognized = 0;
};

// Groups drawings by concept, alphabetically. An empty filter accepts every
// concept; otherwise records with unknown concepts are skipped and counted.
std::vector<ConceptCorpus> load_corpus(const std::string& path,
                                       const std::set<std::string>& concept_filter,
                                       bool recognized_only,
                                       CorpusStats* stats = nullptr);

} // namespace teachsize
