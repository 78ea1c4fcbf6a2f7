#pragma once

#include "teachsize/drawing.hpp"

#include <vector>

namespace teachsize {

// Distance from p to the infinite line through a and b; plain point distance
// when a == b (degenerate chord of a closed stroke).
double perpendicular_distance(const Point& p, const Point& a, const Point& b);

// Ramer-Douglas-Peucker with the conventions used throughout this project:
// a point is kept iff its distance exceeds eps (strictly), and when several
// interior points share the maximum distance the earliest index wins.
Stroke rdp_stroke(const Stroke& s, double eps);

// Every stroke simplified independently at the same threshold.
Drawing rdp_drawing(const Drawing& d, double eps);

struct LadderRung {
    double epsilon = 0.0; // first threshold at which this geometry appears
    Drawing drawing;
    int segments = 0;
};

// The epsilon-indexed sequence of progressively simpler drawings, from the
// dataset baseline down to one segment per stroke. Consecutive thresholds
// that produce identical geometry share a single rung.
struct SimplificationLadder {
    Drawing source;
    std::vector<LadderRung> rungs;
};

SimplificationLadder build_ladder(const Drawing& d, double eps_start = 2.0,
                                  double eps_step = 1.0);

} // namespace teachsize
