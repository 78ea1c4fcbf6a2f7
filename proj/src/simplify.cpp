#include "teachsize/simplify.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace teachsize {

double perpendicular_distance(const Point& p, const Point& a, const Point& b) {
    const double abx = static_cast<double>(b.x) - a.x;
    const double aby = static_cast<double>(b.y) - a.y;
    const double apx = static_cast<double>(p.x) - a.x;
    const double apy = static_cast<double>(p.y) - a.y;
    if (a == b) {
        return std::sqrt(apx * apx + apy * apy);
    }
    return std::fabs(abx * apy - aby * apx) / std::sqrt(abx * abx + aby * aby);
}

namespace {

// Earliest interior index with the maximum distance to the chord [first,last].
std::pair<size_t, double> farthest_point(const std::vector<Point>& pts, size_t first,
                                         size_t last) {
    size_t best = first;
    double best_d = -1.0;
    for (size_t i = first + 1; i < last; ++i) {
        const double d = perpendicular_distance(pts[i], pts[first], pts[last]);
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return {best, best_d};
}

} // namespace

Stroke rdp_stroke(const Stroke& s, double eps) {
    const auto& pts = s.points;
    if (pts.size() < 2) throw std::invalid_argument("rdp_stroke: stroke has < 2 points");
    if (pts.size() == 2) return s;

    std::vector<bool> keep(pts.size(), false);
    keep.front() = keep.back() = true;

    // Explicit stack instead of recursion; ranges are processed left-to-right
    // but the kept set is order-independent.
    std::vector<std::pair<size_t, size_t>> stack{{0, pts.size() - 1}};
    while (!stack.empty()) {
        auto [first, last] = stack.back();
        stack.pop_back();
        if (last - first < 2) continue;
        auto [idx, dist] = farthest_point(pts, first, last);
        if (dist > eps) {
            keep[idx] = true;
            stack.emplace_back(idx, last);
            stack.emplace_back(first, idx);
        }
    }

    Stroke out;
    out.points.reserve(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        if (keep[i]) out.points.push_back(pts[i]);
    }
    return out;
}

Drawing rdp_drawing(const Drawing& d, double eps) {
    Drawing out = d;
    for (auto& s : out.strokes) s = rdp_stroke(s, eps);
    return out;
}

SimplificationLadder build_ladder(const Drawing& d, double eps_start, double eps_step) {
    if (eps_start < 2.0) throw std::invalid_argument("build_ladder: eps_start must be >= 2");
    if (eps_step <= 0.0) throw std::invalid_argument("build_ladder: eps_step must be > 0");

    SimplificationLadder ladder;
    ladder.source = d;

    double eps = eps_start;
    for (;;) {
        Drawing simplified = rdp_drawing(d, eps);
        if (ladder.rungs.empty() ||
            ladder.rungs.back().drawing.strokes != simplified.strokes) {
            const int segs = segment_count(simplified);
            assert(ladder.rungs.empty() || segs <= ladder.rungs.back().segments);
            ladder.rungs.push_back(LadderRung{eps, std::move(simplified), segs});
        }
        const Drawing& current = ladder.rungs.back().drawing;
        bool all_single = true;
        for (const auto& s : current.strokes) {
            if (s.points.size() > 2) {
                all_single = false;
                break;
            }
        }
        if (all_single) break;
        eps += eps_step;
    }
    return ladder;
}

} // namespace teachsize
