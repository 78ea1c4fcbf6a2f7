#!/usr/bin/env python3
"""Designs the car_ladder.ndjson fixture.

Constructs a 7-stroke car-like drawing whose RDP ladder (eps from 2 in unit
steps, point kept iff distance > eps, earliest max index wins) contains rungs
with 48, 17, 12 and 7 segments first appearing at eps = 2, 13, 27 and 46, and
terminates at 46 with every stroke a single segment.

Each interior point is assigned a target "drop epsilon" (the first integer
threshold at which RDP removes it). Targets are met behaviorally: candidate
coordinates are searched and the whole stroke's schedule is recomputed by
brute force, so recursive interactions are accounted for exactly.

Schedule plan (drop epsilon per interior point):
  S1 body zigzag   25 points, anywhere in [3..13]
  S2 hood zigzag    5 points, anywhere in [3..13]
  S3 roof           [13, 18]
  S4 window block   [16, 20, 27, 24]
  S5 wheel          [30, 46, 28]
  S6 wheel          [29, 42]
  S7 bumper         none (single segment)
Buckets: 31 drops in [3..13] (>=1 at 13), 5 in [14..27] (one at 27), 5 in
[28..46] (one at 46) -> segments 48@2, 17@13, 12@27, 7@46, all first
appearances.
"""

import itertools
import json
import math


def line_distance(p, a, b):
    abx, aby = b[0] - a[0], b[1] - a[1]
    apx, apy = p[0] - a[0], p[1] - a[1]
    if a == b:
        return math.hypot(apx, apy)
    return abs(abx * apy - aby * apx) / math.hypot(abx, aby)


def rdp(points, eps):
    if len(points) <= 2:
        return list(points)
    keep = [False] * len(points)
    keep[0] = keep[-1] = True
    stack = [(0, len(points) - 1)]
    while stack:
        first, last = stack.pop()
        if last - first < 2:
            continue
        best, idx = -1.0, first
        for i in range(first + 1, last):
            d = line_distance(points[i], points[first], points[last])
            if d > best:
                best, idx = d, i
        if best > eps:
            keep[idx] = True
            stack.append((first, idx))
            stack.append((idx, last))
    return [p for p, k in zip(points, keep) if k]


def drop_schedule(points, eps_max=300):
    """First integer eps (from 1) at which each interior point is gone."""
    n = len(points)
    drops = [None] * (n - 2)
    for eps in range(1, eps_max + 1):
        kept = set(map(tuple, rdp(points, eps)))
        for i in range(1, n - 1):
            if drops[i - 1] is None and tuple(points[i]) not in kept:
                drops[i - 1] = eps
        if len(kept) == 2 and all(d is not None for d in drops):
            return drops
    raise SystemExit("drop_schedule did not converge")


def search_points(prefix, suffix, target, box):
    """All integer points q with drop_schedule(prefix+[q]+suffix) == target."""
    x0, x1, y0, y1 = box
    out = []
    for qx in range(x0, x1 + 1):
        for qy in range(y0, y1 + 1):
            pts = prefix + [(qx, qy)] + suffix
            if len(set(map(tuple, pts))) != len(pts):
                continue
            if drop_schedule(pts) == target:
                out.append((qx, qy))
    return out


def search_point(prefix, suffix, target, box):
    found = search_points(prefix, suffix, target, box)
    if not found:
        raise SystemExit(f"no point found for target {target} in box {box}")
    return found[0]


# --- strokes -------------------------------------------------------------------

# S1 body: long zigzag along y=150. Amplitudes keep all recursive distances in
# (2, 13]; verified behaviorally below.
amps = [5, -4, 6, -5, 7, -6, 4, -7, 5, -6, 7, -4, 6, -5, 4, -6, 7, -5, 6, -4, 5, -7, 6, -5, 4]
s1 = [(6, 150)]
x = 6
for a in amps:
    x += 9
    s1.append((x, 150 + a))
x += 9
s1.append((x, 150))

# S2 hood detail: short zigzag at y=120.
s2 = [(30, 120)]
for i, a in enumerate([6, -5, 7, -6, 5]):
    s2.append((30 + 12 * (i + 1), 120 + a))
s2.append((30 + 12 * 6, 120))

sched1 = drop_schedule(s1)
sched2 = drop_schedule(s2)
assert all(3 <= d <= 13 for d in sched1), sched1
assert all(3 <= d <= 13 for d in sched2), sched2

# S3 roof: apex 18 px above a horizontal chord drops at exactly 18; the flank
# is searched to drop at exactly 13.
s3_a, s3_apex, s3_e = (60, 118), (120, 100), (180, 118)
assert drop_schedule([s3_a, s3_apex, s3_e]) == [18]
s3_l = search_point([s3_a], [s3_apex, s3_e], [13, 18], (70, 112, 101, 117))
s3 = [s3_a, s3_l, s3_apex, s3_e]

# S4 window block: apex 27 above the chord; flanks at 20, 16 (left, nested)
# and 24 (right). The inner flank needs a long enough A-L2 chord, so try every
# (L2, R1) pair until an L1 fits.
s4_a, s4_apex, s4_e = (40, 95), (130, 68), (220, 95)
assert drop_schedule([s4_a, s4_apex, s4_e]) == [27]
s4 = None
for s4_l2 in search_points([s4_a], [s4_apex, s4_e], [20, 27], (60, 125, 45, 94)):
    for s4_r1 in search_points([s4_a, s4_l2, s4_apex], [s4_e], [20, 27, 24],
                               (140, 215, 45, 94)):
        l1s = search_points([s4_a], [s4_l2, s4_apex, s4_r1, s4_e], [16, 20, 27, 24],
                            (41, s4_l2[0] - 1, 45, 94))
        if l1s:
            s4 = [s4_a, l1s[0], s4_l2, s4_apex, s4_r1, s4_e]
            break
    if s4:
        break
if s4 is None:
    raise SystemExit("no S4 configuration found")

# S5 wheel: apex 46 below the chord (y grows downward); flanks at 30 and 28
# (the short apex-edge chords cap how far a flank can sit from them).
s5_a, s5_apex, s5_e = (30, 190), (80, 236), (130, 190)
assert drop_schedule([s5_a, s5_apex, s5_e]) == [46]
s5_l = search_point([s5_a], [s5_apex, s5_e], [30, 46], (35, 79, 191, 236))
s5_r = search_point([s5_a, s5_l, s5_apex], [s5_e], [30, 46, 28], (81, 128, 191, 236))
s5 = [s5_a, s5_l, s5_apex, s5_r, s5_e]

# S6 wheel: apex 42 below the chord; flank at 29.
s6_a, s6_apex, s6_e = (150, 190), (195, 232), (240, 190)
assert drop_schedule([s6_a, s6_apex, s6_e]) == [42]
s6_l = search_point([s6_a], [s6_apex, s6_e], [29, 42], (155, 194, 191, 232))
s6 = [s6_a, s6_l, s6_apex, s6_e]

# S7 bumper: a single segment.
s7 = [(2, 170), (28, 170)]

strokes = [s1, s2, s3, s4, s5, s6, s7]

# --- verification ----------------------------------------------------------------

prev = None
rungs = []
eps = 2
while True:
    simplified = [rdp(s, eps) for s in strokes]
    seg = sum(len(s) - 1 for s in simplified)
    if simplified != prev:
        rungs.append((eps, seg))
        prev = simplified
    if all(len(s) == 2 for s in simplified):
        break
    eps += 1

print("rungs:", rungs)
targets = {2: 48, 13: 17, 27: 12, 46: 7}
by_eps = dict(rungs)
ok = True
for e, want in targets.items():
    if by_eps.get(e) != want:
        print(f"MISMATCH at eps={e}: want {want}, got {by_eps.get(e)}")
        ok = False
if rungs[-1][0] != 46:
    print(f"MISMATCH: ladder ends at eps={rungs[-1][0]}, want 46")
    ok = False
seq = [seg for _, seg in rungs]
if seq != sorted(seq, reverse=True):
    print("MISMATCH: segment counts not non-increasing")
    ok = False
if [rdp(s, 2) for s in strokes] != [list(s) for s in strokes]:
    print("MISMATCH: eps=2 altered the source drawing")
    ok = False
for s in strokes:
    for (px, py) in s:
        assert 0 <= px <= 255 and 0 <= py <= 255, (px, py)
if not ok:
    raise SystemExit("fixture constraints not met")

record = {
    "key_id": "car-ladder",
    "word": "car",
    "recognized": True,
    "drawing": [[[p[0] for p in s], [p[1] for p in s]] for s in strokes],
}
with open("car_ladder.ndjson", "w") as f:
    f.write(json.dumps(record) + "\n")
print("wrote car_ladder.ndjson")
