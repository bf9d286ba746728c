"""Subgroup orbit analysis inside a finite Cayley ball.

Given a subgroup H specified by generating words, this module computes
the orbit H.e intersected with the ball, the intrinsic (subgroup word
metric) distances on it, quasi-isometry and quasiconvexity constants,
a per-distance-class stability profile of Morse gauges, distortion of
Gromov products under the inclusion, and the finite-scale limit
directions of the orbit (far-shell rays with measured gauges, merged
by endpoint proximity).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import presentation as pres
from .cayley import Ball, PathSeg
from .errors import EmptyOrbit, NoFarPoints
from .morse import (
    DEFAULT_BUDGET,
    DEFAULT_GRID,
    GaugeTable,
    QGridEntry,
    estimate_gauge,
    merge_tables,
)


class OrbitData:
    """The orbit H.e inside a ball, with intrinsic H-distances.

    ``points`` are ball vertex ids in ascending order.  ``depth[v]`` is
    the least number of subgroup-generator steps from e to v along
    in-ball orbit points; pairwise intrinsic distances are looked up by
    translating the pair to the basepoint, and are None (unknown) when
    the translate leaves the window."""

    def __init__(self, b: Ball, h: pres.SubgroupSpec):
        self.ball = b
        self.subgroup = h
        g = b.group
        steps = []
        for w in h.sub_generators:
            steps.append(w)
            steps.append(pres.inverse(w))
        depth: Dict[int, int] = {0: 0}
        word_depth: Dict[pres.Word, int] = {pres.IDENTITY: 0}
        clipped = False
        frontier = [pres.IDENTITY]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for cur in frontier:
                for s in steps:
                    w = pres.multiply(g, cur, s)
                    if w in word_depth:
                        continue
                    v = b.index.get(w)
                    if v is None:
                        clipped = True
                        continue
                    word_depth[w] = d
                    depth[v] = d
                    nxt.append(w)
            frontier = nxt
        self.points: Tuple[int, ...] = tuple(sorted(depth))
        self.point_set = frozenset(self.points)
        self.depth = depth
        self._word_depth = word_depth
        self.window_clipped = clipped

    def intrinsic_dist(self, u: int, v: int) -> Optional[int]:
        """H-word-metric distance, or None if the geodesic may exit the
        window (the translated difference is not an in-ball orbit point)."""
        g = self.ball.group
        w = pres.multiply(g, pres.inverse(self.ball.vertices[u]),
                          self.ball.vertices[v])
        return self._word_depth.get(w)

    def __len__(self):
        return len(self.points)


def compute_orbit(b: Ball, h: pres.SubgroupSpec) -> OrbitData:
    """Closure of {e} under the subgroup generators and their inverses,
    intersected with the ball."""
    if h.ambient != b.group:
        raise ValueError("subgroup is over a different group")
    return OrbitData(b, h)


def _sound_pairs(o: OrbitData):
    b = o.ball
    pts = o.points
    for i, u in enumerate(pts):
        for v in pts[i + 1:]:
            if b.interior_sound(u, v):
                yield u, v


@dataclass
class QIResult:
    K: Fraction
    C: Fraction
    witness: Optional[Tuple[int, int]]


def qi_constants(o: OrbitData, step=Fraction(1, 2)) -> QIResult:
    """Least (C, K)-lexicographic pair on the half-step grid with
    d_H(u,v)/K - C <= d(u,v) <= K*d_H(u,v) + C over all interior-sound
    orbit pairs with known intrinsic distance.

    C is minimized first: the additive constant is the part that true
    quasi-isometric embeddings of subgroups do not need, so the fit
    charges multiplicative distortion to K (an undistorted cyclic
    subgroup like <ab> in a free group reports (2, 0), not (1, n))."""
    if not o.points:
        raise EmptyOrbit("orbit has no points")
    b = o.ball
    best_k = Fraction(1)
    witness = None
    for u, v in _sound_pairs(o):
        dh = o.intrinsic_dist(u, v)
        if dh is None:
            continue
        dg = b.group_distance(u, v)
        need = max(Fraction(dg, dh), Fraction(dh, dg))
        if need > best_k:
            best_k = need
            witness = (u, v)
    num = (best_k / step).__ceil__()
    return QIResult(num * step, Fraction(0), witness)


@dataclass
class QCResult:
    value: int
    truncated: bool


def quasiconvexity_constant(b: Ball, o: OrbitData,
                            geodesic_limit: int = 16,
                            max_pairs: Optional[int] = 20000) -> QCResult:
    """Max distance from any enumerated geodesic between interior-sound
    orbit pairs to the orbit set.  ``truncated`` flags a hit enumeration
    or pair cap (the value is then a lower bound)."""
    if not o.points:
        raise EmptyOrbit("orbit has no points")
    dist_to_orbit = b.multi_source_distance(o.points)
    worst = 0
    truncated = False
    seen = 0
    for u, v in _sound_pairs(o):
        if max_pairs is not None and seen >= max_pairs:
            truncated = True
            break
        seen += 1
        paths = b.geodesics_between(u, v, limit=geodesic_limit)
        if len(paths) >= geodesic_limit:
            truncated = True
        for p in paths:
            for x in p:
                if dist_to_orbit[x] > worst:
                    worst = int(dist_to_orbit[x])
    return QCResult(worst, truncated)


class _ClippedOrbit:
    """Read-only view of an orbit's first points, for pair sampling."""

    def __init__(self, o: OrbitData, n: int):
        self.ball = o.ball
        self.points = o.points[:n]


def _clipped_view(o: OrbitData, n: int) -> "_ClippedOrbit":
    return _ClippedOrbit(o, n)


def stability_profile(b: Ball, o: OrbitData,
                      grid: Sequence[QGridEntry] = DEFAULT_GRID,
                      budget: int = DEFAULT_BUDGET,
                      pairs_per_class: int = 16,
                      max_points: Optional[int] = None) -> Dict[int, GaugeTable]:
    """Per-distance-class aggregated gauge tables over interior-sound
    orbit pairs (first canonical geodesic per pair, pointwise maximum
    per class, first ``pairs_per_class`` pairs in canonical order).
    ``max_points`` restricts pair generation to the first orbit points
    in canonical order (quadratic pair enumeration on large orbits).

    A length-constant profile is finite-scale evidence for a common
    gauge (stability); growth across classes refutes one at this
    radius."""
    src = o
    if max_points is not None and len(o.points) > max_points:
        src = _clipped_view(o, max_points)
    buckets: Dict[int, List[Tuple[int, int]]] = {}
    for u, v in _sound_pairs(src):
        d = b.group_distance(u, v)
        got = buckets.setdefault(d, [])
        if len(got) < pairs_per_class:
            got.append((u, v))
    profile: Dict[int, GaugeTable] = {}
    for d in sorted(buckets):
        tables = []
        for u, v in buckets[d]:
            gamma = b.first_geodesic(u, v)
            tables.append(estimate_gauge(b, gamma, grid, budget))
        profile[d] = merge_tables(tables)
    return profile


@dataclass
class DistortionResult:
    A: Fraction
    B: Fraction
    witness: Optional[Tuple[int, int, int]]


def _usable_triples(o: OrbitData):
    """Orbit triples with all three pairs interior-sound and intrinsic
    distances known."""
    b = o.ball
    pts = o.points
    for i, x in enumerate(pts):
        for j in range(i + 1, len(pts)):
            y = pts[j]
            if not b.interior_sound(x, y) or o.intrinsic_dist(x, y) is None:
                continue
            for z in pts[j + 1:]:
                if (b.interior_sound(x, z) and b.interior_sound(y, z)
                        and o.intrinsic_dist(x, z) is not None
                        and o.intrinsic_dist(y, z) is not None):
                    yield x, y, z


def product_distortion(b: Ball, o: OrbitData,
                       step=Fraction(1, 2),
                       max_triples: Optional[int] = None) -> DistortionResult:
    """Fits the least grid A covering the multiplicative spread of
    intrinsic vs ambient Gromov products, then the least grid B making
    intrinsic/A - B <= ambient <= A*intrinsic + B hold on every usable
    triple (both products are exact half-integers).  Triples where one
    product vanishes are left to the additive constant."""
    if not o.points:
        raise EmptyOrbit("orbit has no points")
    best_a = Fraction(1)
    witness = None
    seen = 0
    for x, y, z in _usable_triples(o):
        if max_triples is not None and seen >= max_triples:
            break
        seen += 1
        amb = b.gromov_product(x, y, z)
        dh = o.intrinsic_dist
        intr = Fraction(dh(z, x) + dh(z, y) - dh(x, y), 2)
        if amb == intr or min(amb, intr) == 0:
            continue
        need = max(amb / intr, intr / amb)
        if need > best_a:
            best_a = need
            witness = (x, y, z)
    num = (best_a / step).__ceil__()
    A = num * step
    B = Fraction(0)
    seen = 0
    for x, y, z in _usable_triples(o):
        if max_triples is not None and seen >= max_triples:
            break
        seen += 1
        amb = b.gromov_product(x, y, z)
        dh = o.intrinsic_dist
        intr = Fraction(dh(z, x) + dh(z, y) - dh(x, y), 2)
        gap = max(intr / A - amb, amb - A * intr)
        if gap > B:
            num = (gap / step).__ceil__()
            B = num * step
            witness = (x, y, z)
    return DistortionResult(A, B, witness)


def check_product_distortion(b: Ball, o: OrbitData, A, B) -> bool:
    """Independent pass re-verifying the fitted inequality on every
    usable triple with raw distance formulas (no Gromov-product
    helper)."""
    A, B = Fraction(A), Fraction(B)
    for x, y, z in _usable_triples(o):
        d = b.group_distance
        amb = Fraction(d(z, x) + d(z, y) - d(x, y), 2)
        dh = o.intrinsic_dist
        intr = Fraction(dh(z, x) + dh(z, y) - dh(x, y), 2)
        if intr / A - B > amb or amb > A * intr + B:
            return False
    return True


@dataclass
class LimitDirection:
    """A far-shell orbit ray with its measured gauge.  After merging,
    ``members`` lists the endpoints of all directions identified with
    this one (the representative is the least-index endpoint)."""

    ray: PathSeg
    gauge: GaugeTable
    endpoint: int
    members: Tuple[int, ...] = ()


def limit_directions(b: Ball, o: OrbitData,
                     gauge_grid: Sequence[QGridEntry] = DEFAULT_GRID,
                     cutoff: Fraction = Fraction(9, 10),
                     budget: int = DEFAULT_BUDGET,
                     max_directions: Optional[int] = None,
                     base: int = 0) -> List[LimitDirection]:
    """First canonical geodesic from ``base`` to each far-shell orbit
    point (distance >= cutoff*R from e), with measured gauges.

    Directions whose endpoints lie within 2*(pooled measured N(3,0)) of
    each other are merged; the merged gauge is the pointwise maximum
    over members, the ray is the representative's."""
    if not o.points:
        raise EmptyOrbit("orbit has no points")
    shell = Fraction(cutoff) * b.radius
    far = [p for p in o.points if p != base and b.norm(p) >= shell]
    if not far:
        raise NoFarPoints("no orbit point at distance >= %s from e" % shell)
    if max_directions is not None:
        far = far[:max_directions]
    raw: List[LimitDirection] = []
    for p in far:
        ray = b.first_geodesic(base, p, relaxed=True)
        raw.append(LimitDirection(ray, estimate_gauge(b, ray, gauge_grid,
                                                      budget), p, (p,)))
    # Union-find merge by endpoint proximity.
    parent = list(range(len(raw)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(raw)):
        for j in range(i + 1, len(raw)):
            ni = raw[i].gauge.value(3, 0)
            nj = raw[j].gauge.value(3, 0)
            if b.group_distance(raw[i].endpoint, raw[j].endpoint) \
                    <= 2 * max(ni, nj):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: Dict[int, List[int]] = {}
    for i in range(len(raw)):
        groups.setdefault(find(i), []).append(i)
    out = []
    for root in sorted(groups):
        members = groups[root]
        gauge = merge_tables([raw[i].gauge for i in members])
        out.append(LimitDirection(
            raw[root].ray, gauge, raw[root].endpoint,
            tuple(raw[i].endpoint for i in members),
        ))
    return out
