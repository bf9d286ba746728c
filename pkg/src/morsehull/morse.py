"""Empirical Morse gauges.

For a geodesic segment gamma, the gauge entry M(K,C) is the worst detour
of any unit-step (K,C)-quasigeodesic path in the ball with the same
endpoints.  The search is a depth-first enumeration with feasibility
pruning; a node budget turns an exploding search into a flagged lower
bound instead of a silent wrong answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import presentation as _pres
from .cayley import Ball, PathSeg
from .errors import MissingRequiredGridEntry, NotInteriorSound


def _rat(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True, order=True)
class QGridEntry:
    """A quasigeodesic parameter pair (K, C), K >= 1, C >= 0."""

    K: Fraction
    C: Fraction

    def __post_init__(self):
        object.__setattr__(self, "K", _rat(self.K))
        object.__setattr__(self, "C", _rat(self.C))
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.C < 0:
            raise ValueError("C must be >= 0")

    def __str__(self):
        return "(%s,%s)" % (self.K, self.C)


MANDATORY_ENTRIES = (
    QGridEntry(Fraction(1), Fraction(0)),
    QGridEntry(Fraction(3), Fraction(0)),
    QGridEntry(Fraction(5), Fraction(0)),
)

DEFAULT_GRID = (
    QGridEntry(Fraction(1), Fraction(0)),
    QGridEntry(Fraction(2), Fraction(0)),
    QGridEntry(Fraction(3), Fraction(0)),
    QGridEntry(Fraction(5), Fraction(0)),
    QGridEntry(Fraction(1), Fraction(4)),
    QGridEntry(Fraction(2), Fraction(2)),
)

DEFAULT_BUDGET = 10_000_000


@dataclass
class SearchResult:
    """Outcome of one max_detour search."""

    M: int
    exhaustive: bool
    witness: PathSeg
    nodes: int


class GaugeTable:
    """Measured detour bounds per grid entry for one geodesic segment
    (or a pointwise maximum over several segments)."""

    def __init__(self, segment_length: int):
        self.segment_length = segment_length
        self.entries: Dict[QGridEntry, int] = {}
        self.exhaustive: Dict[QGridEntry, bool] = {}
        self.witnesses: Dict[QGridEntry, PathSeg] = {}

    def set(self, e: QGridEntry, M: int, exhaustive: bool,
            witness: PathSeg = ()) -> None:
        self.entries[e] = M
        self.exhaustive[e] = exhaustive
        self.witnesses[e] = witness

    def value(self, K, C) -> int:
        e = QGridEntry(_rat(K), _rat(C))
        if e not in self.entries:
            raise MissingRequiredGridEntry("no gauge entry for %s" % e)
        return self.entries[e]

    def has(self, K, C) -> bool:
        return QGridEntry(_rat(K), _rat(C)) in self.entries

    def all_exhaustive(self) -> bool:
        return all(self.exhaustive.values())

    def merge_max(self, other: "GaugeTable") -> "GaugeTable":
        """Pointwise maximum on the common grid; exhaustive only where
        both sides were."""
        out = GaugeTable(max(self.segment_length, other.segment_length))
        for e in self.entries:
            if e in other.entries:
                a, b = self.entries[e], other.entries[e]
                src = self if a >= b else other
                out.set(e, max(a, b),
                        self.exhaustive[e] and other.exhaustive[e],
                        src.witnesses.get(e, ()))
        return out

    def dominated_by(self, other: "GaugeTable") -> bool:
        return all(
            e in other.entries and self.entries[e] <= other.entries[e]
            for e in self.entries
        )

    def to_csv(self) -> str:
        lines = ["K,C,M,exhaustive,segment_length"]
        for e in sorted(self.entries):
            lines.append("%s,%s,%d,%s,%d" % (
                e.K, e.C, self.entries[e],
                "true" if self.exhaustive[e] else "false",
                self.segment_length,
            ))
        return "\n".join(lines) + "\n"

    def __repr__(self):
        body = ", ".join(
            "%s:%d%s" % (e, self.entries[e], "" if self.exhaustive[e] else "*")
            for e in sorted(self.entries)
        )
        return "GaugeTable(len=%d, {%s})" % (self.segment_length, body)


def merge_tables(tables: Sequence[GaugeTable]) -> GaugeTable:
    it = iter(tables)
    out = next(it)
    for t in it:
        out = out.merge_max(t)
    return out


def is_geodesic(b: Ball, p: Sequence[int]) -> bool:
    if len(p) < 1:
        return False
    for u, v in zip(p, p[1:]):
        if b.group_distance(u, v) != 1:
            return False
    return b.group_distance(p[0], p[-1]) == len(p) - 1


def is_quasigeodesic(b: Ball, p: Sequence[int], K, C) -> bool:
    """Lower quasigeodesic bound (j-i)/K - C <= d(p_i, p_j) for all i < j.
    The upper bound holds automatically for unit-step paths."""
    K, C = _rat(K), _rat(C)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if not b.interior_sound(p[i], p[j]):
                raise NotInteriorSound(
                    "path pair (%d, %d) not interior-sound" % (p[i], p[j])
                )
            if j - i > K * (b.group_distance(p[i], p[j]) + C):
                return False
    return True


class _Abort(Exception):
    pass


class _DetourSearch:
    """DFS over unit-step paths from gamma(0) to gamma(end) subject to
    the incremental pairwise lower bounds of a (K,C)-quasigeodesic.

    Feasibility pruning: every prefix maintains the tightest completion
    cap  n_cap = min_i (i + maxgap(d(p_i, end)))  and a child at position
    j is discarded when even the geodesic tail j + d(child, end) cannot
    finish within it.  Children are ordered by descending deviation from
    gamma (then by edge rank, stay-step last) so the deepest detours are
    found before any budget truncation.
    """

    def __init__(self, b: Ball, gamma: Sequence[int], K, C,
                 budget: int, threshold: Optional[int], prune: bool):
        self.b = b
        self.gamma = tuple(gamma)
        self.K, self.C = _rat(K), _rat(C)
        self.budget = budget
        self.threshold = threshold
        self.prune = prune
        self.start, self.end = gamma[0], gamma[-1]
        L = len(gamma) - 1
        maxd = 2 * b.radius + 1
        self.maxgap = [
            math.floor(self.K * (d + self.C)) for d in range(maxd + 1)
        ]
        self.ncap0 = self.maxgap[L]
        self._dist: Dict[Tuple[int, int], int] = {}
        self._dev: Dict[int, int] = {}
        self._dend: Dict[int, int] = {}
        # In-ball steps needed to reach the end vertex: a valid stronger
        # reachability bound than the group distance, since search paths
        # walk inside the ball.
        self.steps_to_end = b.bfs_from(self.end)
        # With maxgap(0) <= 1 a revisit (minimum gap 2) violates the
        # pairwise constraint outright, so the path is self-avoiding and
        # can never come back through an articulation vertex: any step
        # into a block hanging away from the end vertex is dead.
        self.block_prune = prune and self.maxgap[0] <= 1 and len(gamma) > 1
        if self.block_prune:
            self._edge_block, self._block_parent = b.rooted_blocks(self.end)
        self.best = -1
        self.witness: PathSeg = self.gamma
        self.nodes = 0
        self.exhaustive = True

    def dist(self, u: int, v: int) -> int:
        if u == v:
            return 0
        key = (u, v) if u < v else (v, u)
        d = self._dist.get(key)
        if d is None:
            b = self.b
            d = _pres.distance_words(b.group, b.vertices[u], b.vertices[v])
            self._dist[key] = d
        return d

    def dev(self, v: int) -> int:
        d = self._dev.get(v)
        if d is None:
            d = min(self.dist(v, t) for t in self.gamma)
            self._dev[v] = d
        return d

    def dend(self, v: int) -> int:
        d = self._dend.get(v)
        if d is None:
            d = self.dist(v, self.end)
            self._dend[v] = d
        return d

    def run(self) -> SearchResult:
        self.path = [self.start]
        try:
            self._rec(self.start, 0, self.ncap0, 0)
        except _Abort:
            pass
        return SearchResult(max(self.best, 0), self.exhaustive,
                            self.witness, self.nodes)

    def _rec(self, cur: int, j: int, ncap: int, curdev: int) -> None:
        b = self.b
        if cur == self.end:
            if curdev > self.best:
                self.best = curdev
                self.witness = tuple(self.path)
                if self.threshold is not None and self.best > self.threshold:
                    self.exhaustive = False
                    raise _Abort
        if j >= ncap:
            return
        path = self.path
        maxgap = self.maxgap
        jn = j + 1
        # Stay-steps (repeating the current vertex) are never explored:
        # deleting a stay from a valid path keeps every pairwise
        # constraint satisfied (gaps only shrink) and visits the same
        # vertices, so stay-free paths attain the same maximum detour.
        candidates: List[Tuple[int, int, int]] = []
        nbrs = [(w, rank) for rank, (w, _, _) in enumerate(b.edges[cur])]
        dist = self.dist
        for w, rank in nbrs:
            if self.prune:
                if self.block_prune:
                    key = (cur, w) if cur < w else (w, cur)
                    if self._block_parent.get(self._edge_block[key]) == cur:
                        continue
                ncap2 = min(ncap, jn + maxgap[self.dend(w)])
                if jn + self.steps_to_end[w] > ncap2:
                    continue
            else:
                ncap2 = ncap
            ok = True
            for i in range(len(path)):
                if jn - i > maxgap[dist(path[i], w)]:
                    ok = False
                    break
            if ok:
                candidates.append((w, rank, ncap2))
        candidates.sort(key=lambda t: (-self.dev(t[0]), t[1]))
        for w, _, ncap2 in candidates:
            devw = self.dev(w)
            newdev = curdev if curdev > devw else devw
            if self.prune and newdev <= self.best:
                # Any future point p of this subtree needs d(w,p) >=
                # dev(p) - dev(w) outbound steps plus dev(p) return steps
                # within the ncap2 budget, so dev(p) is capped; skip the
                # subtree when it cannot beat the current maximum.
                if (ncap2 - jn + devw) // 2 <= self.best:
                    continue
            self.nodes += 1
            if self.nodes > self.budget:
                self.exhaustive = False
                raise _Abort
            path.append(w)
            self._rec(w, jn, ncap2, newdev)
            path.pop()


def max_detour(b: Ball, gamma: Sequence[int], K, C,
               budget: int = DEFAULT_BUDGET,
               threshold: Optional[int] = None) -> SearchResult:
    """Worst detour M of any in-ball unit-step (K,C)-quasigeodesic with
    gamma's endpoints; exhaustive=False means M is only a lower bound
    (budget hit, or early exit past ``threshold``)."""
    _validate_segment(b, gamma)
    return _DetourSearch(b, gamma, K, C, budget, threshold, prune=True).run()


def max_detour_brute(b: Ball, gamma: Sequence[int], K, C) -> SearchResult:
    """Reference search without reachability pruning, ordering, or
    budget: only the defining pairwise constraints and the endpoint depth
    cap.  Oracle for the pruned search on short segments."""
    _validate_segment(b, gamma)
    return _DetourSearch(b, gamma, K, C, budget=1 << 62,
                         threshold=None, prune=False).run()


def _validate_segment(b: Ball, gamma: Sequence[int]) -> None:
    if not is_geodesic(b, gamma):
        raise ValueError("gamma must be a geodesic edge-path")
    # A geodesic edge-path realizes its endpoint distance inside the
    # ball by existing; interior soundness is not required (far-shell
    # segments could never satisfy it), the search measures the in-ball
    # detour maximum either way.
    if b.group_distance(gamma[0], gamma[-1]) != len(gamma) - 1:
        raise NotInteriorSound("gamma endpoints not realized in the ball")


def estimate_gauge(b: Ball, gamma: Sequence[int],
                   grid: Sequence[QGridEntry] = DEFAULT_GRID,
                   budget: int = DEFAULT_BUDGET) -> GaugeTable:
    """max_detour per grid entry.  The grid must contain (1,0), (3,0)
    and (5,0): downstream bounds are expressed through those entries."""
    for e in MANDATORY_ENTRIES:
        if e not in grid:
            raise MissingRequiredGridEntry("grid must contain %s" % e)
    table = GaugeTable(len(gamma) - 1)
    for e in grid:
        r = max_detour(b, gamma, e.K, e.C, budget=budget)
        table.set(e, r.M, r.exhaustive, r.witness)
    return table


def is_morse_with_gauge(b: Ball, gamma: Sequence[int], g: GaugeTable,
                        budget: int = DEFAULT_BUDGET) -> bool:
    """True iff max_detour(gamma, K, C) <= g(K,C) for every grid entry,
    each verdict settled by an exhaustive (or early-exit) search."""
    for e, bound in sorted(g.entries.items()):
        r = max_detour(b, gamma, e.K, e.C, budget=budget, threshold=bound)
        if r.M > bound:
            return False
        if not r.exhaustive:
            return False
    return True


def parse_grid(text: str) -> Tuple[QGridEntry, ...]:
    """Grid syntax: semicolon-separated K,C pairs, e.g. '1,0; 3,0; 5,0'."""
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        k_txt, sep, c_txt = item.partition(",")
        if not sep:
            raise ValueError("grid entry %r must be 'K,C'" % item)
        out.append(QGridEntry(Fraction(k_txt.strip()), Fraction(c_txt.strip())))
    return tuple(out)


def grid_to_str(grid: Sequence[QGridEntry]) -> str:
    return "; ".join("%s,%s" % (e.K, e.C) for e in grid)
