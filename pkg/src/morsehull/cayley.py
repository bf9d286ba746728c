"""Finite Cayley-graph balls with an exact metric layer.

A Ball stores the radius-R ball of a Cayley graph: vertices are
normal-form words, edges are generator multiplications.  Distances come
in two flavors:

* ``distance`` is the stored in-ball metric (BFS inside the ball);
* ``group_distance`` is the true group distance, computed algebraically
  as the length of u^-1 v.

For interior-sound pairs the two agree (any geodesic between them stays
inside the ball by the triangle inequality); higher layers quantify only
over interior-sound data to avoid truncation artifacts.  All metric
values are integers; Gromov products are exact half-integers.
"""

from __future__ import annotations

from collections import OrderedDict, deque
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import presentation as pres
from .errors import (
    NotInteriorSound,
    OutOfBall,
    ResourceLimit,
    TooFewVertices,
)
from .presentation import GroupSpec, Word

PathSeg = Tuple[int, ...]

_UNSOUND = 1 << 20  # sentinel distance used to void unsound quadruples

DEFAULT_MAX_VERTICES = 2_000_000


class Ball:
    """Radius-R ball of the Cayley graph of ``group``; vertex 0 is e."""

    def __init__(self, group: GroupSpec, radius: int, vertices: List[Word]):
        self.group = group
        self.radius = radius
        self.vertices = vertices
        self.index = {w: i for i, w in enumerate(vertices)}
        self.norms = [len(w) for w in vertices]
        # edges[v]: list of (neighbor, gen_index, sign) in canonical letter
        # order; includes only neighbors inside the ball.
        self.edges: List[List[Tuple[int, int, int]]] = []
        letters = group.letters()
        for w in vertices:
            row = []
            for gi, s in letters:
                nb = pres.multiply(group, w, ((gi, s),))
                j = self.index.get(nb)
                if j is not None:
                    row.append((j, gi, s))
            self.edges.append(row)
        self._bfs_cache: "OrderedDict[int, np.ndarray]" = (
            OrderedDict()
        )
        self._bfs_cache_cap = 512
        self._gd_cache: dict = {}
        self._block_cut = None
        self._rooted_cache: "OrderedDict" = OrderedDict()

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    def word(self, v: int) -> Word:
        self._check(v)
        return self.vertices[v]

    def index_of(self, w: Word) -> int:
        i = self.index.get(w)
        if i is None:
            raise OutOfBall("word of length %d not in ball of radius %d"
                            % (len(w), self.radius))
        return i

    def norm(self, v: int) -> int:
        self._check(v)
        return self.norms[v]

    def _check(self, v: int) -> None:
        if not (0 <= v < len(self.vertices)):
            raise OutOfBall("vertex %r not in ball" % (v,))

    def neighbors(self, v: int) -> List[Tuple[int, int, int]]:
        self._check(v)
        return self.edges[v]

    # -- metric layer -------------------------------------------------------

    def group_distance(self, u: int, v: int) -> int:
        """True group distance d(u, v) = |u^-1 v|, independent of R."""
        self._check(u)
        self._check(v)
        if u == v:
            return 0
        key = (u, v) if u < v else (v, u)
        d = self._gd_cache.get(key)
        if d is None:
            wu, wv = self.vertices[key[0]], self.vertices[key[1]]
            d = pres.distance_words(self.group, wu, wv)
            self._gd_cache[key] = d
        return d

    def bfs_from(self, u: int) -> np.ndarray:
        """In-ball BFS distances from u to every vertex (always finite:
        the ball is connected since normal forms are geodesic)."""
        self._check(u)
        cached = self._bfs_cache.get(u)
        if cached is not None:
            self._bfs_cache.move_to_end(u)
            return cached
        dist = np.full(len(self.vertices), -1, dtype=np.int32)
        dist[u] = 0
        frontier = [u]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for x in frontier:
                for y, _, _ in self.edges[x]:
                    if dist[y] < 0:
                        dist[y] = d
                        nxt.append(y)
            frontier = nxt
        if len(self._bfs_cache) >= self._bfs_cache_cap:
            self._bfs_cache.popitem(last=False)
        self._bfs_cache[u] = dist
        return dist

    def distance(self, u: int, v: int) -> int:
        """Stored in-ball metric (BFS within the ball)."""
        self._check(v)
        return int(self.bfs_from(u)[v])

    def interior_sound(self, u: int, v: int) -> bool:
        """True when every geodesic between u and v stays in the ball,
        so the stored distance is the true group distance."""
        return (
            self.norms[u] + self.norms[v] + self.group_distance(u, v)
            <= 2 * self.radius
        )

    def ball_realized(self, u: int, v: int) -> bool:
        """True when at least one geodesic between u and v stays in the
        ball, i.e. the stored distance equals the group distance."""
        return self.distance(u, v) == self.group_distance(u, v)

    def multi_source_distance(self, sources: Iterable[int]) -> np.ndarray:
        """In-ball BFS distance from the nearest of ``sources``."""
        dist = np.full(len(self.vertices), -1, dtype=np.int32)
        frontier = []
        for s in sources:
            self._check(s)
            if dist[s] < 0:
                dist[s] = 0
                frontier.append(s)
        d = 0
        while frontier:
            d += 1
            nxt = []
            for x in frontier:
                for y, _, _ in self.edges[x]:
                    if dist[y] < 0:
                        dist[y] = d
                        nxt.append(y)
            frontier = nxt
        return dist

    def block_cut(self):
        """Biconnected components of the ball graph, for search pruning.

        Returns (edge_block, block_cuts, vertex_blocks):
          edge_block: unordered vertex pair -> block id;
          block_cuts: block id -> tuple of its cut vertices;
          vertex_blocks: cut vertex -> tuple of incident block ids.
        Cached; the ball is immutable."""
        if self._block_cut is not None:
            return self._block_cut
        n = len(self.vertices)
        disc = [-1] * n
        low = [0] * n
        edge_block: dict = {}
        block_of_edges: List[List[Tuple[int, int]]] = []
        is_cut = [False] * n
        stack: List[Tuple[int, int]] = []
        timer = 0
        for root in range(n):
            if disc[root] >= 0:
                continue
            work = [(root, -1, iter([y for y, _, _ in self.edges[root]]))]
            disc[root] = low[root] = timer
            timer += 1
            root_children = 0
            while work:
                v, parent, it = work[-1]
                advanced = False
                for w in it:
                    if w == parent:
                        # parallel edges cannot occur in a Cayley ball of
                        # these torsion-free classes, so this skips exactly
                        # the tree edge back.
                        continue
                    if disc[w] < 0:
                        stack.append((v, w))
                        disc[w] = low[w] = timer
                        timer += 1
                        if v == root:
                            root_children += 1
                        work.append(
                            (w, v, iter([y for y, _, _ in self.edges[w]]))
                        )
                        advanced = True
                        break
                    elif disc[w] < disc[v]:
                        stack.append((v, w))
                        if disc[w] < low[v]:
                            low[v] = disc[w]
                if advanced:
                    continue
                work.pop()
                if work:
                    pv = work[-1][0]
                    if low[v] < low[pv]:
                        low[pv] = low[v]
                    if low[v] >= disc[pv]:
                        if pv != root or root_children >= 1:
                            comp = []
                            while stack and disc[stack[-1][0]] >= disc[v]:
                                comp.append(stack.pop())
                            if stack:
                                comp.append(stack.pop())
                            if comp:
                                block_of_edges.append(comp)
                        if pv != root:
                            is_cut[pv] = True
            if root_children >= 2:
                is_cut[root] = True
        blocks_verts: List[set] = []
        for bid, comp in enumerate(block_of_edges):
            verts = set()
            for a, c in comp:
                key = (a, c) if a < c else (c, a)
                edge_block[key] = bid
                verts.add(a)
                verts.add(c)
            blocks_verts.append(verts)
        block_cuts = {
            bid: tuple(sorted(v for v in verts if is_cut[v]))
            for bid, verts in enumerate(blocks_verts)
        }
        vertex_blocks: dict = {}
        for bid, verts in enumerate(blocks_verts):
            for v in verts:
                if is_cut[v]:
                    vertex_blocks.setdefault(v, []).append(bid)
        vertex_blocks = {v: tuple(bs) for v, bs in vertex_blocks.items()}
        self._block_cut = (edge_block, block_cuts, vertex_blocks)
        return self._block_cut

    def rooted_blocks(self, root: int):
        """(edge_block, parent) where parent maps each block id to the
        cut vertex separating it from ``root`` (root itself for blocks
        at a cut root, -1 for the root's own block).  Cached per root."""
        cached = self._rooted_cache.get(root)
        if cached is not None:
            self._rooted_cache.move_to_end(root)
            return cached
        edge_block, block_cuts, vertex_blocks = self.block_cut()
        parent: dict = {}
        queue = deque()
        if root in vertex_blocks:
            for blk in vertex_blocks[root]:
                parent[blk] = root
                queue.append(blk)
        elif self.edges[root]:
            w = self.edges[root][0][0]
            key = (root, w) if root < w else (w, root)
            blk = edge_block[key]
            parent[blk] = -1
            queue.append(blk)
        while queue:
            blk = queue.popleft()
            top = parent[blk]
            for cv in block_cuts[blk]:
                if cv == top:
                    continue
                for nxt in vertex_blocks[cv]:
                    if nxt not in parent:
                        parent[nxt] = cv
                        queue.append(nxt)
        self._rooted_cache[root] = (edge_block, parent)
        if len(self._rooted_cache) > 64:
            self._rooted_cache.popitem(last=False)
        return edge_block, parent

    # -- geodesics ----------------------------------------------------------

    def geodesics_between(self, u: int, v: int, limit: int = 64,
                          relaxed: bool = False) -> List[PathSeg]:
        """Geodesic edge-paths u -> v, canonically ordered by the label
        sequence of their steps, truncated at ``limit`` paths.

        By default the pair must be interior-sound, so the enumeration
        sees every geodesic.  With ``relaxed=True`` a ball-realized pair
        is accepted instead: the paths returned are exactly the geodesics
        that stay inside the ball (used for far-shell endpoints, whose
        geodesics can never all be interior)."""
        self._check(u)
        self._check(v)
        if not relaxed and not self.interior_sound(u, v):
            raise NotInteriorSound(
                "pair (%d, %d) is not interior-sound at radius %d"
                % (u, v, self.radius)
            )
        if relaxed and not self.ball_realized(u, v):
            raise NotInteriorSound(
                "pair (%d, %d) has no in-ball geodesic" % (u, v)
            )
        target_dist = self.group_distance(u, v)
        out: List[PathSeg] = []

        def rec(cur: int, remaining: int, prefix: List[int]) -> bool:
            if remaining == 0:
                out.append(tuple(prefix))
                return len(out) < limit
            for y, _, _ in self.edges[cur]:
                if self.group_distance(y, v) == remaining - 1:
                    prefix.append(y)
                    ok = rec(y, remaining - 1, prefix)
                    prefix.pop()
                    if not ok:
                        return False
            return True

        rec(u, target_dist, [u])
        return out

    def first_geodesic(self, u: int, v: int, relaxed: bool = False) -> PathSeg:
        return self.geodesics_between(u, v, limit=1, relaxed=relaxed)[0]

    # -- hyperbolicity ------------------------------------------------------

    def gromov_product(self, x: int, y: int, z: int) -> Fraction:
        """(x . y)_z = (d(z,x) + d(z,y) - d(x,y)) / 2, exact."""
        for a, b in ((x, y), (x, z), (y, z)):
            if not self.interior_sound(a, b):
                raise NotInteriorSound(
                    "pair (%d, %d) is not interior-sound" % (a, b)
                )
        num = (
            self.group_distance(z, x)
            + self.group_distance(z, y)
            - self.group_distance(x, y)
        )
        return Fraction(num, 2)

    def _subset_distance_matrix(self, verts: Sequence[int]) -> np.ndarray:
        """Pairwise group distances on verts, with unsound pairs replaced
        by a large sentinel so they void any quadruple they touch."""
        k = len(verts)
        words = [self.vertices[v] for v in verts]
        norms = np.array([len(w) for w in words], dtype=np.int64)
        g = self.group
        D = np.zeros((k, k), dtype=np.int64)
        for i in range(k):
            wi = words[i]
            row = D[i]
            for j in range(i + 1, k):
                d = pres.distance_words(g, wi, words[j])
                row[j] = d
                D[j, i] = d
        sound = (norms[:, None] + norms[None, :] + D) <= 2 * self.radius
        D[~sound] = _UNSOUND
        return D

    def four_point_delta(self, subset: Optional[Sequence[int]] = None) -> Fraction:
        """Least delta for the four-point condition over all quadruples in
        ``subset`` (default: every vertex) whose six pairs are all
        interior-sound.  Exact half-integer.

        Uses the sum formulation: for a quadruple, delta contribution is
        (S_max - S_mid)/2 over the three pairings S1 = d(x,y)+d(z,w) etc.
        The loop runs over pairs of interior-sound pairs in blocks, with
        unsound cross-pairs voided by the sentinel distance and a cutoff
        from the bound (S_max - S_mid) <= 2 min pairwise distance.
        """
        verts = list(range(len(self.vertices))) if subset is None else list(subset)
        for v in verts:
            self._check(v)
        if len(verts) < 4:
            raise TooFewVertices("four-point condition needs >= 4 vertices")
        D = self._subset_distance_matrix(verts)
        k = len(verts)
        iu, ju = np.triu_indices(k, 1)
        pd = D[iu, ju]
        keep = pd < _UNSOUND
        px, py, pdist = iu[keep], ju[keep], pd[keep]
        if px.size == 0:
            return Fraction(0)
        # Sort pairs by distance, descending, so the cutoff below can
        # discard whole column ranges once delta stops improving.
        order = np.argsort(-pdist, kind="stable")
        px, py, pdist = px[order], py[order], pdist[order]
        m = px.size
        best = 0  # doubled delta
        block = 2048
        for a in range(0, m, block):
            b = min(a + block, m)
            x, y, d1 = px[a:b], py[a:b], pdist[a:b]
            # columns are pairs with index <= current block end; the
            # contribution is bounded by 2*min(d1, d2) = 2*d2 here, so
            # stop at the first column with 2*d2 <= best.
            hi = int(np.searchsorted(-pdist[:b], -((best // 2) + 1), side="right"))
            if hi == 0:
                continue
            z, w, d2 = px[:hi], py[:hi], pdist[:hi]
            s1 = d1[:, None] + d2[None, :]
            s2 = D[x[:, None], z[None, :]] + D[y[:, None], w[None, :]]
            s3 = D[x[:, None], w[None, :]] + D[y[:, None], z[None, :]]
            val = s1 - np.maximum(s2, s3)
            vmax = int(val.max())
            if vmax > best:
                best = vmax
        return Fraction(best, 2)

    # -- export -------------------------------------------------------------

    def edge_list_text(self) -> str:
        """One line per directed edge ``u v label``; header carries the
        group description and radius; vertex 0 is the basepoint."""
        lines = [
            "# group=%s radius=%d vertices=%d"
            % (self.group.description or "/".join(self.group.generators),
               self.radius, len(self.vertices))
        ]
        names = self.group.generators
        for u, row in enumerate(self.edges):
            for v, gi, s in row:
                label = names[gi] if s == 1 else names[gi] + "^-1"
                lines.append("%d %d %s" % (u, v, label))
        return "\n".join(lines) + "\n"


def build_ball(g: GroupSpec, radius: int,
               max_vertices: int = DEFAULT_MAX_VERTICES) -> Ball:
    """Breadth-first closure of the identity under generator
    multiplication, pruned to word length <= radius."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    letters = g.letters()
    seen = {pres.IDENTITY}
    order = [pres.IDENTITY]
    frontier = [pres.IDENTITY]
    while frontier:
        nxt = []
        for w in frontier:
            for gi, s in letters:
                nb = pres.multiply(g, w, ((gi, s),))
                if len(nb) <= radius and nb not in seen:
                    seen.add(nb)
                    nxt.append(nb)
                    order.append(nb)
                    if len(order) > max_vertices:
                        raise ResourceLimit(
                            "ball exceeds %d vertices" % max_vertices
                        )
        frontier = nxt
    return Ball(g, radius, order)


def path_is_valid(b: Ball, p: Sequence[int]) -> bool:
    """Step contract of PathSeg: consecutive points adjacent or equal."""
    if not p:
        return False
    for u, v in zip(p, p[1:]):
        if u != v and all(y != v for y, _, _ in b.edges[u]):
            return False
    return True
