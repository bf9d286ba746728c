from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from morsehull import cayley, presentation as pres
from morsehull.errors import (
    NotInteriorSound,
    OutOfBall,
    ResourceLimit,
    TooFewVertices,
)

F2 = pres.parse_group("free:a,b")
Z2 = pres.parse_group("abelian:a,b")
Z1 = pres.parse_group("free:a")
ZZ = pres.parse_group("product:(abelian:a,b)*(free:c)*(free:d)")


def vtx(b, text):
    return b.index_of(pres.parse_word(b.group, text))


class TestBuildBall:
    def test_free_r2_size(self):
        assert cayley.build_ball(F2, 2).n == 17

    def test_abelian_r2_size(self):
        assert cayley.build_ball(Z2, 2).n == 13

    def test_product_r1_size(self):
        assert cayley.build_ball(ZZ, 1).n == 9

    def test_basepoint_is_identity(self):
        b = cayley.build_ball(F2, 3)
        assert b.word(0) == pres.IDENTITY
        assert all(b.norm(v) <= 3 for v in range(b.n))

    def test_vertex_cap(self):
        with pytest.raises(ResourceLimit):
            cayley.build_ball(F2, 6, max_vertices=100)

    def test_adjacent_norms_differ_by_at_most_one(self):
        b = cayley.build_ball(Z2, 3)
        for u in range(b.n):
            for v, _, _ in b.neighbors(u):
                assert abs(b.norm(u) - b.norm(v)) <= 1


class TestDistance:
    def test_identity(self):
        b = cayley.build_ball(F2, 3)
        assert b.distance(0, 0) == 0

    def test_free_a_to_b(self):
        b = cayley.build_ball(F2, 3)
        assert b.distance(vtx(b, "a"), vtx(b, "b")) == 2

    def test_abelian_a_to_b(self):
        b = cayley.build_ball(Z2, 3)
        assert b.distance(vtx(b, "a"), vtx(b, "b")) == 2

    def test_out_of_ball(self):
        b = cayley.build_ball(F2, 2)
        with pytest.raises(OutOfBall):
            b.distance(0, b.n)
        with pytest.raises(OutOfBall):
            b.index_of(pres.parse_word(F2, "a^3"))

    def test_stored_equals_group_distance_on_sound_pairs(self):
        for g in (F2, Z2, ZZ):
            b = cayley.build_ball(g, 3)
            for u in range(b.n):
                for v in range(b.n):
                    if b.interior_sound(u, v):
                        assert b.distance(u, v) == b.group_distance(u, v)

    def test_unsound_pair_exists_and_overshoots(self):
        # a^2 and b^2 in the free ball of radius 2: the geodesic through e
        # leaves no slack, the pair is flagged and the stored distance is
        # still correct here, but a^2 to a b (distance 3 via a) shows the
        # stored metric can only overshoot, never undershoot.
        b = cayley.build_ball(F2, 2)
        u, v = vtx(b, "a^2"), vtx(b, "b^2")
        assert not b.interior_sound(u, v)
        for x in range(b.n):
            for y in range(b.n):
                assert b.distance(x, y) >= b.group_distance(x, y)


class TestGeodesics:
    def test_free_unique(self):
        b = cayley.build_ball(F2, 3)
        paths = b.geodesics_between(0, vtx(b, "a b"))
        assert len(paths) == 1
        assert len(paths[0]) == 3

    def test_abelian_two(self):
        b = cayley.build_ball(Z2, 3)
        assert len(b.geodesics_between(0, vtx(b, "a b"))) == 2

    def test_abelian_binomial(self):
        b = cayley.build_ball(Z2, 5)
        assert len(b.geodesics_between(0, vtx(b, "a^2 b^2"), limit=100)) == 6

    def test_limit_truncates(self):
        b = cayley.build_ball(Z2, 5)
        assert len(b.geodesics_between(0, vtx(b, "a^2 b^2"), limit=4)) == 4

    def test_paths_are_unit_step(self):
        b = cayley.build_ball(Z2, 4)
        for p in b.geodesics_between(vtx(b, "a"), vtx(b, "b^2"), limit=50):
            assert cayley.path_is_valid(b, p)
            for x, y in zip(p, p[1:]):
                assert b.group_distance(x, y) == 1

    def test_not_interior_sound(self):
        b = cayley.build_ball(F2, 2)
        with pytest.raises(NotInteriorSound):
            b.geodesics_between(vtx(b, "a^2"), vtx(b, "b^2"))

    def test_canonical_order_deterministic(self):
        b = cayley.build_ball(Z2, 4)
        p1 = b.geodesics_between(0, vtx(b, "a b"), limit=10)
        p2 = b.geodesics_between(0, vtx(b, "a b"), limit=10)
        assert p1 == p2


class TestGromovProduct:
    def test_equal_points(self):
        b = cayley.build_ball(F2, 3)
        x = vtx(b, "a b")
        assert b.gromov_product(x, x, 0) == Fraction(2)

    def test_opposite_rays(self):
        b = cayley.build_ball(Z1, 5)
        assert b.gromov_product(vtx(b, "a^3"), vtx(b, "a^-2"), 0) == 0

    def test_common_prefix(self):
        b = cayley.build_ball(F2, 3)
        assert b.gromov_product(vtx(b, "a b"), vtx(b, "a b^-1"), 0) == 1

    def test_identity_relation(self):
        # (x.y)_z + (x.z)_y = d(y,z) for all sound triples.
        b = cayley.build_ball(F2, 3)
        verts = [0, vtx(b, "a"), vtx(b, "b^-1"), vtx(b, "a b")]
        for x in verts:
            for y in verts:
                for z in verts:
                    lhs = b.gromov_product(x, y, z) + b.gromov_product(x, z, y)
                    assert lhs == b.group_distance(y, z)

    def test_range(self):
        b = cayley.build_ball(Z2, 3)
        verts = range(b.n)
        for x in verts:
            for y in verts:
                if not b.interior_sound(x, y):
                    continue
                p = b.gromov_product(x, y, 0)
                assert 0 <= p <= min(b.norm(x), b.norm(y))


def delta_orderings_oracle(b, quad):
    """Least delta over the 24 orderings of the Gromov-product condition,
    using true group distances; None if some pair is unsound."""
    import itertools
    best = Fraction(0)
    for x, y in itertools.combinations(quad, 2):
        if not b.interior_sound(x, y):
            return None
    for x, y, z, w in itertools.permutations(quad):
        d = lambda p, q: b.group_distance(p, q)
        gp = lambda p, q: Fraction(d(w, p) + d(w, q) - d(p, q), 2)
        need = min(gp(x, z), gp(z, y)) - gp(x, y)
        if need > best:
            best = need
    return best


class TestFourPointDelta:
    def test_free_r4_zero(self):
        assert cayley.build_ball(F2, 4).four_point_delta() == 0

    def test_line_zero(self):
        assert cayley.build_ball(Z1, 5).four_point_delta() == 0

    def test_abelian_r3_regression(self):
        # Regression constant: quadruple (a, b, e, ab) attains delta = 1.
        assert cayley.build_ball(Z2, 3).four_point_delta() == 1

    def test_too_few(self):
        b = cayley.build_ball(Z1, 5)
        with pytest.raises(TooFewVertices):
            b.four_point_delta(subset=[0, 1, 2])

    def test_monotone_in_subset(self):
        b = cayley.build_ball(Z2, 3)
        small = list(range(8))
        big = list(range(16))
        assert b.four_point_delta(small) <= b.four_point_delta(big)
        assert b.four_point_delta(big) <= b.four_point_delta()

    def test_matches_orderings_oracle(self):
        import itertools
        b = cayley.build_ball(Z2, 2)
        best = Fraction(0)
        for quad in itertools.combinations(range(b.n), 4):
            got = delta_orderings_oracle(b, quad)
            if got is not None and got > best:
                best = got
        assert b.four_point_delta() == best

    @settings(max_examples=25, deadline=None)
    @given(data=st.data())
    def test_quadruple_oracle_is_lower_bound(self, data):
        b = cayley.build_ball(ZZ, 3)
        quad = data.draw(
            st.lists(
                st.integers(min_value=0, max_value=b.n - 1),
                min_size=4, max_size=4, unique=True,
            )
        )
        got = delta_orderings_oracle(b, quad)
        if got is not None:
            assert got <= b.four_point_delta()


class TestMetricAxioms:
    def test_axioms_on_sound_pairs(self):
        b = cayley.build_ball(ZZ, 3)
        verts = list(range(0, b.n, 7))
        for u in verts:
            for v in verts:
                d = b.group_distance(u, v)
                assert d == b.group_distance(v, u)
                assert (d == 0) == (u == v)
                for z in verts:
                    assert d <= b.group_distance(u, z) + b.group_distance(z, v)


class TestExport:
    def test_edge_list_format(self):
        b = cayley.build_ball(Z1, 2)
        text = b.edge_list_text()
        lines = text.strip().split("\n")
        assert lines[0].startswith("# group=")
        assert "radius=2" in lines[0]
        body = [ln.split() for ln in lines[1:]]
        assert all(len(row) == 3 for row in body)
        labels = {row[2] for row in body}
        assert labels == {"a", "a^-1"}
