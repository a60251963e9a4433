import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangencylab.cantor import (
    CantorStage,
    ConstructionError,
    MarkovBranchSystem,
    ThicknessUndefinedError,
    build_nmap_cantor,
    gap_lemma_check,
    image_cantor,
    markov_cantor,
    middle_thirds_system,
    nmap_cantor_report,
    nmap_restriction_system,
    nominal_thickness_bound,
    stage_to_csv,
    stage_to_json,
    thickness,
)
from tangencylab.maps1d import AffineBranch, conjugacy, n_map


def brute_thickness(stage):
    """Independent oracle: literal definition scan, no shared code paths."""
    ivals = list(stage.intervals)
    gaps = [(ivals[i][1], ivals[i + 1][0]) for i in range(len(ivals) - 1)]
    hull = (ivals[0][0], ivals[-1][1])
    best = None
    for glo, ghi in gaps:
        glen = ghi - glo
        for p, direction in ((glo, -1), (ghi, +1)):
            # walk outward until a gap at least as long blocks, or the hull ends
            bound = hull[0] if direction < 0 else hull[1]
            for olo, ohi in gaps:
                if (olo, ohi) == (glo, ghi):
                    continue
                if ohi - olo >= glen:
                    if direction < 0 and ohi <= p:
                        bound = max(bound, ohi)
                    if direction > 0 and olo >= p:
                        bound = min(bound, olo)
            ratio = (p - bound) / glen if direction < 0 else (bound - p) / glen
            best = ratio if best is None else min(best, ratio)
    return best


class TestConstruction:
    def test_base_point_and_orbit_m6(self):
        rep = nmap_cantor_report(6, 1)
        assert rep["q0"] == F(45, 91)
        assert rep["x_m"] == F(40, 81)
        assert rep["x_m"] < rep["q0"] < F(1, 2)

    def test_first_generation_intervals_m6(self):
        # frozen from the exact branch chain, over the common denominator 2457
        st1 = build_nmap_cantor(6, 1)
        want = (
            (F(-132, 91), F(-865, 819)),
            (F(-96, 91), F(-47, 91)),
            (F(-44, 91), F(15, 91)),
            (F(46, 273), F(45, 91)),
            (F(46, 91), F(123, 91)),
            (F(3322, 2457), F(135, 91)),
        )
        assert st1.intervals == want

    def test_ambient_is_hull(self):
        for m in (6, 8):
            st1 = build_nmap_cantor(m, 1)
            assert st1.intervals[0][0] == st1.ambient[0]
            assert st1.intervals[-1][1] == st1.ambient[1]

    @pytest.mark.parametrize("m", [6, 8, 10])
    @pytest.mark.parametrize("gen", [1, 2, 3])
    def test_exact_endpoints_and_turning_points(self, m, gen):
        st1 = build_nmap_cantor(m, gen)
        assert all(isinstance(v, F) for iv in st1.intervals for v in iv)
        for t in (F(1, 2), F(-1, 2)):
            assert not any(a <= t <= b for a, b in st1.intervals)

    @pytest.mark.parametrize("m", [6, 8])
    def test_forward_image_markov(self, m):
        # the map carries each generation-(g+1) interval exactly onto one of
        # generation g
        s = n_map()
        for g in (1, 2, 3):
            cur = build_nmap_cantor(m, g).intervals
            nxt = build_nmap_cantor(m, g + 1).intervals
            cur_set = set(cur)
            for lo, hi in nxt:
                br = s.branches[s.branch_index(lo)]
                img = tuple(sorted((br(lo), br(hi))))
                assert img in cur_set

    def test_rejects_bad_m(self):
        for m in (4, 5, 7):
            with pytest.raises(ValueError):
                build_nmap_cantor(m, 1)

    def test_ordering_violation_names_the_relation(self):
        from tangencylab.cantor import _require_order

        with pytest.raises(ConstructionError, match="qt4 < q4"):
            _require_order([F(0), F(2), F(1)], ["q2", "qt4", "q4"])


class TestThickness:
    def test_two_interval_symmetric(self):
        st1 = CantorStage((F(0), F(3)), ((F(0), F(1)), (F(2), F(3))), 1)
        assert thickness(st1).thickness == 1

    def test_single_interval_undefined(self):
        st1 = CantorStage((F(0), F(1)), ((F(0), F(1)),), 1)
        with pytest.raises(ThicknessUndefinedError):
            thickness(st1)

    def test_middle_thirds_exactly_one(self):
        st5 = markov_cantor(middle_thirds_system(), 5)
        assert thickness(st5).thickness == F(1)

    def test_m6_generation1_endpoint_table(self):
        # hand-derived ratios: gaps left to right, (left endpoint, right endpoint)
        rep = thickness(build_nmap_cantor(6, 1))
        got = [r[3] for r in rep.endpoint_ratios]
        want = [F(323), F(441), F(85, 3), F(179, 3), F(177), F(89), F(89), F(89), F(2079), F(323)]
        assert got == want
        assert rep.thickness == F(85, 3)

    @pytest.mark.parametrize("m,gen", [(6, 1), (6, 3), (8, 2), (8, 5)])
    def test_matches_brute_oracle(self, m, gen):
        st1 = build_nmap_cantor(m, gen)
        assert thickness(st1).thickness == brute_thickness(st1)

    def test_stabilization_profile(self):
        # the hull-end cascade bites at generation m-3 and the value then
        # freezes at (5*3^m - 117)/216; early generations sit higher
        taus6 = [thickness(build_nmap_cantor(6, g)).thickness for g in range(1, 7)]
        assert taus6[:2] == [F(85, 3), F(85, 3)]
        assert all(t == F(49, 3) for t in taus6[2:])
        assert F(49, 3) == F(5 * 3**6 - 117, 216)
        taus8 = [thickness(build_nmap_cantor(8, g)).thickness for g in range(4, 7)]
        assert taus8[1] == taus8[2] == F(5 * 3**8 - 117, 216)

    def test_below_nominal_bound(self):
        # the realized exact thickness sits strictly below the nominal
        # closed-form bound at every generation; reports must say so
        for m in (6, 8, 10):
            rep = nmap_cantor_report(m, 2)
            assert rep["thickness"] < nominal_thickness_bound(m)
            assert rep["bound_holds"] is False
            assert rep["gap_at_half"] == F(8, 3**m - 1)
            assert rep["gap_at_half"] != rep["nominal_delta"]

    def test_witness_achieves_minimum(self):
        rep = thickness(build_nmap_cantor(6, 3))
        g = rep.witness_gap
        b = rep.witness_bridge
        assert (b[1] - b[0]) / (g[1] - g[0]) == rep.thickness

    @given(
        st.fractions(min_value=F(-5), max_value=F(5)).filter(lambda a: a != 0),
        st.fractions(min_value=F(-10), max_value=F(10)),
    )
    @settings(max_examples=60, deadline=None)
    def test_affine_invariance(self, a, b):
        st1 = build_nmap_cantor(6, 2)
        assert thickness(st1.rescale(a, b)).thickness == thickness(st1).thickness

    def test_self_similar_gap_scaling(self):
        # gaps of generation g+1 inside a generation-g interval are exactly
        # one third of the generation-g gaps inside its branch image
        s = n_map()
        g2 = build_nmap_cantor(6, 2)
        g1 = build_nmap_cantor(6, 1)
        for lo, hi in g1.intervals:
            inner = [iv for iv in g2.intervals if lo <= iv[0] and iv[1] <= hi]
            inner_gaps = sorted(b[0] - a[1] for a, b in zip(inner, inner[1:]))
            br = s.branches[s.branch_index(lo)]
            img = tuple(sorted((br(lo), br(hi))))
            covered = [iv for iv in g1.intervals if img[0] <= iv[0] and iv[1] <= img[1]]
            img_gaps = sorted(b[0] - a[1] for a, b in zip(covered, covered[1:]))
            assert inner_gaps == [g / 3 for g in img_gaps]


class TestGapLemma:
    def test_identical_copies_intersect(self):
        k = build_nmap_cantor(6, 3)
        assert gap_lemma_check(k, k).verdict == "intervals-intersect"

    def test_far_translate_in_gap(self):
        k = build_nmap_cantor(6, 2)
        amb = (k.ambient[0], k.ambient[1] + 10)
        k_wide = CantorStage(amb, k.intervals, k.generation, k.source)
        moved = k.translate(F(10), new_ambient=amb)
        v = gap_lemma_check(k_wide, moved)
        assert v.verdict in ("K1-in-gap-of-K2", "K2-in-gap-of-K1")

    @pytest.mark.parametrize("gen", range(1, 7))
    def test_small_translate_always_intersects(self, gen):
        k = build_nmap_cantor(6, gen)
        amb = (k.ambient[0], k.ambient[1] + F(1, 1000))
        k_wide = CantorStage(amb, k.intervals, k.generation, k.source)
        moved = k.translate(F(1, 1000), new_ambient=amb)
        v = gap_lemma_check(k_wide, moved)
        assert v.verdict == "intervals-intersect"
        assert v.tau_product > 1

    def test_inconclusive_when_thin_sets_interleave(self):
        a = CantorStage((F(0), F(10)), ((F(0), F(1, 100)), (F(5), F(5) + F(1, 100))), 1)
        b = CantorStage((F(0), F(10)), ((F(2), F(2) + F(1, 100)), (F(8), F(8) + F(1, 100))), 1)
        assert gap_lemma_check(a, b).verdict == "inconclusive-at-this-generation"


class TestMarkov:
    def test_single_branch_nested(self):
        sys1 = MarkovBranchSystem(
            (((F(0), F(1, 3)), AffineBranch(F(3), F(0), F(0), F(1, 3))),),
            (F(0), F(1)),
        )
        for g in (1, 2, 4):
            st1 = markov_cantor(sys1, g)
            assert st1.intervals == ((F(0), F(1, 3**g)),)

    def test_middle_thirds_matches_direct_ternary(self):
        # direct ternary construction, written independently
        def ternary(gen):
            ivals = [(F(0), F(1))]
            for _ in range(gen):
                nxt = []
                for a, b in ivals:
                    w = (b - a) / 3
                    nxt += [(a, a + w), (b - w, b)]
                ivals = nxt
            return tuple(ivals)

        for g in (1, 2, 5):
            assert markov_cantor(middle_thirds_system(), g).intervals == ternary(g)

    @pytest.mark.parametrize("gen", [1, 2, 3, 4])
    def test_nmap_restriction_reproduces_build(self, gen):
        sys6 = nmap_restriction_system(6)
        assert markov_cantor(sys6, gen).intervals == build_nmap_cantor(6, gen).intervals

    def test_non_expanding_branch_rejected(self):
        with pytest.raises(ValueError):
            MarkovBranchSystem(
                (((F(0), F(1)), AffineBranch(F(1, 2), F(0), F(0), F(1))),),
                (F(0), F(1)),
            )


class TestImage:
    def test_identity(self):
        k = CantorStage((F(0), F(3)), ((F(0), F(1)), (F(2), F(3))), 1)
        res = image_cantor(k, lambda x: x)
        assert res.stage.intervals == k.intervals
        assert res.bound_holds

    def test_affine_thickness_unchanged_exactly(self):
        k = build_nmap_cantor(6, 2)
        res = image_cantor(k, lambda x: 2 * x + 5)
        assert thickness(res.stage).thickness == thickness(k).thickness

    def test_sine_image_bound(self):
        k = build_nmap_cantor(6, 3)
        h = math.pi * 2.0 / 3.0
        res = image_cantor(
            k, conjugacy, dfn=lambda x: h * math.cos(math.pi * x / 3.0), delta=0.05
        )
        assert res.bound_holds
        assert float(res.thickness_out) >= float(res.thickness_in) / max(res.distortion, 4.0)

    def test_decreasing_map_sorts(self):
        k = CantorStage((F(0), F(3)), ((F(0), F(1)), (F(2), F(3))), 1)
        res = image_cantor(k, lambda x: -x)
        assert res.stage.intervals == ((F(-3), F(-2)), (F(-1), F(0)))

    def test_non_monotone_rejected(self):
        k = build_nmap_cantor(6, 1)
        with pytest.raises(ValueError):
            image_cantor(k, lambda x: float(x) ** 2)


class TestSerialization:
    def test_csv_round_trip(self, tmp_path):
        st1 = build_nmap_cantor(6, 2)
        path = tmp_path / "ivals.csv"
        stage_to_csv(st1, path, config_hash="deadbeef")
        lines = path.read_text().splitlines()
        assert lines[0] == "# config_hash: deadbeef"
        assert lines[1] == "generation,left_num,left_den,right_num,right_den"
        row = lines[2].split(",")
        assert F(int(row[1]), int(row[2])) == st1.intervals[0][0]
        assert len(lines) == 2 + len(st1.intervals)

    def test_json_exact_fields(self):
        doc = stage_to_json(build_nmap_cantor(6, 1))
        assert doc["intervals"][0][0] == {"num": -132, "den": 91, "float": -132 / 91}
