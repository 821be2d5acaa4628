from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from edgeattend.gallery import (
    ConfusionCounts,
    Gallery,
    cosine_distance,
    euclidean_distance,
    metrics,
    metrics_exact,
)

finite_vec = hnp.arrays(
    np.float64,
    (8,),
    elements=st.floats(-100, 100, allow_nan=False, allow_infinity=False),
)


class TestDistances:
    def test_cosine_self_distance_zero(self):
        v = np.array([1.0, 2.0, 3.0])
        assert cosine_distance(v, v) == pytest.approx(0.0, abs=1e-12)

    def test_cosine_orthogonal_is_one(self):
        assert cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 5.0])) == pytest.approx(1.0)

    def test_cosine_antipodal_is_two(self):
        v = np.array([1.0, -2.0, 0.5])
        assert cosine_distance(v, -v) == pytest.approx(2.0, abs=1e-12)

    def test_cosine_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="undefined cosine"):
            cosine_distance(np.zeros(3), np.ones(3))

    def test_euclidean_345(self):
        assert euclidean_distance(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0

    def test_euclidean_homogeneity(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a, b = rng.normal(size=(2, 16))
            c = float(rng.uniform(-5, 5))
            assert euclidean_distance(c * a, c * b) == pytest.approx(
                abs(c) * euclidean_distance(a, b), rel=1e-9
            )

    @settings(max_examples=100, deadline=None)
    @given(a=finite_vec, b=finite_vec)
    def test_symmetry_and_nonnegativity(self, a, b):
        assert euclidean_distance(a, b) == euclidean_distance(b, a)
        assert euclidean_distance(a, b) >= 0
        if np.linalg.norm(a) > 0 and np.linalg.norm(b) > 0:
            assert cosine_distance(a, b) == pytest.approx(cosine_distance(b, a), abs=1e-12)
            assert -1e-12 <= cosine_distance(a, b) <= 2 + 1e-12

    @settings(max_examples=100, deadline=None)
    @given(a=finite_vec, b=finite_vec, c=finite_vec)
    def test_euclidean_triangle_inequality(self, a, b, c):
        assert euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            euclidean_distance(np.ones(3), np.ones(4))


def small_gallery(dim=8, n=5, seed=1):
    rng = np.random.default_rng(seed)
    g = Gallery(dim)
    for i in range(n):
        g.enroll(f"s{i:02d}", f"Student {i}", rng.normal(size=dim))
    return g


class TestMatch:
    def test_exact_match_is_known(self):
        g = small_gallery()
        probe = g.get("s02").embeddings[0]
        res = g.match(probe, threshold=0.5)
        assert res.known and res.student_id == "s02"
        assert res.best_distance == pytest.approx(0.0, abs=1e-6)

    def test_zero_threshold_rejects(self):
        g = small_gallery()
        probe = np.random.default_rng(77).normal(size=8)
        res = g.match(probe, threshold=0.0)
        assert not res.known
        assert res.student_id is None
        assert res.best_student_id  # argmin still reported

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(6)
        for trial in range(50):
            g = small_gallery(seed=trial)
            g.enroll("s01", "Student 1", rng.normal(size=8))  # multi-embedding identity
            probe = rng.normal(size=8)
            for metric, fn in (("cosine", cosine_distance), ("euclidean", euclidean_distance)):
                pairs = [
                    (fn(probe, e), sid)
                    for sid, rec in g.records.items()
                    for e in rec.embeddings
                ]
                want_dist, want_sid = min(pairs)
                got = g.match(probe, metric=metric, threshold=0.4)
                assert got.best_student_id == want_sid
                assert got.best_distance == pytest.approx(want_dist, rel=1e-12)
                assert got.known == (want_dist <= 0.4)

    def test_tie_breaks_to_smallest_id(self):
        g = Gallery(4)
        shared = np.array([1.0, 0.0, 0.0, 0.0])
        g.enroll("zeta", "Z", shared)
        g.enroll("alpha", "A", shared)
        res = g.match(shared, threshold=1.0)
        assert res.student_id == "alpha"

    def test_empty_gallery_rejected(self):
        g = Gallery(4)
        with pytest.raises(LookupError, match="no enrolled identities"):
            g.match(np.ones(4))

    def test_argmin_invariant_under_uniform_scaling_cosine(self):
        rng = np.random.default_rng(10)
        g = small_gallery(seed=3)
        probe = rng.normal(size=8)
        base = g.match(probe, metric="cosine", threshold=0.4).best_student_id
        scaled = Gallery(8)
        for sid, rec in g.records.items():
            for e in rec.embeddings:
                scaled.enroll(sid, rec.display_name, 7.5 * np.asarray(e))
        assert scaled.match(probe, metric="cosine", threshold=0.4).best_student_id == base


class TestMetrics:
    # Published scenario rows: counts and their rounded rates.
    @pytest.mark.parametrize(
        "counts,enrolled,acc,far,frr",
        [
            ((14, 0, 3, 17), True, 0.8235, 0.0, 0.176),
            ((3, 0, 9, 12), True, 0.25, 0.0, 0.75),
            ((2, 0, 10, 12), True, 0.1667, 0.0, 0.833),
            ((0, 0, 24, 24), False, 1.0, 0.0, 0.0),
        ],
    )
    def test_scenario_rows(self, counts, enrolled, acc, far, frr):
        m = metrics(ConfusionCounts(*counts), enrolled=enrolled)
        assert m.acc == pytest.approx(acc, abs=5e-4)
        assert m.far == pytest.approx(far, abs=1e-12)
        assert m.frr == pytest.approx(frr, abs=5e-4)

    def test_enrolled_rates_sum_to_one_exactly(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            c, i, u = (int(x) for x in rng.integers(0, 50, 3))
            if c + i + u == 0:
                continue
            acc, far, frr = metrics_exact(ConfusionCounts(c, i, u, c + i + u), enrolled=True)
            assert acc + far + frr == Fraction(1)

    def test_no_decisions_rejected(self):
        with pytest.raises(ValueError, match="no decisions"):
            metrics(ConfusionCounts(0, 0, 0, 0))

    def test_counts_invariant(self):
        with pytest.raises(ValueError):
            ConfusionCounts(2, 2, 2, 7)

    def test_threshold_monotonicity_over_sweep(self):
        # tightening the threshold never decreases FRR nor increases FAR
        rng = np.random.default_rng(12)
        g = small_gallery(dim=16, n=6, seed=8)
        probes = []
        for sid in list(g.records) + ["ghost1", "ghost2"]:
            for _ in range(10):
                if sid.startswith("ghost"):
                    probes.append((rng.normal(size=16), None))
                else:
                    probes.append((g.get(sid).embeddings[0] + rng.normal(0, 0.4, 16), sid))
        thresholds = np.linspace(0.0, 2.0, 50)
        fars, frrs = [], []
        for t in thresholds:
            far = frr = 0
            enrolled_total = sum(1 for _, sid in probes if sid is not None)
            for vec, sid in probes:
                res = g.match(vec, threshold=float(t))
                if res.known and res.student_id != sid:
                    far += 1
                if not res.known and sid is not None:
                    frr += 1
            fars.append(far / len(probes))
            frrs.append(frr / enrolled_total)
        assert all(a <= b + 1e-12 for a, b in zip(fars, fars[1:]))
        assert all(a >= b - 1e-12 for a, b in zip(frrs, frrs[1:]))


class TestPersistence:
    def test_round_trip_bit_exact(self, tmp_path):
        g = small_gallery(dim=12, n=4, seed=9)
        g.enroll("s00", "Student 0", np.random.default_rng(1).normal(size=12))
        g.save(tmp_path / "gal")
        back = Gallery.load(tmp_path / "gal")
        assert back.dimension == g.dimension
        assert set(back.records) == set(g.records)
        for sid, rec in g.records.items():
            loaded = back.get(sid)
            assert loaded.display_name == rec.display_name
            assert len(loaded.embeddings) == len(rec.embeddings)
            for a, b in zip(loaded.embeddings, rec.embeddings):
                assert np.array_equal(a, b)  # bit-exact float32

    def test_dimension_validated_on_load(self, tmp_path):
        g = small_gallery(dim=8)
        g.save(tmp_path / "gal")
        meta = (tmp_path / "gal" / "meta.json")
        meta.write_text('{"dimension": 16}')
        with pytest.raises(ValueError):
            Gallery.load(tmp_path / "gal")

    def test_unsafe_student_id_rejected(self):
        g = Gallery(4)
        with pytest.raises(ValueError):
            g.enroll("../evil", "X", np.ones(4))

    def test_enroll_appends_embeddings(self):
        g = Gallery(4)
        g.enroll("s1", "One", np.array([1.0, 0, 0, 0]))
        g.enroll("s1", "One", np.array([0.0, 1, 0, 0]))
        assert len(g.get("s1").embeddings) == 2
        assert len(g) == 1

    def test_wrong_dimension_rejected(self):
        g = Gallery(4)
        with pytest.raises(ValueError):
            g.enroll("s1", "One", np.ones(5))
