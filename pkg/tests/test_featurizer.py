import csv
import threading
import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from electrolyte_sa.errors import EmptyInput, FractionSumError, MissingTarget
from electrolyte_sa.featurizer import (CachedEmbedder, Formulation, check_fractions, featurize,
                                       featurize_dataset, weighted_sum, write_features_csv)

NAMES = ["CCO", "OCC", "C=C", "O=C1OCCO1", "[Li+]", "COC", "CC#N", "FC(F)F"]
DIM = 5


def fake_embed(smiles):
    # deterministic stand-in: distinct vector per string
    rng = np.random.default_rng(zlib.crc32(smiles.encode()))
    return rng.normal(size=DIM)


EMB = {s: fake_embed(s) for s in NAMES}


def lookup(s):
    return EMB[s]


def random_fractions(draw, n):
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    total = sum(raw)
    return [r / total for r in raw]


@st.composite
def formulations(draw, max_components=6):
    n = draw(st.integers(1, max_components))
    names = draw(st.lists(st.sampled_from(NAMES), min_size=n, max_size=n, unique=True))
    return list(zip(names, random_fractions(draw, n)))


def brute(components):
    return sum(c * EMB[s] for s, c in components)


class TestExamples:
    def test_two_component(self):
        r1, r2 = np.array([1.0, 0.0]), np.array([0.0, 2.0])
        table = {"A": r1, "B": r2}
        f = Formulation("x", (("A", 0.25), ("B", 0.75)))
        assert np.allclose(featurize(f, table.__getitem__), [0.25, 1.5])

    def test_single_component_identity(self):
        f = Formulation("x", (("CCO", 1.0),))
        assert np.array_equal(featurize(f, lookup), EMB["CCO"])

    def test_empty_formulation(self):
        with pytest.raises(EmptyInput):
            Formulation("x", ())


class TestFractions:
    @pytest.mark.parametrize("fr", [[0.5, 0.4], [0.6, 0.6], [1.1]])
    def test_strict_sum(self, fr):
        with pytest.raises(FractionSumError):
            check_fractions(fr)

    def test_within_tolerance(self):
        check_fractions([0.5, 0.5005])

    def test_percentages_rejected_with_hint(self):
        with pytest.raises(FractionSumError, match="percentages"):
            check_fractions([40.0, 60.0], strict=False)

    @pytest.mark.parametrize("fr", [[-0.1, 1.1], [float("nan"), 1.0], [float("inf")]])
    def test_negative_or_nonfinite(self, fr):
        with pytest.raises(FractionSumError):
            check_fractions(fr, strict=False)

    def test_non_strict_allows_any_sum(self):
        check_fractions([0.3, 0.3], strict=False)


class TestProperties:
    @given(formulations())
    def test_matches_direct_sum(self, comps):
        got = featurize(Formulation("x", comps), lookup)
        assert np.allclose(got, brute(comps), rtol=1e-12, atol=1e-12)

    @given(formulations(), st.floats(0.01, 10.0))
    def test_homogeneous(self, comps, k):
        scaled = [(s, k * c) for s, c in comps]
        a = featurize(Formulation("x", scaled), lookup, strict=False)
        b = k * featurize(Formulation("x", comps), lookup)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)

    @given(formulations(max_components=4), formulations(max_components=4))
    def test_additive_over_disjoint_mixtures(self, a, b):
        names_a = {s for s, _ in a}
        b = [(s, c) for s, c in b if s not in names_a]
        if not b:
            return
        joined = featurize(Formulation("x", a + b), lookup, strict=False)
        parts = (featurize(Formulation("a", a), lookup, strict=False)
                 + featurize(Formulation("b", b), lookup, strict=False))
        assert np.allclose(joined, parts, rtol=1e-10, atol=1e-12)

    @given(formulations(), st.randoms())
    def test_component_order_is_irrelevant(self, comps, rnd):
        shuffled = list(comps)
        rnd.shuffle(shuffled)
        a = featurize(Formulation("x", comps), lookup)
        b = featurize(Formulation("x", shuffled), lookup)
        assert np.array_equal(a, b)

    @given(st.lists(formulations(), min_size=1, max_size=8))
    def test_width_independent_of_component_count(self, many):
        ds = [Formulation(str(i), c, target=0.0) for i, c in enumerate(many)]
        X, y = featurize_dataset(ds, lookup)
        assert X.shape == (len(ds), DIM) and y.shape == (len(ds),)


class TestDataset:
    def make(self):
        return [Formulation("a", (("CCO", 0.5), ("COC", 0.5)), 1.0),
                Formulation("b", (("CCO", 0.2), ("[Li+]", 0.8)), 2.0),
                Formulation("c", (("COC", 1.0),), 3.0)]

    def test_embeds_each_smiles_once(self):
        calls = []
        cached = CachedEmbedder(lambda s: calls.append(s) or EMB[s])
        featurize_dataset(self.make(), cached)
        assert cached.misses == 3 == len(calls) == len(cached)
        assert sorted(calls) == sorted({"CCO", "COC", "[Li+]"})

    def test_cache_thread_safe(self):
        cached = CachedEmbedder(lookup)
        out = []
        threads = [threading.Thread(target=lambda: out.append(cached("CCO"))) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(cached) == 1
        assert all(np.array_equal(v, EMB["CCO"]) for v in out)

    def test_missing_target(self):
        ds = self.make() + [Formulation("d", (("CCO", 1.0),))]
        with pytest.raises(MissingTarget, match="'d'"):
            featurize_dataset(ds, lookup)

    def test_percentage_row_rejected(self):
        ds = [Formulation("p", (("CCO", 50.0), ("COC", 50.0)), 1.0)]
        with pytest.raises(FractionSumError):
            featurize_dataset(ds, lookup)

    def test_csv(self, tmp_path):
        ds = self.make()
        X, _ = featurize_dataset(ds, lookup)
        path = tmp_path / "f.csv"
        write_features_csv(path, ds, X)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["formulation_id", "f0", "f1", "f2", "f3", "f4", "target"]
        assert [r[0] for r in rows[1:]] == ["a", "b", "c"]
        assert np.array_equal(np.array(rows[1][1:-1], dtype=float), X[0])

    def test_weighted_sum_empty(self):
        with pytest.raises(EmptyInput):
            weighted_sum([])
