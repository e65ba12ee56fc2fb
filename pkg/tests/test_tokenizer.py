from decimal import ROUND_HALF_UP, Decimal

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from electrolyte_sa.errors import EmptyCorpus, IdOutOfRange, NothingToMask
from electrolyte_sa.selfies import alphabet
from electrolyte_sa.tokenizer import (BOS, EOS, MASK, PAD, SPECIALS, UNK, Vocabulary,
                                      apply_masking, build_vocab, detokenize, mask_count,
                                      tokenize)

TOKENS = sorted(alphabet())


def oracle_mask_count(n: int, ratio: str = "0.15") -> int:
    return max(1, int((Decimal(ratio) * n).quantize(Decimal(1), rounding=ROUND_HALF_UP)))


class TestVocabulary:
    def test_example(self):
        v = build_vocab(["[C][C][O]"])
        assert len(v) == 7
        assert v.tokens[:5] == SPECIALS
        assert v.tokens[5:] == ("[C]", "[O]")
        assert (PAD, BOS, EOS, MASK, UNK) == (0, 1, 2, 3, 4)

    def test_idempotent_and_order_free(self):
        corpus = ["[C][C][O]", "[Li+1].[F]", "[O][=C]"]
        assert build_vocab(corpus) == build_vocab(corpus * 2) == build_vocab(corpus[::-1])

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            build_vocab([])

    @given(st.lists(st.lists(st.sampled_from(TOKENS), max_size=8), min_size=1, max_size=6))
    def test_bijection(self, corpus):
        v = build_vocab(corpus)
        assert [v.id_of[t] for t in v.tokens] == list(range(len(v)))
        assert set(v.tokens[5:]) == {t for s in corpus for t in s}

    def test_file_round_trip(self, tmp_path):
        v = build_vocab(["[C][C][O]", "[Li+1].[F]"])
        v.save(tmp_path / "vocab.txt")
        text = (tmp_path / "vocab.txt").read_text(encoding="utf-8")
        assert text.splitlines()[:5] == list(SPECIALS)
        assert Vocabulary.load(tmp_path / "vocab.txt") == v


class TestTokenize:
    v = build_vocab(["[C][C][O]"])

    def test_examples(self):
        c, o = self.v.id_of["[C]"], self.v.id_of["[O]"]
        assert tokenize("[C][C][O]", self.v) == [BOS, c, c, o, EOS]
        assert tokenize("", self.v) == [BOS, EOS]
        assert tokenize("[C][N]", self.v) == [BOS, c, UNK, EOS]

    def test_detokenize(self):
        assert detokenize(tokenize("[C][C][O]", self.v), self.v) == ["[C]", "[C]", "[O]"]
        assert detokenize([BOS, EOS], self.v) == []
        with pytest.raises(IdOutOfRange):
            detokenize([len(self.v)], self.v)

    @given(st.lists(st.lists(st.sampled_from(TOKENS), max_size=10), min_size=1, max_size=4))
    def test_round_trip(self, corpus):
        v = build_vocab(corpus)
        for s in corpus:
            ids = tokenize(s, v)
            assert ids[0] == BOS and ids[-1] == EOS
            assert detokenize(ids, v) == s


class TestMasking:
    def test_count_exhaustive(self):
        for n in range(1, 513):
            assert mask_count(n, 0.15) == oracle_mask_count(n), n

    def test_count_examples(self):
        assert mask_count(20, 0.15) == 3
        assert mask_count(2, 0.15) == 1
        assert mask_count(30, 0.15) == 5        # 4.5 rounds up
        assert mask_count(10, 0.15) == 2        # 1.5 rounds up

    def test_twenty_tokens(self):
        ids = [BOS] + list(range(5, 25)) + [EOS]
        batch = apply_masking(ids, 0.15, np.random.default_rng(0))
        assert len(batch.mask_positions) == 3
        assert sum(t == MASK for t in batch.source) == 3
        assert batch.target == tuple(ids)

    def test_floor_of_one(self):
        batch = apply_masking([BOS, 7, 8, EOS], 0.15, np.random.default_rng(0))
        assert len(batch.mask_positions) == 1

    def test_deterministic(self):
        ids = [BOS] + list(range(5, 40)) + [EOS]
        a = apply_masking(ids, 0.15, np.random.default_rng(42))
        b = apply_masking(ids, 0.15, np.random.default_rng(42))
        assert a == b

    def test_nothing_to_mask(self):
        with pytest.raises(NothingToMask):
            apply_masking([BOS, EOS], 0.15, np.random.default_rng(0))
        with pytest.raises(NothingToMask):
            apply_masking([BOS, EOS, PAD, PAD], 0.15, np.random.default_rng(0))

    @given(st.lists(st.integers(5, 40), min_size=1, max_size=60), st.integers(0, 20),
           st.integers(0, 2**32 - 1), st.sampled_from([0.15, 0.3, 0.5, 0.05]))
    def test_invariants(self, body, n_pad, seed, ratio):
        ids = [BOS, *body, EOS] + [PAD] * n_pad
        batch = apply_masking(ids, ratio, np.random.default_rng(seed))
        assert len(batch.mask_positions) == mask_count(len(body), ratio)
        assert all(ids[p] not in (PAD, BOS, EOS) for p in batch.mask_positions)
        for p, (s, t) in enumerate(zip(batch.source, batch.target)):
            assert s == (MASK if p in batch.mask_positions else t)

    def test_unk_can_be_masked(self):
        batch = apply_masking([BOS, UNK, EOS], 0.15, np.random.default_rng(0))
        assert batch.mask_positions == (1,)
