import json
import logging

import numpy as np

from hypothesis import given, settings, strategies as st

import pytest

from qfattack.embedding import DimensionMask, Embedding
from qfattack.errors import DimensionError, EmptyInputError, EmptyMaskError
from qfattack.objectives import (
    DEFAULT_PAIR_COUNT,
    DEFAULT_VOTE_EPSILON,
    CosineObjective,
    KeyDimConfig,
    SentencePair,
    difference_vectors,
    extract_key_dims,
    load_mask_file,
    load_sentence_pairs,
    targeted_loss,
    untargeted_loss,
    write_mask_file,
)
from qfattack.perturbation import Prompt


def diffs_from(rows):
    return [Embedding(row) for row in rows]


def test_defaults():
    assert DEFAULT_VOTE_EPSILON == 0.9
    assert DEFAULT_PAIR_COUNT == 10


def test_loss_of_base_is_one(backend):
    base = Prompt("A bridge over a narrow canal")
    objective = CosineObjective(backend, base)
    assert objective.loss(base.text) == pytest.approx(1.0, abs=1e-12)


def test_loss_batch_matches_single(backend):
    base = Prompt("A bridge over a narrow canal")
    objective = CosineObjective(backend, base)
    texts = [base.text + " ab", base.text + " cd"]
    assert objective.loss_batch(texts) == [objective.loss(t) for t in texts]


def test_masked_objective_validation(backend):
    base = Prompt("short")
    with pytest.raises(DimensionError):
        CosineObjective(backend, base, mask=DimensionMask([1, 0]))
    with pytest.raises(EmptyMaskError):
        CosineObjective(backend, base, mask=DimensionMask([0] * backend.dim))


def test_targeted_equals_untargeted_under_all_ones_mask(backend):
    base = Prompt("A kite flying over a city park")
    cand = Prompt("A kite flying over a city park zz")
    mask = DimensionMask.ones(backend.dim)
    assert targeted_loss(base, cand, mask, backend) == pytest.approx(
        untargeted_loss(base, cand, backend), abs=1e-12
    )


def test_value_and_grad_matches_finite_differences(backend):
    base = Prompt("A train crossing a tall viaduct")
    rng = np.random.default_rng(3)
    y = rng.normal(size=backend.dim)
    h = 1e-6
    for mask in (None, DimensionMask([i % 2 for i in range(backend.dim)])):
        objective = CosineObjective(backend, base, mask=mask)
        value, grad = objective.value_and_grad_embedding(y)
        assert value == pytest.approx(objective.loss_of_embedding(Embedding(y)), abs=1e-12)
        for j in range(0, backend.dim, 7):
            yp, ym = y.copy(), y.copy()
            yp[j] += h
            ym[j] -= h
            fd = (
                objective.value_and_grad_embedding(yp)[0]
                - objective.value_and_grad_embedding(ym)[0]
            ) / (2 * h)
            assert abs(fd - grad[j]) < 1e-6


def test_difference_vectors_order_and_values(backend):
    pairs = [
        SentencePair(Prompt("a cat on a mat"), Prompt("a mat")),
        SentencePair(Prompt("a dog in fog"), Prompt("fog")),
    ]
    diffs = difference_vectors(pairs, backend)
    assert len(diffs) == 2
    for pair, diff in zip(pairs, diffs):
        a = backend.embed_text(pair.with_target.text)
        b = backend.embed_text(pair.without_target.text)
        assert diff.values == tuple(x - y for x, y in zip(a.values, b.values))


def test_difference_vectors_empty_input(backend):
    with pytest.raises(EmptyInputError):
        difference_vectors([], backend)


def test_extract_key_dims_planted_example():
    # votes per dim: (3, 1, -3); threshold 0.5 * 3 = 1.5
    diffs = diffs_from([(1.0, 2.0, -1.0), (2.0, -1.0, -3.0), (1.0, 1.0, -2.0)])
    mask = extract_key_dims(diffs, 0.5)
    assert mask.bits == (1, 0, 1)


def test_extract_key_dims_zero_is_no_vote():
    # zeros keep dim 0 at |vote| = 2 < 2.7; dim 1 unanimous at 3 passes
    diffs = diffs_from([(1.0, 1.0), (0.0, 1.0), (1.0, 1.0)])
    mask = extract_key_dims(diffs, 0.9)
    assert mask.bits == (0, 1)


def test_extract_key_dims_strict_versus_loose_boundary():
    # nine +1 votes and one zero: vote == 9 == 0.9 * 10 exactly
    rows = [(1.0,)] * 9 + [(0.0,)]
    assert extract_key_dims(diffs_from(rows), 0.9).bits == (0,)
    assert extract_key_dims(diffs_from(rows), 0.9, strict=False).bits == (1,)


def test_extract_key_dims_warns_when_empty(caplog):
    diffs = diffs_from([(1.0, -1.0), (-1.0, 1.0)])
    with caplog.at_level(logging.WARNING, logger="qfattack.objectives"):
        mask = extract_key_dims(diffs, 0.9)
    assert mask.selected == 0
    assert any("selected no dimensions" in r.message for r in caplog.records)


def test_extract_key_dims_validation():
    with pytest.raises(EmptyInputError):
        extract_key_dims([], 0.5)
    with pytest.raises(ValueError):
        extract_key_dims(diffs_from([(1.0,)]), 1.0)
    with pytest.raises(DimensionError):
        extract_key_dims(diffs_from([(1.0,), (1.0, 2.0)]), 0.5)


@settings(max_examples=25)
@given(st.integers(min_value=0, max_value=10_000))
def test_extract_key_dims_monotone_in_epsilon(seed):
    rng = np.random.default_rng(seed)
    diffs = diffs_from(rng.normal(size=(7, 12)).tolist())
    previous = None
    for eps in (0.95, 0.7, 0.45, 0.2):
        bits = extract_key_dims(diffs, eps).bits
        if previous is not None:
            # lowering epsilon can only add dimensions
            assert all(p <= b for p, b in zip(previous, bits))
        previous = bits


@settings(max_examples=25)
@given(st.integers(min_value=0, max_value=10_000))
def test_extract_key_dims_invariant_to_positive_scaling(seed):
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(5, 10))
    scales = rng.uniform(0.1, 9.0, size=5)
    plain = extract_key_dims(diffs_from(raw.tolist()), 0.6)
    scaled = extract_key_dims(diffs_from((raw * scales[:, None]).tolist()), 0.6)
    assert plain.bits == scaled.bits


def test_sentence_pair_must_differ():
    with pytest.raises(ValueError):
        SentencePair(Prompt("same"), Prompt("same"))


def test_keydim_config_validation():
    pair = SentencePair(Prompt("a b"), Prompt("b"))
    KeyDimConfig(pairs=(pair,))
    with pytest.raises(ValueError):
        KeyDimConfig(epsilon=0.0, pairs=(pair,))
    with pytest.raises(ValueError):
        KeyDimConfig(pairs=())


def test_load_sentence_pairs_roundtrip(tmp_path):
    path = tmp_path / "pairs.jsonl"
    rows = [
        {"with_target": "an owl at night", "without_target": "the night"},
        {"with_target": "an owl in a tree", "without_target": "a tree"},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n\n")
    pairs = load_sentence_pairs(path)
    assert len(pairs) == 2
    assert pairs[0].with_target.text == "an owl at night"


def test_load_sentence_pairs_names_bad_line(tmp_path):
    path = tmp_path / "pairs.jsonl"
    path.write_text('{"with_target": "a", "without_target": "b"}\n{"with_target": "x"}\n')
    with pytest.raises(ValueError, match="line 2"):
        load_sentence_pairs(path)


def test_load_sentence_pairs_empty_file(tmp_path):
    path = tmp_path / "pairs.jsonl"
    path.write_text("\n")
    with pytest.raises(EmptyInputError):
        load_sentence_pairs(path)


def test_mask_file_roundtrip(tmp_path):
    path = tmp_path / "mask.json"
    mask = DimensionMask([1, 0, 1, 1])
    write_mask_file(path, mask, epsilon=0.9, n=10, extra={"note": "test"})
    payload = json.loads(path.read_text())
    assert payload["dim"] == 4
    assert payload["selected"] == 3
    assert payload["epsilon"] == 0.9
    assert payload["n"] == 10
    assert payload["note"] == "test"
    assert load_mask_file(path).bits == mask.bits


def test_mask_file_dim_consistency(tmp_path):
    path = tmp_path / "mask.json"
    path.write_text(json.dumps({"dim": 3, "bits": [1, 0]}))
    with pytest.raises(ValueError):
        load_mask_file(path)
