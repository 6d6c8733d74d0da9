import itertools
import json

import numpy as np

from hypothesis import given, settings, strategies as st

import pytest

from qfattack.embedding import DimensionMask
from qfattack.encoders.base import Capabilities, EncoderBackend
from qfattack.encoders.synthetic import SyntheticEncoder, SyntheticEncoderConfig
from qfattack.errors import CapabilityError, SpaceTooLargeError
from qfattack.objectives import CosineObjective
from qfattack.optimizers import (
    AttackConfig,
    Evaluator,
    GeneticConfig,
    PGDConfig,
    _discretize_weights,
    brute_force_attack,
    genetic_attack,
    greedy_attack,
    pgd_attack,
    project_row_to_simplex,
    project_rows_to_simplex,
    random_attack,
    run_attack,
)
from qfattack.perturbation import Charset, Prompt, assemble_text, random_perturbation

BASE = Prompt("A cat sleeping on a sunny windowsill")
ABC = Charset.from_spec("abc")


def small_cfg(method, **kw):
    defaults = dict(method=method, L=2, charset=ABC, seed=0)
    defaults.update(kw)
    return AttackConfig(**defaults)


def assert_trajectory_invariants(result):
    losses = [v for _, v in result.trajectory]
    assert losses, "trajectory must not be empty"
    assert all(a >= b for a, b in zip(losses, losses[1:]))
    assert result.final_loss == losses[-1]
    assert result.perturbed_prompt == assemble_text(result.base_prompt, result.perturbation)


def test_config_defaults():
    cfg = AttackConfig(method="genetic")
    assert cfg.L == 5
    assert len(cfg.charset) == 94
    assert (cfg.genetic.generations, cfg.genetic.population) == (50, 20)
    assert cfg.genetic.mutation_rate == 0.3
    assert (cfg.pgd.step_size, cfg.pgd.steps) == (0.1, 100)
    assert cfg.targeted is None


def test_config_validation():
    with pytest.raises(ValueError):
        AttackConfig(method="annealing")
    with pytest.raises(ValueError):
        AttackConfig(method="greedy", L=0)
    with pytest.raises(ValueError):
        GeneticConfig(population=1)
    with pytest.raises(ValueError):
        GeneticConfig(generations=0)
    with pytest.raises(ValueError):
        GeneticConfig(mutation_rate=1.5)
    with pytest.raises(ValueError):
        PGDConfig(step_size=0.0)
    with pytest.raises(ValueError):
        PGDConfig(steps=0)
    with pytest.raises(ValueError):
        AttackConfig(method="greedy", greedy_mode="diagonal")
    with pytest.raises(ValueError):
        AttackConfig(method="brute", brute_cap=0)


def test_config_to_dict_keys():
    d = AttackConfig(method="pgd", targeted=DimensionMask([1, 0])).to_dict()
    assert set(d) == {
        "method", "L", "charset", "seed", "genetic", "pgd",
        "targeted", "greedy_mode", "brute_cap",
    }
    assert d["targeted"] == [1, 0]
    assert json.dumps(d)  # must be JSON-serializable as-is


def test_method_mismatch_rejected(backend):
    objective = CosineObjective(backend, BASE)
    with pytest.raises(ValueError):
        greedy_attack(BASE, objective, small_cfg("genetic"))
    with pytest.raises(ValueError):
        genetic_attack(BASE, objective, small_cfg("greedy"))


def test_evaluator_memoizes_and_counts():
    calls = []

    def loss(text):
        calls.append(text)
        return float(len(text))

    ev = Evaluator(loss)
    assert ev("aa") == 2.0
    assert ev("aa") == 2.0
    assert ev.count == 1
    assert ev.batch(["aa", "bbb", "bbb", "c"]) == [2.0, 3.0, 3.0, 1.0]
    assert ev.count == 3
    assert calls == ["aa", "bbb", "c"]


def test_evaluator_prefers_objective_batch(backend):
    objective = CosineObjective(backend, BASE)
    ev = Evaluator(objective)
    texts = [BASE.text + " aa", BASE.text + " bb"]
    assert ev.batch(texts) == objective.loss_batch(texts)


def test_greedy_evaluation_budget(backend):
    objective = CosineObjective(backend, BASE)
    cfg = small_cfg("greedy", L=3)
    result = greedy_attack(BASE, objective, cfg)
    assert result.evaluations == cfg.L * len(cfg.charset)
    assert len(result.trajectory) == cfg.L
    assert_trajectory_invariants(result)


def test_greedy_ties_pick_lowest_codepoint():
    # constant loss leaves every slot tied; lowest codepoint must win
    cfg = AttackConfig(method="greedy", L=3, charset=Charset.from_spec("cab"), seed=0)
    result = greedy_attack(BASE, lambda text: 0.0, cfg)
    assert result.perturbation == "aaa"


def test_greedy_is_deterministic(backend):
    objective = CosineObjective(backend, BASE)
    a = greedy_attack(BASE, objective, small_cfg("greedy"))
    b = greedy_attack(BASE, CosineObjective(backend, BASE), small_cfg("greedy"))
    assert a.perturbation == b.perturbation
    assert a.final_loss == b.final_loss
    assert a.trajectory == b.trajectory


def test_greedy_independent_mode(backend):
    objective = CosineObjective(backend, BASE)
    cfg = small_cfg("greedy", L=2, greedy_mode="independent")
    result = greedy_attack(BASE, objective, cfg)
    # ranked solo losses decide the suffix; budget is |charset| + 1
    solo = {c: objective.loss(assemble_text(BASE.text, c)) for c in "abc"}
    expected = "".join(sorted(sorted(solo), key=lambda c: (solo[c], ord(c)))[:2])
    assert result.perturbation == expected
    assert result.evaluations == len(cfg.charset) + 1


def test_genetic_exhaustive_init_matches_brute(backend):
    objective = CosineObjective(backend, BASE)
    gcfg = small_cfg("genetic", genetic=GeneticConfig(generations=3, population=20))
    bcfg = small_cfg("brute")
    g = genetic_attack(BASE, objective, gcfg)
    b = brute_force_attack(BASE, CosineObjective(backend, BASE), bcfg)
    assert g.perturbation == b.perturbation
    assert g.final_loss == b.final_loss


def test_genetic_is_deterministic(backend):
    cfg = small_cfg(
        "genetic", L=4, charset=Charset.default(), seed=123,
        genetic=GeneticConfig(generations=5, population=8),
    )
    a = genetic_attack(BASE, CosineObjective(backend, BASE), cfg)
    b = genetic_attack(BASE, CosineObjective(backend, BASE), cfg)
    assert a.perturbation == b.perturbation
    assert a.trajectory == b.trajectory
    assert_trajectory_invariants(a)


def test_genetic_trajectory_length_is_generations_plus_init(backend):
    cfg = small_cfg("genetic", genetic=GeneticConfig(generations=4, population=6))
    result = genetic_attack(BASE, CosineObjective(backend, BASE), cfg)
    assert [i for i, _ in result.trajectory] == [0, 1, 2, 3, 4]


def test_random_attack_single_draw(backend):
    cfg = AttackConfig(method="random", seed=42)
    result = random_attack(BASE, CosineObjective(backend, BASE), cfg)
    assert result.evaluations == 1
    assert result.perturbation == random_perturbation(42, cfg.charset, cfg.L).chars
    assert len(result.trajectory) == 1
    assert_trajectory_invariants(result)


def test_brute_force_finds_global_minimum(backend):
    objective = CosineObjective(backend, BASE)
    cfg = small_cfg("brute")
    result = brute_force_attack(BASE, objective, cfg)
    losses = {
        "".join(tup): objective.loss(assemble_text(BASE.text, "".join(tup)))
        for tup in itertools.product(ABC.chars, repeat=2)
    }
    assert result.final_loss == min(losses.values())
    assert losses[result.perturbation] == result.final_loss
    assert result.evaluations == len(losses)
    assert_trajectory_invariants(result)


def test_brute_force_tie_keeps_first_in_enumeration():
    cfg = small_cfg("brute")
    result = brute_force_attack(BASE, lambda text: 1.0, cfg)
    assert result.perturbation == "aa"
    assert result.evaluations == 9


def test_brute_force_respects_cap():
    cfg = AttackConfig(method="brute", L=5, charset=Charset.default(), brute_cap=10**6)
    with pytest.raises(SpaceTooLargeError):
        brute_force_attack(BASE, lambda text: 0.0, cfg)


def test_project_row_known_value():
    out = project_row_to_simplex(np.array([0.5, 0.5, 1.0]))
    assert np.allclose(out, [1 / 6, 1 / 6, 2 / 3])


@settings(max_examples=50)
@given(st.lists(st.floats(min_value=-5, max_value=5, allow_nan=False), min_size=1, max_size=8))
def test_project_row_is_valid_and_idempotent(row):
    v = np.array(row)
    p = project_row_to_simplex(v)
    assert np.all(p >= 0.0)
    assert abs(p.sum() - 1.0) < 1e-9
    assert np.allclose(project_row_to_simplex(p), p, atol=1e-12)


def test_project_rows_applies_per_row():
    w = np.array([[2.0, 0.0], [0.25, 0.25]])
    p = project_rows_to_simplex(w)
    assert np.allclose(p[0], [1.0, 0.0])
    assert np.allclose(p[1], [0.5, 0.5])


def test_discretize_weights_ties_to_lowest_codepoint():
    cs = Charset("ba")
    assert _discretize_weights(np.array([[0.5, 0.5]]), cs) == "a"
    assert _discretize_weights(np.array([[0.9, 0.1]]), cs) == "b"


def test_pgd_requires_gradient_backend():
    class NoGradBackend(EncoderBackend):
        @property
        def id(self):
            return "nograd"

        @property
        def dim(self):
            return 4

        @property
        def capabilities(self):
            return Capabilities(supports_gradients=False)

        def embed_text(self, text):
            raise AssertionError("should not be called")

    cfg = small_cfg("pgd")
    with pytest.raises(CapabilityError):
        pgd_attack(BASE, object(), cfg, NoGradBackend())


def test_pgd_improves_and_is_deterministic(backend):
    cfg = small_cfg("pgd", L=3, pgd=PGDConfig(steps=15))
    a = pgd_attack(BASE, CosineObjective(backend, BASE), cfg, backend)
    b = pgd_attack(BASE, CosineObjective(backend, BASE), cfg, backend)
    assert a.perturbation == b.perturbation
    assert a.trajectory == b.trajectory
    assert_trajectory_invariants(a)
    assert a.final_loss <= a.trajectory[0][1]


def test_pgd_never_beats_the_brute_oracle(backend):
    cfg = small_cfg("pgd", pgd=PGDConfig(steps=40))
    p = pgd_attack(BASE, CosineObjective(backend, BASE), cfg, backend)
    b = brute_force_attack(BASE, CosineObjective(backend, BASE), small_cfg("brute"))
    assert p.final_loss >= b.final_loss - 1e-12


def test_run_attack_dispatch(backend):
    objective = CosineObjective(backend, BASE)
    for method in ("greedy", "genetic", "random", "brute"):
        cfg = small_cfg(method, genetic=GeneticConfig(generations=2, population=4))
        result = run_attack(BASE, objective, cfg, backend=backend)
        assert result.config.method == method
    with pytest.raises(ValueError):
        run_attack(BASE, objective, small_cfg("pgd"))


def test_result_serialization_roundtrip(backend):
    result = random_attack(BASE, CosineObjective(backend, BASE), AttackConfig(method="random"))
    d = result.to_dict()
    assert set(d) == {
        "base_prompt", "perturbation", "perturbed_prompt", "final_loss",
        "trajectory", "evaluations", "config", "wall_ms",
    }
    assert d["base_prompt"] == BASE.text
    assert d["perturbed_prompt"] == BASE.text + " " + d["perturbation"]
    assert isinstance(d["wall_ms"], int) and d["wall_ms"] >= 0
    json.dumps(d)


@settings(max_examples=15)
@given(st.integers(min_value=0, max_value=10_000))
def test_genetic_trajectory_invariants_over_seeds(seed):
    backend = SyntheticEncoder(SyntheticEncoderConfig(seed=0, dim=32))
    cfg = AttackConfig(
        method="genetic", L=3, charset=Charset.from_spec("abcdefgh"), seed=seed,
        genetic=GeneticConfig(generations=6, population=6),
    )
    result = genetic_attack(BASE, CosineObjective(backend, BASE), cfg)
    assert_trajectory_invariants(result)


def test_targeted_attack_uses_masked_loss(backend):
    mask = DimensionMask([i % 2 for i in range(backend.dim)])
    objective = CosineObjective(backend, BASE, mask=mask)
    cfg = small_cfg("greedy", targeted=mask)
    result = greedy_attack(BASE, objective, cfg)
    assert result.config.targeted is mask
    assert result.final_loss == objective.loss(result.perturbed_prompt)
