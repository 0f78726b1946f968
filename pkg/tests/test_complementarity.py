import random

import numpy as np
import pytest

from span_ensembles import CharMask, comp_prf, comp_rate, error_set


def mask(text, doc_id="d1"):
    return CharMask(doc_id, np.array([c == "1" for c in text]))


def test_error_set_examples():
    gold = {"d1": mask("1100")}
    assert error_set(gold, {"d1": mask("1100")}) == frozenset()
    assert error_set(gold, {"d1": mask("0011")}) == frozenset(
        {("d1", 0), ("d1", 1), ("d1", 2), ("d1", 3)}
    )
    assert error_set(gold, {"d1": mask("1010")}) == frozenset({("d1", 1), ("d1", 2)})


def test_comp_rate_cases():
    errors = frozenset({("d1", 1), ("d1", 2), ("d1", 3), ("d1", 4)})
    assert comp_rate(errors, errors) == 0.0
    other = frozenset({("d1", 3), ("d1", 4), ("d1", 5)})
    assert comp_rate(errors, other) == 50.0
    assert comp_rate(errors, frozenset()) == 100.0
    assert comp_rate(frozenset(), errors) == 0.0


def test_comp_rate_bounds():
    rng = random.Random(4)
    for _ in range(200):
        a = frozenset(("d1", rng.randrange(30)) for _ in range(rng.randrange(0, 20)))
        b = frozenset(("d1", rng.randrange(30)) for _ in range(rng.randrange(0, 20)))
        assert 0.0 <= comp_rate(a, b) <= 100.0


def test_comp_prf_b_perfect_on_a_errors():
    gold = {"d1": mask("1111100000")}
    pred_a = {"d1": mask("1110000000")}  # errors at positions 3, 4
    pred_b = {"d1": mask("0001100000")}  # exactly fixes them
    result = comp_prf(gold, pred_a, pred_b)
    assert (result.tp, result.fp, result.fn) == (2, 0, 0)
    assert result.f1 == 1.0


def test_comp_prf_b_repeats_a():
    gold = {"d1": mask("1111100000")}
    pred_a = {"d1": mask("1110011000")}
    result = comp_prf(gold, pred_a, dict(pred_a))
    assert result.tp == 0
    assert result.f1 == 0.0


def test_comp_prf_empty_error_set_is_degenerate():
    gold = {"d1": mask("1100")}
    result = comp_prf(gold, dict(gold), {"d1": mask("0011")})
    assert result.degenerate
    assert (result.tp, result.fp, result.fn) == (0, 0, 0)


def test_marginal_comp_rate_non_increasing_on_nested_pools():
    # nested error sets with non-decreasing size ratios: the best hypothetical
    # combination of the first m systems errs exactly on the m-th set, so each
    # added system's complementary rate shrinks
    sizes = [512, 256, 160, 120, 100]
    universe = [("d1", i) for i in range(600)]
    nested = [frozenset(universe[:s]) for s in sizes]
    rates = [comp_rate(nested[m], nested[m + 1]) for m in range(len(nested) - 1)]
    assert all(rates[i] >= rates[i + 1] - 1e-12 for i in range(len(rates) - 1))
    assert rates[0] == pytest.approx(50.0)
