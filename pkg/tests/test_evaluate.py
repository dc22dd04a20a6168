import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mse_loops, nmi_exact, purity_bruteforce, var_recursion, var_stacked_ols
from rfa import evaluate
from rfa.errors import InputError

labels = st.lists(st.integers(1, 4), min_size=2, max_size=40)


def test_nmi_frozen():
    assert evaluate.nmi([1, 1, 1, 2, 2], [1, 1, 2, 2, 2]) == pytest.approx(0.43253806776631265, abs=1e-12)


def test_nmi_undefined_for_single_group():
    assert evaluate.nmi([1, 1, 1], [1, 2, 3]) is None
    assert evaluate.nmi([1, 2, 3], [1, 1, 1]) is None
    score = evaluate.cluster_score([1, 1, 2], [1, 1, 1])
    assert not score.nmi_defined
    assert score.purity == pytest.approx(2 / 3)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_nmi_and_purity_match_oracle(data):
    a = data.draw(labels)
    b = data.draw(st.lists(st.integers(1, 4), min_size=len(a), max_size=len(a)))
    got = evaluate.nmi(a, b)
    if len(set(a)) == 1 or len(set(b)) == 1:
        assert got is None
    else:
        assert got == pytest.approx(nmi_exact(a, b), abs=1e-12)
        assert 0 <= got <= 1
        assert evaluate.nmi(b, a) == pytest.approx(got, abs=1e-12)
    p = evaluate.purity(a, b)
    assert p == pytest.approx(purity_bruteforce(a, b))
    assert 1 / len(a) <= p <= 1


@settings(max_examples=40, deadline=None)
@given(labels, st.permutations([1, 2, 3, 4]))
def test_relabeling_invariance(a, perm):
    if len(set(a)) < 2:
        return
    b = [perm[x - 1] for x in a]
    assert evaluate.nmi(a, b) == pytest.approx(1.0, abs=1e-12)
    assert evaluate.purity(a, b) == 1.0


def test_mse():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((2, 7, 4))
    assert evaluate.common_component_mse(a, b) == pytest.approx(mse_loops(a, b), rel=1e-12)
    assert evaluate.common_component_mse(a, a) == 0.0
    with pytest.raises(InputError):
        evaluate.common_component_mse(a, b[:, :3])


def test_var_matches_stacked_ols():
    rng = np.random.default_rng(1)
    f = rng.standard_normal((60, 2)).cumsum(axis=0) * 0.1 + rng.standard_normal((60, 2))
    model = evaluate.fit_var(f, 3)
    c, a = var_stacked_ols(f, 3)
    np.testing.assert_allclose(model.intercept, c, atol=1e-10)
    np.testing.assert_allclose(model.coefs, a, atol=1e-10)
    fc = evaluate.forecast_var(model, f, 5)
    np.testing.assert_allclose(fc, var_recursion(c, a, f[-3:], 5), atol=1e-9)


def test_var_recovers_known_process():
    rng = np.random.default_rng(2)
    a1 = np.array([[0.5, 0.1], [0.0, 0.3]])
    f = np.zeros((20_000, 2))
    for t in range(1, f.shape[0]):
        f[t] = a1 @ f[t - 1] + rng.standard_normal(2)
    model = evaluate.fit_var(f, 1)
    np.testing.assert_allclose(model.coefs[0], a1, atol=0.03)
    np.testing.assert_allclose(model.residual_cov, np.eye(2), atol=0.05)


def test_var_needs_enough_data():
    with pytest.raises(InputError):
        evaluate.fit_var(np.zeros((7, 2)), 3)
    with pytest.raises(InputError):
        evaluate.fit_var(np.zeros((50, 2)), 0)


def test_forecast_panel_mse():
    lam = np.array([[1.0], [2.0]])
    out = evaluate.forecast_panel_mse(lam, [[1.0], [0.0]], [[1.0, 1.0], [0.0, 2.0]])
    np.testing.assert_allclose(out, [0.5, 2.0])


def test_contingency():
    t = evaluate.contingency([1, 1, 2, 2], [1, 2, 2, 2])
    assert t.tolist() == [[1, 1], [0, 2]]
