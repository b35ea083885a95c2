import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rolerecon.reconstructor import (ReconParams, argument_terms, build_workspace, log_sigmoid, phi,
                                     recon_backward, recon_objective, score_tuple, sigmoid)

from conftest import random_mu, random_recon

POLICE, BATON, CAT = 0, 1, 2


def scalar_params():
    # d = k = 1; role projections (C_verb + C_shared) are 0.5 and 1.0
    return ReconParams(
        u=np.array([[2.0], [3.0], [-1.0]]),
        c_shared=np.array([[[0.2]], [[0.4]]]),
        c_verb=np.array([[[[0.3]], [[0.6]]]]),
        b=np.array([0.1, 0.0, 0.0]),
    )


ONE_HOT = np.array([[1.0, 0.0], [0.0, 1.0]])


def test_scalar_workspace():
    ws = build_workspace([POLICE, BATON], ONE_HOT, scalar_params(), 0)
    np.testing.assert_allclose(ws.messages.ravel(), [1.0, 3.0])
    np.testing.assert_allclose(ws.total, [4.0])


def test_scalar_phi():
    params = scalar_params()
    ws = build_workspace([POLICE, BATON], ONE_HOT, params, 0)
    assert phi(0, POLICE, ws, params) == pytest.approx(3.1, abs=1e-12)
    assert phi(0, CAT, ws, params) == pytest.approx(-1.5, abs=1e-12)


def test_scalar_objective_term():
    terms = argument_terms([POLICE, BATON], ONE_HOT, [[CAT], [CAT]], scalar_params(), 0)
    assert terms[0] == pytest.approx(-0.2455, abs=5e-5)
    assert terms[0] == pytest.approx(math.log(1 / (1 + math.exp(-3.1))) + math.log(1 / (1 + math.exp(-1.5))),
                                     abs=1e-12)


def test_scalar_score_tuple():
    assert score_tuple([POLICE, BATON], [0, 1], scalar_params(), 0) == pytest.approx(6.0, abs=1e-12)
    assert score_tuple([BATON, POLICE], [1, 0], scalar_params(), 0) == pytest.approx(6.0, abs=1e-12)
    assert score_tuple([POLICE], [0], scalar_params(), 0) == 0.0


def test_unknown_verb_uses_shared_only():
    params = scalar_params()
    ws = build_workspace([POLICE, BATON], ONE_HOT, params, -1)
    np.testing.assert_allclose(ws.messages.ravel(), [0.4, 1.2])
    grads = recon_backward([POLICE, BATON], ONE_HOT, [[CAT], [CAT]], params, -1)
    assert grads.c_verb is None


def test_single_argument_scores_bias():
    rng = np.random.default_rng(0)
    params = random_recon(rng, 6, 2, 3, 4, 3)
    ws = build_workspace([4], random_mu(rng, 1, 3), params, 1)
    np.testing.assert_array_equal(ws.total, ws.messages[0])
    for a in range(6):
        assert phi(0, a, ws, params) == params.b[a]


def test_uniform_mu_same_mixture():
    rng = np.random.default_rng(1)
    params = random_recon(rng, 5, 1, 3, 2, 2)
    ws = build_workspace([1, 2, 3], np.full((3, 3), 1 / 3), params, 0)
    assert np.array_equal(ws.mixed[0], ws.mixed[1]) and np.array_equal(ws.mixed[1], ws.mixed[2])


def test_all_zero_parameters():
    n = 4
    params = ReconParams(np.zeros((5, 2)), np.zeros((2, 2, 2)), np.zeros((1, 2, 2, 2)), np.zeros(5))
    negs = np.ones((3, n), dtype=int)
    terms = argument_terms([0, 1, 2], np.full((3, 2), 0.5), negs, params, 0)
    np.testing.assert_allclose(terms, -(1 + n) * math.log(2), atol=1e-15)


def test_stable_sigmoids():
    x = np.array([-800.0, -30.0, 0.0, 30.0, 800.0])
    assert np.all(np.isfinite(log_sigmoid(x)))
    np.testing.assert_allclose(log_sigmoid(x), -np.logaddexp(0, -x), rtol=1e-14)
    np.testing.assert_allclose(sigmoid(x), np.exp(log_sigmoid(x)), rtol=1e-14)


def test_saturated_positive_without_negatives_has_tiny_gradients():
    params = scalar_params()
    params.b[:] = 60.0
    grads = recon_backward([POLICE, BATON], ONE_HOT, np.zeros((2, 0), dtype=int), params, 0)
    assert np.abs(grads.u).max() < 1e-20 and np.abs(grads.c_shared).max() < 1e-20


def direct_phi(i, a, lemmas, mu, params, verb):
    """Evaluate phi without the workspace: sum over j != i of u_a^T A_i A_j^T u_{a_j} + b_a."""
    proj = params.projections(verb)
    A = [sum(mu[j, s] * proj[s] for s in range(proj.shape[0])) for j in range(len(lemmas))]
    total = 0.0
    for j in range(len(lemmas)):
        if j != i:
            total += params.u[a] @ A[i] @ A[j].T @ params.u[lemmas[j]]
    return total + params.b[a]


@st.composite
def tiny_cases(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(1, 4))
    r = draw(st.integers(2, 3))
    d = draw(st.integers(1, 3))
    k = draw(st.integers(1, 3))
    vocab = draw(st.integers(1, 10))
    n_neg = draw(st.integers(0, 3))
    params = random_recon(rng, vocab, 2, r, d, k)
    lemmas = rng.integers(0, vocab, n)
    negs = rng.integers(0, vocab, (n, n_neg))
    verb = draw(st.sampled_from([-1, 0, 1]))
    return lemmas, random_mu(rng, n, r), negs, params, verb


@settings(max_examples=100, deadline=None)
@given(tiny_cases())
def test_workspace_matches_direct_evaluation(case):
    lemmas, mu, negs, params, verb = case
    ws = build_workspace(lemmas, mu, params, verb)
    np.testing.assert_allclose(ws.total, ws.messages.sum(axis=0), atol=1e-10)
    for i in range(len(lemmas)):
        for a in range(len(params.b)):
            assert abs(phi(i, a, ws, params) - direct_phi(i, a, lemmas, mu, params, verb)) <= 1e-10


def _fd(f, x, h=1e-6):
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f()
        x[idx] = old - h
        down = f()
        x[idx] = old
        out[idx] = (up - down) / (2 * h)
    return out


def _close(analytic, numeric, rel=1e-6):
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    assert diff <= 1e-9 or diff / scale <= rel, (diff, scale)


@settings(max_examples=60, deadline=None)
@given(tiny_cases())
def test_backward_matches_finite_differences(case):
    lemmas, mu, negs, params, verb = case
    grads = recon_backward(lemmas, mu, negs, params, verb)

    def f():
        return recon_objective(lemmas, mu, negs, params, verb)

    assert grads.objective == pytest.approx(f(), abs=1e-12)
    n_lemmas = len(params.b)
    _close(grads.dense_u(n_lemmas), _fd(f, params.u))
    _close(grads.dense_b(n_lemmas), _fd(f, params.b))
    _close(grads.c_shared, _fd(f, params.c_shared))
    if verb >= 0:
        _close(grads.c_verb, _fd(f, params.c_verb)[verb])
    else:
        assert not _fd(f, params.c_verb).any()
    _close(grads.mu, _fd(f, mu))


def test_reference_tiny_model():
    rng = np.random.default_rng(7)
    params = random_recon(rng, 5, 1, 2, 2, 2)
    lemmas, mu, negs = np.array([0, 3, 4]), random_mu(rng, 3, 2), rng.integers(0, 5, (3, 2))
    test_backward_matches_finite_differences.hypothesis.inner_test((lemmas, mu, negs, params, 0))


@settings(max_examples=100, deadline=None)
@given(tiny_cases(), st.randoms(use_true_random=False))
def test_argument_permutation_invariance(case, rnd):
    lemmas, mu, negs, params, verb = case
    order = list(range(len(lemmas)))
    rnd.shuffle(order)
    assert recon_objective(lemmas[order], mu[order], negs[order], params, verb) == \
        recon_objective(lemmas, mu, negs, params, verb)
    assert score_tuple(lemmas[order], mu.argmax(1)[order], params, verb) == pytest.approx(
        score_tuple(lemmas, mu.argmax(1), params, verb), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(tiny_cases(), st.randoms(use_true_random=False))
def test_role_relabeling_equivariance(case, rnd):
    lemmas, mu, negs, params, verb = case
    perm = list(range(mu.shape[1]))
    rnd.shuffle(perm)
    relabeled = ReconParams(params.u, params.c_shared[perm], params.c_verb[:, perm], params.b)
    a = recon_backward(lemmas, mu, negs, params, verb)
    b = recon_backward(lemmas, mu[:, perm], negs, relabeled, verb)
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.c_shared[perm], b.c_shared)
    np.testing.assert_array_equal(a.mu[:, perm], b.mu)
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.b, b.b)


def test_phi_ignores_sentence():
    # phi only takes lemma ids, posteriors and the verb: there is no sentence argument to vary
    import inspect
    assert list(inspect.signature(build_workspace).parameters) == ["lemmas", "mu", "params", "verb"]
    assert list(inspect.signature(phi).parameters) == ["i", "candidate", "ws", "params"]


def test_negative_shape_checked():
    params = scalar_params()
    with pytest.raises(ValueError):
        recon_objective([0, 1], ONE_HOT, [[2]], params, 0)
    with pytest.raises(ValueError):
        build_workspace([0], ONE_HOT, params, 0)
