"""Bilinear argument reconstruction with negative sampling.

An argument lemma ``a`` at position ``i`` is scored against the other
arguments of the same predicate as

    phi_i(a) = u_a . A_i (T - m_i) + b_a

where ``A_i = sum_s mu[i, s] (C_verb[v, s] + C_shared[s])`` mixes the role
projections by the encoder posteriors, ``m_j = A_j^T u_{a_j}`` is the message
sent by argument ``j`` and ``T`` is the sum of all messages. Projection
matrices are ``d x k``; embeddings live in ``R^d`` and messages in ``R^k``.

The training objective for one instance is

    sum_i [ log sig(phi_i(a_i)) + sum_{a' in S_i} log sig(-phi_i(a')) ]

with ``S_i`` a sample of lemmas from the unigram distribution. The softmax
normaliser over the whole vocabulary is never computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .encoder import canonical_sum

INIT_SCALE = 0.01


def log_sigmoid(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(-np.abs(x))))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class ReconParams:
    u: np.ndarray          # (n_lemmas, d)
    c_shared: np.ndarray   # (R, d, k)
    c_verb: np.ndarray     # (n_verbs, R, d, k)
    b: np.ndarray          # (n_lemmas,)

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    @property
    def proj(self) -> int:
        return self.c_shared.shape[2]

    @property
    def n_roles(self) -> int:
        return self.c_shared.shape[0]

    @classmethod
    def initialize(cls, n_lemmas: int, n_verbs: int, n_roles: int, dim: int, proj: int,
                   rng: np.random.Generator, scale: float = INIT_SCALE) -> "ReconParams":
        if dim < 1 or proj < 1:
            raise ValueError("dim and proj must be >= 1")
        return cls(
            u=rng.uniform(-scale, scale, (n_lemmas, dim)),
            c_shared=rng.uniform(-scale, scale, (n_roles, dim, proj)),
            c_verb=rng.uniform(-scale, scale, (n_verbs, n_roles, dim, proj)),
            b=np.zeros(n_lemmas),
        )

    def projections(self, verb: int) -> np.ndarray:
        """C_verb[verb] + C_shared, or C_shared alone for an unknown verb (verb < 0)."""
        if verb < 0:
            return self.c_shared
        return self.c_verb[verb] + self.c_shared


@dataclass
class Workspace:
    lemmas: np.ndarray     # (N,)
    proj: np.ndarray       # (R, d, k) effective role projections
    mixed: np.ndarray      # (N, d, k) A_i
    messages: np.ndarray   # (N, k) m_i
    total: np.ndarray      # (k,) T

    def context(self) -> np.ndarray:
        """(N, k) context vectors T - m_i."""
        return self.total[None, :] - self.messages

    def queries(self) -> np.ndarray:
        """(N, d) vectors A_i (T - m_i); phi_i(a) = u_a . query_i + b_a."""
        return (self.mixed * self.context()[:, None, :]).sum(axis=2)


def build_workspace(lemmas: Sequence[int], mu: np.ndarray, params: ReconParams, verb: int) -> Workspace:
    lemmas = np.asarray(lemmas, dtype=np.int64)
    if mu.shape[0] != len(lemmas):
        raise ValueError(f"posterior rows ({mu.shape[0]}) != arguments ({len(lemmas)})")
    proj = params.projections(verb)
    mixed = canonical_sum(mu[:, :, None, None] * proj[None], axis=1)
    messages = (mixed * params.u[lemmas][:, :, None]).sum(axis=1)
    total = canonical_sum(messages, axis=0)
    return Workspace(lemmas, proj, mixed, messages, total)


def phi(i: int, candidate: int, ws: Workspace, params: ReconParams) -> float:
    context = ws.total - ws.messages[i]
    query = (ws.mixed[i] * context[None, :]).sum(axis=1)
    return float((params.u[candidate] * query).sum() + params.b[candidate])


def _candidate_scores(ws: Workspace, negatives: np.ndarray, params: ReconParams):
    queries = ws.queries()
    pos = (params.u[ws.lemmas] * queries).sum(axis=1) + params.b[ws.lemmas]
    neg = (params.u[negatives] * queries[:, None, :]).sum(axis=2) + params.b[negatives]
    return queries, pos, neg


def _as_negatives(negatives, n_args: int) -> np.ndarray:
    negatives = np.asarray(negatives, dtype=np.int64)
    if negatives.size == 0:
        return negatives.reshape(n_args, 0)
    if negatives.ndim != 2 or negatives.shape[0] != n_args:
        raise ValueError("need one list of negatives per argument, all of the same length")
    return negatives


def argument_terms(lemmas, mu, negatives, params: ReconParams, verb: int) -> np.ndarray:
    """Per-argument objective terms."""
    ws = build_workspace(lemmas, mu, params, verb)
    negatives = _as_negatives(negatives, len(ws.lemmas))
    _, pos, neg = _candidate_scores(ws, negatives, params)
    return log_sigmoid(pos) + log_sigmoid(-neg).sum(axis=1)


def recon_objective(lemmas, mu, negatives, params: ReconParams, verb: int) -> float:
    """Negative-sampling objective of one instance (higher is better)."""
    return float(canonical_sum(argument_terms(lemmas, mu, negatives, params, verb)))


@dataclass
class ReconGrads:
    objective: float
    lemma_ids: np.ndarray                # (L,) distinct lemma ids touched
    u: np.ndarray                        # (L, d)
    b: np.ndarray                        # (L,)
    c_shared: np.ndarray                 # (R, d, k)
    c_verb: Optional[np.ndarray]         # (R, d, k) for the instance's verb, None if unknown
    mu: np.ndarray                       # (N, R)

    def dense_u(self, n_lemmas: int) -> np.ndarray:
        out = np.zeros((n_lemmas, self.u.shape[1]))
        out[self.lemma_ids] = self.u
        return out

    def dense_b(self, n_lemmas: int) -> np.ndarray:
        out = np.zeros(n_lemmas)
        out[self.lemma_ids] = self.b
        return out


def recon_backward(lemmas, mu, negatives, params: ReconParams, verb: int) -> ReconGrads:
    """Objective and its exact gradients w.r.t. u, b, both projection groups and mu."""
    ws = build_workspace(lemmas, mu, params, verb)
    n_args = len(ws.lemmas)
    negatives = _as_negatives(negatives, n_args)
    queries, pos, neg = _candidate_scores(ws, negatives, params)
    objective = float(canonical_sum(log_sigmoid(pos) + log_sigmoid(-neg).sum(axis=1)))

    # d objective / d phi
    g_pos = sigmoid(-pos)
    g_neg = -sigmoid(neg)

    cand = np.concatenate([ws.lemmas[:, None], negatives], axis=1)       # (N, 1+n)
    g = np.concatenate([g_pos[:, None], g_neg], axis=1)                   # (N, 1+n)
    d_query = (g[:, :, None] * params.u[cand]).sum(axis=1)                # (N, d)
    context = ws.context()
    d_context = (ws.mixed * d_query[:, :, None]).sum(axis=1)              # (N, k)
    d_messages = d_context.sum(axis=0)[None, :] - d_context               # (N, k)
    own_u = params.u[ws.lemmas]
    d_mixed = d_query[:, :, None] * context[:, None, :] + own_u[:, :, None] * d_messages[:, None, :]

    # lemma-side gradients, merged over repeated ids
    flat_ids = np.concatenate([cand.ravel(), ws.lemmas])
    flat_du = np.concatenate([
        (g[:, :, None] * queries[:, None, :]).reshape(-1, params.dim),
        (ws.mixed * d_messages[:, None, :]).sum(axis=2),
    ])
    flat_db = np.concatenate([g.ravel(), np.zeros(n_args)])
    lemma_ids, inverse = np.unique(flat_ids, return_inverse=True)
    du = np.zeros((len(lemma_ids), params.dim))
    db = np.zeros(len(lemma_ids))
    np.add.at(du, inverse, flat_du)
    np.add.at(db, inverse, flat_db)

    # order-independent sums keep gradients exactly equivariant under relabelings
    d_proj = canonical_sum(mu[:, :, None, None] * d_mixed[:, None], axis=0)
    d_mu = (ws.proj[None] * d_mixed[:, None]).reshape(n_args, mu.shape[1], -1).sum(axis=2)
    return ReconGrads(
        objective=objective,
        lemma_ids=lemma_ids,
        u=du,
        b=db,
        c_shared=d_proj,
        c_verb=d_proj.copy() if verb >= 0 else None,
        mu=d_mu,
    )


def score_tuple(lemmas, roles, params: ReconParams, verb: int) -> float:
    """Hard-assignment tuple score: sum over ordered pairs i != j of m_i . m_j."""
    lemmas = np.asarray(lemmas, dtype=np.int64)
    roles = np.asarray(roles, dtype=np.int64)
    proj = params.projections(verb)
    messages = np.einsum("idk,id->ik", proj[roles], params.u[lemmas])
    total = messages.sum(axis=0)
    return float((messages * (total[None, :] - messages)).sum())
