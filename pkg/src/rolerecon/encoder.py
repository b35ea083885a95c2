"""Per-argument multinomial logistic role classifier."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class EncoderParams:
    # (n_roles, n_features); row s holds the weight vector of role s
    weights: np.ndarray

    @property
    def n_roles(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def zeros(cls, n_roles: int, n_features: int) -> "EncoderParams":
        if n_roles < 2:
            raise ValueError("need at least two roles")
        return cls(np.zeros((n_roles, n_features)))


def canonical_sum(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Sum along `axis` after sorting, so the result ignores the order of the summands."""
    return np.sort(x, axis=axis).sum(axis=axis)


def scores(features: Sequence[np.ndarray], params: EncoderParams) -> np.ndarray:
    """(N, R) matrix of role scores, z[i, s] = sum of w[s, f] over the features of argument i."""
    w = params.weights
    z = np.empty((len(features), w.shape[0]))
    for i, ids in enumerate(features):
        z[i] = w[:, ids].sum(axis=1)
    return z


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / canonical_sum(e, axis=1)[:, None]


def posteriors(features: Sequence[np.ndarray], params: EncoderParams) -> np.ndarray:
    """Role posteriors mu (N, R); rows sum to one."""
    return softmax(scores(features, params))


def score_gradient(mu: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Pull dL/dmu back through the row softmax to dL/dz."""
    return mu * (upstream - canonical_sum(mu * upstream, axis=1)[:, None])


def encoder_backward(features: Sequence[np.ndarray], mu: np.ndarray, upstream: np.ndarray,
                     n_features: int) -> np.ndarray:
    """Dense gradient over the weight matrix given dL/dmu."""
    dz = score_gradient(mu, upstream)
    grad = np.zeros((mu.shape[1], n_features))
    for i, ids in enumerate(features):
        grad[:, ids] += dz[i][:, None]
    return grad


def sparse_encoder_backward(features: Sequence[np.ndarray], mu: np.ndarray, upstream: np.ndarray):
    """Like `encoder_backward` but restricted to the touched feature columns.

    Returns ``(ids, grad)`` with ``grad[:, j]`` the gradient of column ``ids[j]``.
    """
    dz = score_gradient(mu, upstream)
    flat = np.concatenate(features) if len(features) else np.zeros(0, dtype=np.int64)
    ids, inverse = np.unique(flat, return_inverse=True)
    owner = np.repeat(np.arange(len(features)), [len(f) for f in features])
    grad = np.zeros((mu.shape[1], len(ids)))
    np.add.at(grad.T, inverse, dz[owner])
    return ids, grad


def predict_roles(features: Sequence[np.ndarray], params: EncoderParams) -> np.ndarray:
    # argmax returns the first maximum, i.e. the smallest role id on ties
    return scores(features, params).argmax(axis=1)
