"""Pure NumPy training kernels, used when the compiled extension is unavailable.

Same call signatures as the Cython module `rolerecon._kernels`.
"""

from __future__ import annotations

import numpy as np

from .encoder import EncoderParams, posteriors, sparse_encoder_backward
from .reconstructor import ReconParams, recon_backward

BACKEND = "python"


def _split(fids, fptr):
    return [fids[fptr[i]:fptr[i + 1]] for i in range(len(fptr) - 1)]


def instance_grad(W, U, Cs, Cv, b, verb, fids, fptr, lemmas, negs, l2=0.0):
    """Objective and sparse gradients of one instance.

    Returns ``(objective, mu, feat_ids, dW, lemma_ids, dU, dB, dC, dmu)``;
    ``dW`` is (R, len(feat_ids)) and ``dC`` is the gradient shared by the
    cross-predicate and the verb-specific projections.
    """
    feats = _split(fids, fptr)
    mu = posteriors(feats, EncoderParams(W))
    grads = recon_backward(lemmas, mu, negs, ReconParams(U, Cs, Cv, b), int(verb))
    feat_ids, dW = sparse_encoder_backward(feats, mu, grads.mu)
    if l2:
        dW -= l2 * W[:, feat_ids]
    return (grads.objective, mu, feat_ids, dW, grads.lemma_ids, grads.u, grads.b,
            grads.c_shared, grads.mu)


def adagrad(param, hist, grad, lr, eps):
    hist += grad * grad
    param += lr * grad / (np.sqrt(hist) + eps)


def instance_step(W, U, Cs, Cv, b, hW, hU, hCs, hCv, hb, verb, fids, fptr, lemmas, negs,
                  lr, eps, l2, fslot=None, lslot=None):
    """One AdaGrad ascent step on a single instance; returns the pre-update objective."""
    obj, _, feat_ids, dW, lemma_ids, dU, dB, dC, _ = instance_grad(
        W, U, Cs, Cv, b, verb, fids, fptr, lemmas, negs, l2)
    if not np.isfinite(obj):
        return obj

    w_cols, h_cols = W[:, feat_ids], hW[:, feat_ids]
    adagrad(w_cols, h_cols, dW, lr, eps)
    W[:, feat_ids], hW[:, feat_ids] = w_cols, h_cols

    u_rows, hu_rows = U[lemma_ids], hU[lemma_ids]
    adagrad(u_rows, hu_rows, dU, lr, eps)
    U[lemma_ids], hU[lemma_ids] = u_rows, hu_rows

    b_rows, hb_rows = b[lemma_ids], hb[lemma_ids]
    adagrad(b_rows, hb_rows, dB, lr, eps)
    b[lemma_ids], hb[lemma_ids] = b_rows, hb_rows

    adagrad(Cs, hCs, dC, lr, eps)
    if verb >= 0:
        adagrad(Cv[verb], hCv[verb], dC, lr, eps)
    return obj
