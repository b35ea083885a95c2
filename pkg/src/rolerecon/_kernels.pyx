# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-instance training kernels.

Fused encoder forward pass, reconstruction objective, backpropagation into
both components and the AdaGrad update. Call signatures match
`rolerecon._kernels_py`.
"""

import numpy as np

from libc.math cimport exp, log1p, sqrt, isfinite
from libc.stdint cimport int64_t

BACKEND = "cython"


cdef inline double _log_sig(double x) noexcept nogil:
    if x >= 0:
        return -log1p(exp(-x))
    return x - log1p(exp(x))


cdef inline double _sig(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef class _Buffers:
    cdef public object mu, E, A, m, T, G, c, q, dq, dc, dm, dA, dE, dmu, dz
    cdef public object lemma_ids, dU, dB, feat_ids, dW

    def __init__(self, Py_ssize_t N, Py_ssize_t R, Py_ssize_t d, Py_ssize_t k,
                 Py_ssize_t n_cand, Py_ssize_t n_feat):
        self.mu = np.empty((N, R))
        self.E = np.empty((R, d, k))
        self.A = np.empty((N, d, k))
        self.m = np.empty((N, k))
        self.T = np.empty(k)
        self.G = np.empty(k)
        self.c = np.empty((N, k))
        self.q = np.empty((N, d))
        self.dq = np.empty((N, d))
        self.dc = np.empty((N, k))
        self.dm = np.empty((N, k))
        self.dA = np.empty((d, k))
        self.dE = np.empty((R, d, k))
        self.dmu = np.empty((N, R))
        self.dz = np.empty((N, R))
        self.lemma_ids = np.empty(n_cand, dtype=np.int64)
        self.dU = np.empty((n_cand, d))
        self.dB = np.empty(n_cand)
        self.feat_ids = np.empty(n_feat, dtype=np.int64)
        self.dW = np.empty((R, n_feat))


cdef double _backward(
        const double[:, ::1] W, const double[:, ::1] U, const double[:, :, ::1] Cs,
        const double[:, :, :, ::1] Cv, const double[::1] b, Py_ssize_t verb,
        const int64_t[::1] fids, const int64_t[::1] fptr, const int64_t[::1] lem,
        const int64_t[:, ::1] negs, double l2,
        double[:, ::1] mu, double[:, :, ::1] E, double[:, :, ::1] A, double[:, ::1] m,
        double[::1] T, double[::1] G, double[:, ::1] c, double[:, ::1] q, double[:, ::1] dq,
        double[:, ::1] dc, double[:, ::1] dm, double[:, ::1] dA, double[:, :, ::1] dE,
        double[:, ::1] dmu, double[:, ::1] dz,
        int64_t[::1] lslot, int64_t[::1] lemma_ids, double[:, ::1] dU, double[::1] dB,
        int64_t[::1] fslot, int64_t[::1] feat_ids, double[:, ::1] dW,
        Py_ssize_t* n_lem, Py_ssize_t* n_feat) noexcept nogil:
    cdef Py_ssize_t N = lem.shape[0], R = W.shape[0], d = U.shape[1], k = Cs.shape[2]
    cdef Py_ssize_t n = negs.shape[1]
    cdef Py_ssize_t i, s, x, y, p, t, a, f, slot, nl = 0, nf = 0
    cdef double z, mx, tot, w, acc, ph, g, obj = 0.0

    # role posteriors
    for i in range(N):
        mx = -1e300
        for s in range(R):
            z = 0.0
            for p in range(fptr[i], fptr[i + 1]):
                z += W[s, fids[p]]
            mu[i, s] = z
            if z > mx:
                mx = z
        tot = 0.0
        for s in range(R):
            mu[i, s] = exp(mu[i, s] - mx)
            tot += mu[i, s]
        for s in range(R):
            mu[i, s] /= tot

    # effective projections and their posterior mixtures
    for s in range(R):
        for x in range(d):
            for y in range(k):
                E[s, x, y] = Cs[s, x, y] + (Cv[verb, s, x, y] if verb >= 0 else 0.0)
    for i in range(N):
        for x in range(d):
            for y in range(k):
                A[i, x, y] = 0.0
        for s in range(R):
            w = mu[i, s]
            for x in range(d):
                for y in range(k):
                    A[i, x, y] += w * E[s, x, y]

    # messages, context, queries
    for y in range(k):
        T[y] = 0.0
    for i in range(N):
        a = lem[i]
        for y in range(k):
            acc = 0.0
            for x in range(d):
                acc += A[i, x, y] * U[a, x]
            m[i, y] = acc
            T[y] += acc
    for i in range(N):
        for y in range(k):
            c[i, y] = T[y] - m[i, y]
        for x in range(d):
            acc = 0.0
            for y in range(k):
                acc += A[i, x, y] * c[i, y]
            q[i, x] = acc

    # candidate scores; gradients w.r.t. the queries and candidate lemmas
    for i in range(N):
        for x in range(d):
            dq[i, x] = 0.0
        for t in range(n + 1):
            a = lem[i] if t == 0 else negs[i, t - 1]
            ph = b[a]
            for x in range(d):
                ph += U[a, x] * q[i, x]
            if t == 0:
                obj += _log_sig(ph)
                g = _sig(-ph)
            else:
                obj += _log_sig(-ph)
                g = -_sig(ph)
            slot = lslot[a]
            if slot < 0:
                slot = nl
                nl += 1
                lslot[a] = slot
                lemma_ids[slot] = a
                dB[slot] = 0.0
                for x in range(d):
                    dU[slot, x] = 0.0
            dB[slot] += g
            for x in range(d):
                dq[i, x] += g * U[a, x]
                dU[slot, x] += g * q[i, x]

    # back through queries into contexts and messages
    for y in range(k):
        G[y] = 0.0
    for i in range(N):
        for y in range(k):
            acc = 0.0
            for x in range(d):
                acc += A[i, x, y] * dq[i, x]
            dc[i, y] = acc
            G[y] += acc
    for i in range(N):
        for y in range(k):
            dm[i, y] = G[y] - dc[i, y]

    # into mixtures, projections, posteriors and the arguments' own embeddings
    for s in range(R):
        for x in range(d):
            for y in range(k):
                dE[s, x, y] = 0.0
    for i in range(N):
        a = lem[i]
        slot = lslot[a]
        for x in range(d):
            acc = 0.0
            for y in range(k):
                dA[x, y] = dq[i, x] * c[i, y] + U[a, x] * dm[i, y]
                acc += A[i, x, y] * dm[i, y]
            dU[slot, x] += acc
        for s in range(R):
            w = mu[i, s]
            acc = 0.0
            for x in range(d):
                for y in range(k):
                    acc += E[s, x, y] * dA[x, y]
                    dE[s, x, y] += w * dA[x, y]
            dmu[i, s] = acc

    # through the softmax into encoder weights
    for i in range(N):
        acc = 0.0
        for s in range(R):
            acc += mu[i, s] * dmu[i, s]
        for s in range(R):
            dz[i, s] = mu[i, s] * (dmu[i, s] - acc)
        for p in range(fptr[i], fptr[i + 1]):
            f = fids[p]
            slot = fslot[f]
            if slot < 0:
                slot = nf
                nf += 1
                fslot[f] = slot
                feat_ids[slot] = f
                for s in range(R):
                    dW[s, slot] = -l2 * W[s, f]
            for s in range(R):
                dW[s, slot] += dz[i, s]

    n_lem[0] = nl
    n_feat[0] = nf
    return obj


cdef double _run(_Buffers buf, W, U, Cs, Cv, b, Py_ssize_t verb, fids, fptr, lemmas, negs, double l2,
                 int64_t[::1] lslot, int64_t[::1] fslot, Py_ssize_t* nl, Py_ssize_t* nf):
    return _backward(W, U, Cs, Cv, b, verb, fids, fptr, lemmas, negs, l2,
                     buf.mu, buf.E, buf.A, buf.m, buf.T, buf.G, buf.c, buf.q, buf.dq, buf.dc,
                     buf.dm, buf.dA, buf.dE, buf.dmu, buf.dz,
                     lslot, buf.lemma_ids, buf.dU, buf.dB, fslot, buf.feat_ids, buf.dW, nl, nf)


def _prepare(W, U, Cs, lemmas, negs, fids):
    N = lemmas.shape[0]
    return _Buffers(N, W.shape[0], U.shape[1], Cs.shape[2], N * (negs.shape[1] + 1), fids.shape[0])


def _negatives(negs, N):
    negs = np.ascontiguousarray(negs, dtype=np.int64)
    if negs.size == 0:
        negs = negs.reshape(N, 0)
    return negs


def instance_grad(W, U, Cs, Cv, b, verb, fids, fptr, lemmas, negs, l2=0.0):
    """Objective and sparse gradients of one instance.

    Returns ``(objective, mu, feat_ids, dW, lemma_ids, dU, dB, dC, dmu)`` with
    feature and lemma ids sorted ascending.
    """
    lemmas = np.ascontiguousarray(lemmas, dtype=np.int64)
    fids = np.ascontiguousarray(fids, dtype=np.int64)
    fptr = np.ascontiguousarray(fptr, dtype=np.int64)
    negs = _negatives(negs, lemmas.shape[0])
    buf = _prepare(W, U, Cs, lemmas, negs, fids)
    lslot = np.full(U.shape[0], -1, dtype=np.int64)
    fslot = np.full(W.shape[1], -1, dtype=np.int64)
    cdef Py_ssize_t nl = 0, nf = 0
    obj = _run(buf, W, U, Cs, Cv, b, verb, fids, fptr, lemmas, negs, l2, lslot, fslot, &nl, &nf)
    lorder = np.argsort(buf.lemma_ids[:nl], kind="stable")
    forder = np.argsort(buf.feat_ids[:nf], kind="stable")
    return (obj, buf.mu.copy(), buf.feat_ids[:nf][forder], buf.dW[:, :nf][:, forder],
            buf.lemma_ids[:nl][lorder], buf.dU[:nl][lorder], buf.dB[:nl][lorder],
            buf.dE.copy(), buf.dmu.copy())


def instance_step(W, U, Cs, Cv, b, hW, hU, hCs, hCv, hb, Py_ssize_t verb, fids, fptr, lemmas, negs,
                  double lr, double eps, double l2, fslot=None, lslot=None):
    """One AdaGrad ascent step on a single instance; returns the pre-update objective.

    `fslot` and `lslot` are int64 scratch arrays of length n_features and
    n_lemmas filled with -1; they are restored before returning.
    """
    if lslot is None:
        lslot = np.full(U.shape[0], -1, dtype=np.int64)
    if fslot is None:
        fslot = np.full(W.shape[1], -1, dtype=np.int64)
    negs = _negatives(negs, lemmas.shape[0])
    buf = _prepare(W, U, Cs, lemmas, negs, fids)
    cdef Py_ssize_t nl = 0, nf = 0
    cdef int64_t[::1] ls = lslot, fs = fslot
    cdef double obj = _run(buf, W, U, Cs, Cv, b, verb, fids, fptr, lemmas, negs, l2, ls, fs, &nl, &nf)

    cdef double[:, ::1] w_ = W, u_ = U, hw = hW, hu = hU
    cdef double[:, :, ::1] cs = Cs, hcs = hCs
    cdef double[:, :, :, ::1] cv = Cv, hcv = hCv
    cdef double[::1] b_ = b, hb_ = hb
    cdef double[:, ::1] dW = buf.dW, dU = buf.dU
    cdef double[::1] dB = buf.dB
    cdef double[:, :, ::1] dE = buf.dE
    cdef int64_t[::1] feat_ids = buf.feat_ids, lemma_ids = buf.lemma_ids
    cdef Py_ssize_t j, s, x, y, f, a
    cdef Py_ssize_t R = w_.shape[0], d = u_.shape[1], k = cs.shape[2]
    cdef double g
    cdef bint ok = isfinite(obj)

    with nogil:
        for j in range(nf):
            f = feat_ids[j]
            fs[f] = -1
            if ok:
                for s in range(R):
                    g = dW[s, j]
                    hw[s, f] += g * g
                    w_[s, f] += lr * g / (sqrt(hw[s, f]) + eps)
        for j in range(nl):
            a = lemma_ids[j]
            ls[a] = -1
            if ok:
                for x in range(d):
                    g = dU[j, x]
                    hu[a, x] += g * g
                    u_[a, x] += lr * g / (sqrt(hu[a, x]) + eps)
                g = dB[j]
                hb_[a] += g * g
                b_[a] += lr * g / (sqrt(hb_[a]) + eps)
        if ok:
            for s in range(R):
                for x in range(d):
                    for y in range(k):
                        g = dE[s, x, y]
                        hcs[s, x, y] += g * g
                        cs[s, x, y] += lr * g / (sqrt(hcs[s, x, y]) + eps)
                        if verb >= 0:
                            hcv[verb, s, x, y] += g * g
                            cv[verb, s, x, y] += lr * g / (sqrt(hcv[verb, s, x, y]) + eps)
    return obj
