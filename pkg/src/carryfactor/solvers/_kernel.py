"""Single-bit-flip Metropolis kernel shared by the QUBO and CQM annealers.

Energy of a state ``x``::

    h.x + x.J.x / 2 + sum_k w[k] * viol_k(c0[k] + A[k].x + x.B[k].x / 2) ** 2

``J`` and every ``B[k]`` are symmetric with a zero diagonal, and ``viol_k`` is
the distance of the constraint value from ``[lo[k], hi[k]]``. An unconstrained
QUBO passes zero-row ``A``/``B``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _viol(e, lo, hi):
    if e < lo:
        return lo - e
    if e > hi:
        return e - hi
    return 0.0


@njit(cache=True)
def anneal_run(h, J, c0, A, B, lo, hi, w, x0, betas, seed, target):
    np.random.seed(seed)
    v = h.shape[0]
    K = lo.shape[0]
    x = x0.copy()

    f = h.copy()
    for i in range(v):
        for j in range(v):
            f[i] += J[i, j] * x[j]
    g = A.copy()
    e = c0.copy()
    for k in range(K):
        for i in range(v):
            for j in range(v):
                g[k, i] += B[k, i, j] * x[j]
        for i in range(v):
            e[k] += 0.5 * (A[k, i] + g[k, i]) * x[i]

    energy = 0.0
    for i in range(v):
        energy += 0.5 * (h[i] + f[i]) * x[i]
    for k in range(K):
        d = _viol(e[k], lo[k], hi[k])
        energy += w[k] * d * d

    best = energy
    best_x = x.copy()
    sweeps = 0
    if best <= target + 1e-9:
        return best_x, best, sweeps

    for t in range(betas.shape[0]):
        beta = betas[t]
        for i in range(v):
            s = 1 - 2 * x[i]
            dE = s * f[i]
            for k in range(K):
                gi = g[k, i]
                if gi != 0.0:
                    d0 = _viol(e[k], lo[k], hi[k])
                    d1 = _viol(e[k] + s * gi, lo[k], hi[k])
                    dE += w[k] * (d1 * d1 - d0 * d0)
            if dE <= 0.0 or np.random.random() < np.exp(-beta * dE):
                x[i] += s
                for j in range(v):
                    f[j] += s * J[j, i]
                for k in range(K):
                    gi = g[k, i]
                    if gi != 0.0:
                        e[k] += s * gi
                    for j in range(v):
                        g[k, j] += s * B[k, j, i]
                energy += dE
                if energy < best - 1e-9:
                    best = energy
                    best_x[:] = x
        sweeps += 1
        if best <= target + 1e-9:
            break
    return best_x, best, sweeps
