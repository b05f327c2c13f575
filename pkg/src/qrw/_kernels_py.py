"""NumPy implementations of the hot loops (used when the extension is absent)."""
import numpy as np


def theta_pairs(psi, blocks, first):
    """Right-multiply consecutive column groups of ``psi`` by ``blocks`` in place.

    ``psi`` has shape (batch, N); ``blocks`` has shape (P, w, w).  Columns
    ``first + p*w .. first + (p+1)*w - 1`` are replaced by their product
    with ``blocks[p]``.
    """
    npair, w, _ = blocks.shape
    if npair == 0:
        return psi
    seg = psi[:, first: first + npair * w].reshape(psi.shape[0], npair, w)
    psi[:, first: first + npair * w] = np.einsum("bpr,prq->bpq", seg, blocks).reshape(psi.shape[0], -1)
    return psi


def coin_step(up, down, coins, halfline):
    """One step of a coined walk on site arrays of shape (batch, S).

    ``coins`` has shape (S, 4) holding (c11, c12, c21, c22) per site.  An up
    spin at site i moves to (i+1, up) with c11 and to (i-1, down) with c21;
    a down spin moves with c12 and c22.  On the half-line the move from
    site 0 towards -1 lands on (0, up).
    """
    c11, c12, c21, c22 = coins[:, 0], coins[:, 1], coins[:, 2], coins[:, 3]
    right = c11 * up + c12 * down
    left = c21 * up + c22 * down
    new_up = np.zeros_like(up)
    new_down = np.zeros_like(down)
    new_up[:, 1:] = right[:, :-1]
    new_down[:, :-1] = left[:, 1:]
    if halfline:
        new_up[:, 0] += left[:, 0]
    return new_up, new_down


def szego_ratio(alphas, zs, tol, min_iter):
    """Ratio ``phi~*_j(z) / phi*_j(z)`` with ``phi~`` built from ``-alpha``.

    Iterates until two-step changes drop below ``tol`` (after ``min_iter``
    steps) or the parameter array is exhausted.  Returns the ratios, the last
    two-step gaps and the iteration counts.
    """
    zs = np.asarray(zs, dtype=complex)
    n = zs.size
    phi = np.ones(n, complex)
    phis = np.ones(n, complex)
    tphi = np.ones(n, complex)
    tphis = np.ones(n, complex)
    r_prev2 = np.ones(n, complex)
    r_prev = np.ones(n, complex)
    ratio = np.ones(n, complex)
    gap = np.full(n, np.inf)
    iters = np.zeros(n, dtype=np.int64)
    active = np.ones(n, bool)
    for j, a in enumerate(alphas):
        rho = np.sqrt(1.0 - abs(a) ** 2)
        ca = np.conj(a)
        z = zs[active]
        p, ps, tp, tps = phi[active], phis[active], tphi[active], tphis[active]
        p, ps = (z * p - ca * ps) / rho, (ps - a * z * p) / rho
        tp, tps = (z * tp + ca * tps) / rho, (tps + a * z * tp) / rho
        scale = np.abs(ps)
        p, ps, tp, tps = p / scale, ps / scale, tp / scale, tps / scale
        phi[active], phis[active], tphi[active], tphis[active] = p, ps, tp, tps
        r = tps / ps
        idx = np.flatnonzero(active)
        g = np.abs(r - r_prev2[idx])
        ratio[idx] = r
        gap[idx] = g
        iters[idx] = j + 1
        r_prev2[idx] = r_prev[idx]
        r_prev[idx] = r
        done = (g < tol * np.maximum(1.0, np.abs(r))) & (j + 1 >= min_iter)
        active[idx[done]] = False
        if not active.any():
            break
    return ratio, gap, iters
