"""Karlin–McGregor amplitudes, moments and the direct-evolution oracle.

Amplitudes are ``(U^n)_{j,k} = int z^n X_j(z) dmu(z) X_k(z)^H`` where
``X_j = lambda_j x_j`` are the gauge-dressed orthonormal Laurent polynomials
(blocks on the line).  Integrals over the closed-form measures use
tanh-sinh quadrature on each support arc; the density is evaluated from the
distance to the nearest arc end so endpoint singularities stay accurate.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from . import kernels
from .closed_forms import appendix_laurent, appendix_measure
from .cmv import StateVector
from .coins import WalkModel, amplitude_index, fold_to_line, line_to_fold
from .opuc import laurent_polynomials

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "UnsupportedWalkError",
    "AmplitudeTable",
    "integrate",
    "quadrature_nodes",
    "moments",
    "series_moments",
    "walk_measure",
    "walk_polynomials",
    "kmcg_matrix",
    "amplitude_halfline",
    "amplitude_line",
    "direct_powers",
    "direct_amplitudes",
    "evolve",
]

DEFAULT_TOL = 1e-10
_TMAX = 5.0  # tanh-sinh half-width in t; nodes reach ~1e-100 from each arc end


def _env_tol() -> float:
    raw = os.environ.get("QRW_QUAD_TOL")
    if not raw:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise ValueError(f"QRW_QUAD_TOL must be a number, got {raw!r}") from None
    if not tol > 0:
        raise ValueError("QRW_QUAD_TOL must be positive")
    return tol


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and refinement budget for arc quadrature.

    ``abs_tol`` defaults to ``QRW_QUAD_TOL`` from the environment, else 1e-10.
    Each refinement halves the tanh-sinh step, starting from 1/8.
    """

    abs_tol: float = field(default_factory=_env_tol)
    max_refinement: int = 8
    endpoint_handling: bool = True

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")


class QuadratureError(RuntimeError):
    """Refinement budget exhausted; carries the best estimate and error bound."""

    def __init__(self, msg, estimate=None, error=None):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


class UnsupportedWalkError(ValueError):
    pass


def quadrature_nodes(measure, h: float, endpoint_handling: bool = True):
    """Nodes ``z`` (rotated) and weights (density included) for step ``h``.

    Point masses are appended as extra nodes carrying their mass.  Weights are
    scalars for scalar measures and 2x2 matrices for matrix measures.
    """
    zs, ws = [], []
    for sign, (lo, hi) in zip((1.0, -1.0), measure.arcs):
        hw = 0.5 * (hi - lo)
        if hw <= 0:
            continue
        if endpoint_handling:
            t = np.arange(-_TMAX, _TMAX + 0.5 * h, h)
            u = 0.5 * np.pi * np.sinh(t)
            comp = 1.0 / (np.exp(np.abs(u)) * np.cosh(u))  # 1 - |tanh u|, accurate
            d = hw * comp
            theta = np.where(t < 0, lo + d, hi - d)
            wt = hw * h * 0.5 * np.pi * np.cosh(t) / np.cosh(u) ** 2
        else:
            m = max(8, int(round(2 * hw / h)))
            theta = lo + (np.arange(m) + 0.5) * (2 * hw / m)
            d = np.minimum(theta - lo, hi - theta)
            wt = np.full(m, 2 * hw / m)
        dens = measure.arc_weight(sign, d)
        wt = wt / (2 * np.pi)
        zs.append(np.exp(1j * (theta + measure.rotation)))
        ws.append(wt.reshape(wt.shape + (1,) * len(measure.value_shape)) * dens)
    for z0, mass in measure.mass_points:
        zs.append(np.array([z0]))
        ws.append(np.asarray(mass * np.ones(measure.value_shape), dtype=complex)[None, ...])
    return np.concatenate(zs), np.concatenate(ws).astype(complex)


def _refine(measure, spec: QuadratureSpec, evaluate: Callable):
    """Run ``evaluate(z, w)`` on successively finer node sets until stable."""
    h = 0.125
    prev = evaluate(*quadrature_nodes(measure, h, spec.endpoint_handling))
    err = np.inf
    for _ in range(spec.max_refinement):
        h *= 0.5
        cur = evaluate(*quadrature_nodes(measure, h, spec.endpoint_handling))
        err = float(np.max(np.abs(cur - prev))) if np.size(cur) else 0.0
        scale = max(1.0, float(np.max(np.abs(cur)))) if np.size(cur) else 1.0
        if err <= spec.abs_tol * scale:
            return cur
        prev = cur
    raise QuadratureError(f"no convergence after {spec.max_refinement} refinements (error {err:.3g})",
                          estimate=prev, error=err)


def integrate(measure, integrand: Callable, spec: Optional[QuadratureSpec] = None):
    """``int integrand(z) dmu(z)``.

    For matrix measures the integrand may return scalars per node (giving a
    2x2 result ``int f dmu``) or 2x2 matrices (giving ``int F(z) dmu``, with
    ``F`` multiplying the density from the left).
    """
    spec = spec or QuadratureSpec()
    if getattr(measure, "numeric", False):
        return measure.integrate(integrand)

    def evaluate(z, w):
        f = np.asarray(integrand(z), dtype=complex)
        if f.ndim == 0:
            f = np.full(z.shape, f)
        if measure.value_shape and f.ndim == 3:
            return np.einsum("nab,nbc->ac", f, w)
        return np.tensordot(f, w, axes=(0, 0)) if f.ndim == 1 else np.einsum("n...,n->...", f, w)

    return _refine(measure, spec, evaluate)


def series_moments(caratheodory: Callable, n_max: int, matrix: bool = False) -> np.ndarray:
    """Moments ``mu_0..mu_{n_max}`` from the Maclaurin series of ``F``.

    ``F = 1 + 2 sum conj(mu_j) z^j`` (``mu_j^H`` for matrices).  Coefficients
    come from an FFT on the circle of radius ``r = exp(-1/max(n_max, 27))``
    with at least ``64 max(n_max, 27)`` samples, so ``r^{-n}`` stays below
    ``e`` and aliasing below ``e^{-64}``.
    """
    m = max(int(n_max), 27)
    r = np.exp(-1.0 / m)
    n_samp = 1 << int(np.ceil(np.log2(max(256, 64 * m))))
    z = r * np.exp(2j * np.pi * np.arange(n_samp) / n_samp)
    f = np.asarray(caratheodory(z), dtype=complex)
    coef = np.fft.fft(f, axis=0)[: n_max + 1] / n_samp
    coef = coef / (r ** np.arange(n_max + 1)).reshape((-1,) + (1,) * (f.ndim - 1))
    if matrix:
        mu = np.conj(np.swapaxes(coef, -1, -2)) / 2
        mu[0] = np.eye(2)
    else:
        mu = np.conj(coef) / 2
        mu[0] = 1.0
    return mu


def moments(measure, n_max: int, method: str = "quadrature", spec: Optional[QuadratureSpec] = None):
    """Moments ``mu_n = int z^n dmu`` for ``n = 0..n_max``.

    ``method="quadrature"`` integrates directly (closed forms only);
    ``method="series"`` extracts them from the Carathéodory function.
    Numeric measures always use the series.
    """
    matrix = measure.value_shape == (2, 2)
    if method == "series" or getattr(measure, "numeric", False):
        return series_moments(measure.caratheodory, n_max, matrix)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    spec = spec or QuadratureSpec()
    ns = np.arange(n_max + 1)

    def evaluate(z, w):
        zn = z[None, :] ** ns[:, None]
        return np.tensordot(zn, w, axes=(1, 0))

    return _refine(measure, spec, evaluate)


def walk_measure(walk: WalkModel):
    """Orthogonality measure of the walk's CMV operator.

    Closed form for constant coins; a numeric measure (ratio-limit
    Carathéodory function) for other half-line walks.
    """
    if walk.measure is not None:
        return walk.measure
    if walk.lattice == "half-line":
        from .spectral import numeric_measure
        last_site = max(walk.coins.sites, default=0)
        return numeric_measure(walk.verblunsky, min_iter=2 * last_site + 4)
    raise UnsupportedWalkError(
        "no spectral measure is available for line walks with non-constant coins; "
        "use the direct method")


def walk_polynomials(walk: WalkModel, count: int) -> list:
    """``X_0..X_{count-1}`` with gauge phases (blocks ``Lambda_j x_j`` on the line)."""
    if walk.lattice == "half-line":
        xs = laurent_polynomials(walk.verblunsky, count)
        return [x * walk.gauge.lam(j) for j, x in enumerate(xs)]
    xs = laurent_polynomials(walk.block_verblunsky, count)
    return [x.lmul(walk.gauge.fold_block(j)) for j, x in enumerate(xs)]


def _eval_all(polys, z):
    return np.stack([p.evaluate(z) for p in polys])


def _halfline_constant(walk, sources, targets, ns, spec):
    p = walk.constant_params
    mhat = appendix_measure(p.a, 0.0)
    count = max(max(sources), max(targets)) + 1
    xhat = [appendix_laurent(p.a, j) for j in range(count)]
    lam = np.array([walk.gauge.reduced(j) for j in range(count)])
    src, tgt = np.asarray(sources), np.asarray(targets)
    ns = np.asarray(ns)
    pref = np.exp(1j * ns * p.vartheta)[:, None, None] * (lam[src][:, None] * np.conj(lam[tgt])[None, :])[None]

    def evaluate(z, w):
        xv = _eval_all(xhat, z)
        a, b = xv[src], np.conj(xv[tgt])
        zn = z[None, :] ** ns[:, None] * w[None, :]
        return np.einsum("mn,jn,kn->mjk", zn, a, b) * pref

    return _refine(mhat, spec, evaluate)


def _halfline_numeric(walk, sources, targets, ns, measure):
    count = max(max(sources), max(targets)) + 1
    xs = walk_polynomials(walk, count)
    deg = max(max(-x.min_power, x.max_power) for x in xs)
    nmax = int(np.max(np.abs(ns))) + 2 * deg
    mu = moments(measure, nmax)

    def mom(m):
        return mu[m] if m >= 0 else np.conj(mu[-m])

    out = np.zeros((len(ns), len(sources), len(targets)), dtype=complex)
    for a, n in enumerate(ns):
        for b, j in enumerate(sources):
            for c, k in enumerate(targets):
                acc = 0j
                for pw, cj in xs[j].as_dict().items():
                    for qw, ck in xs[k].as_dict().items():
                        acc += cj * np.conj(ck) * mom(n + pw - qw)
                out[a, b, c] = acc
    return out


def _line_constant(walk, sources, targets, ns, spec):
    measure = walk.measure
    nb = max(max(sources), max(targets)) // 2 + 1
    xs = walk_polynomials(walk, nb)
    src, tgt = np.asarray(sources), np.asarray(targets)
    ns = np.asarray(ns)

    def evaluate(z, w):
        xv = _eval_all(xs, z)  # (J, N, 2, 2)
        left = np.einsum("jnab,nbc->jnac", xv, w)
        zn = z[None, :] ** ns[:, None]
        full = np.einsum("mn,jnac,kndc->mjakd", zn, left, np.conj(xv))
        full = full.reshape(len(ns), 2 * nb, 2 * nb)
        return full[:, src][:, :, tgt]

    return _refine(measure, spec, evaluate)


def kmcg_matrix(walk: WalkModel, sources: Sequence[int], targets: Sequence[int],
                ns: Sequence[int], spec: Optional[QuadratureSpec] = None) -> np.ndarray:
    """KMcG amplitudes ``(U^n)_{j,k}`` as an array indexed ``[n, j, k]``.

    Indices are half-line state indices or folded line indices.
    """
    spec = spec or QuadratureSpec()
    sources, targets, ns = list(sources), list(targets), list(ns)
    if walk.lattice == "half-line":
        if walk.constant_params is not None:
            return _halfline_constant(walk, sources, targets, ns, spec)
        return _halfline_numeric(walk, sources, targets, ns, walk_measure(walk))
    if walk.constant_params is None:
        raise UnsupportedWalkError(
            "KMcG on the line needs a constant coin; use the direct method instead")
    return _line_constant(walk, sources, targets, ns, spec)


def amplitude_halfline(walk: WalkModel, j: int, k: int, n: int,
                       spec: Optional[QuadratureSpec] = None) -> complex:
    """``(U^n)_{j,k}`` on the half-line via the KMcG formula (``n`` may be negative)."""
    if walk.lattice != "half-line":
        raise ValueError("not a half-line walk")
    return complex(kmcg_matrix(walk, [j], [k], [n], spec)[0, 0, 0])


def amplitude_line(walk: WalkModel, source, target, n: int,
                   spec: Optional[QuadratureSpec] = None) -> complex:
    """Amplitude from ``source = (site, spin)`` to ``target`` after ``n`` steps on the line."""
    if walk.lattice != "line":
        raise ValueError("not a line walk")
    j = amplitude_index("line", *source)
    k = amplitude_index("line", *target)
    return complex(kmcg_matrix(walk, [j], [k], [n], spec)[0, 0, 0])


# --------------------------------------------------------------------------
# direct evolution


@dataclass
class _Direct:
    """Amplitudes of several evolving states on a fixed window of sites."""

    lattice: str
    site_lo: int
    history: np.ndarray  # (steps+1, batch, nsites, 2)

    def index_columns(self):
        """Map walk index (half-line index or fold index) -> flat column."""
        nsites = self.history.shape[2]
        cols = {}
        for s in range(nsites):
            site = self.site_lo + s
            for spin in (0, 1):
                d = 2 * site + spin
                key = d if self.lattice == "half-line" else line_to_fold(d)
                cols[key] = 2 * s + spin
        return cols

    def flat(self, step: int) -> np.ndarray:
        h = self.history[step]
        return h.reshape(h.shape[0], -1)


def _site_spin(walk, index):
    d = index if walk.lattice == "half-line" else fold_to_line(index)
    return divmod(d, 2)


def direct_powers(walk: WalkModel, initial: np.ndarray, site_lo: int, n_max: int) -> _Direct:
    """Evolve rows of ``initial`` (shape (batch, nsites, 2), first site ``site_lo``).

    The window is padded by ``n_max + 1`` sites on each side so nothing
    leaves it.
    """
    batch, nsites, _ = initial.shape
    pad = n_max + 1
    lo = max(0, site_lo - pad) if walk.lattice == "half-line" else site_lo - pad
    hi = site_lo + nsites + pad
    width = hi - lo
    up = np.zeros((batch, width), dtype=complex)
    down = np.zeros((batch, width), dtype=complex)
    up[:, site_lo - lo: site_lo - lo + nsites] = initial[:, :, 0]
    down[:, site_lo - lo: site_lo - lo + nsites] = initial[:, :, 1]
    coins = np.ascontiguousarray(walk.coin_array(lo, hi))
    hist = np.empty((n_max + 1, batch, width, 2), dtype=complex)
    hist[0, :, :, 0], hist[0, :, :, 1] = up, down
    half = walk.lattice == "half-line"
    for step in range(1, n_max + 1):
        up, down = kernels.coin_step(up, down, coins, half)
        hist[step, :, :, 0], hist[step, :, :, 1] = up, down
    return _Direct(walk.lattice, lo, hist)


def _basis_initial(walk, sources):
    pos = [_site_spin(walk, j) for j in sources]
    lo = min(s for s, _ in pos)
    hi = max(s for s, _ in pos)
    init = np.zeros((len(sources), hi - lo + 1, 2), dtype=complex)
    for b, (s, spin) in enumerate(pos):
        init[b, s - lo, spin] = 1
    return init, lo


def _state_initial(walk, psi: StateVector):
    amps = psi.amplitudes
    if not amps:
        raise ValueError("empty state")
    lo = min(k // 2 for k in amps)
    hi = max(k // 2 for k in amps)
    init = np.zeros((1, hi - lo + 1, 2), dtype=complex)
    for d, v in amps.items():
        s, spin = divmod(d, 2)
        init[0, s - lo, spin] = v
    return init, lo


def evolve(walk: WalkModel, psi: StateVector, n: int) -> StateVector:
    """``psi U^n`` by exact banded steps (``psi`` indexed by ``2*site + spin``)."""
    init, lo = _state_initial(walk, psi)
    run = direct_powers(walk, init, lo, n)
    h = run.history[n, 0]
    data = h.reshape(-1)
    lattice = "semi-infinite" if walk.lattice == "half-line" else "doubly-infinite"
    return StateVector(lattice, 2 * run.site_lo, data).trimmed()


@dataclass
class AmplitudeTable:
    """Amplitudes keyed by ``(source, target, n)``.

    Sources and targets are walk indices (half-line index or folded line
    index); a general initial state appears under the source key ``"psi"``.
    """

    walk: WalkModel = field(repr=False)
    entries: dict
    method: str

    def get(self, j, k, n) -> complex:
        return self.entries.get((j, k, n), 0j)

    def row(self, j, n) -> dict:
        return {k: v for (jj, k, nn), v in self.entries.items() if jj == j and nn == n}

    def max_abs(self) -> float:
        return max((abs(v) for v in self.entries.values()), default=0.0)


def direct_amplitudes(walk: WalkModel, initial: Union[StateVector, Iterable[int]], n: int,
                      steps: Optional[Iterable[int]] = None) -> AmplitudeTable:
    """Exact amplitudes after ``n`` steps (or at each step in ``steps``).

    ``initial`` is a list of basis indices or a :class:`StateVector` indexed
    by ``2*site + spin``.
    """
    if n < 0:
        raise ValueError("direct evolution needs n >= 0")
    steps = [n] if steps is None else sorted(set(steps))
    if isinstance(initial, StateVector):
        init, lo = _state_initial(walk, initial)
        labels = ["psi"]
    else:
        labels = list(initial)
        init, lo = _basis_initial(walk, labels)
    run = direct_powers(walk, init, lo, max(steps))
    cols = run.index_columns()
    entries = {}
    for m in steps:
        flat = run.flat(m)
        for b, lab in enumerate(labels):
            row = flat[b]
            for key, c in cols.items():
                if row[c] != 0:
                    entries[(lab, key, m)] = complex(row[c])
    return AmplitudeTable(walk, entries, "direct")


def kmcg_amplitudes(walk: WalkModel, sources: Sequence[int], targets: Sequence[int],
                    ns: Sequence[int], spec: Optional[QuadratureSpec] = None) -> AmplitudeTable:
    arr = kmcg_matrix(walk, sources, targets, ns, spec)
    entries = {(j, k, n): complex(arr[a, b, c]) for a, n in enumerate(ns)
               for b, j in enumerate(sources) for c, k in enumerate(targets)}
    return AmplitudeTable(walk, entries, "kmcg")


__all__.append("kmcg_amplitudes")


def reachable_indices(walk: WalkModel, indices: Iterable[int], n: int) -> list:
    """Walk indices on every site within ``n`` steps of the given indices, sorted by site."""
    sites = [_site_spin(walk, k)[0] for k in indices]
    lo, hi = min(sites) - n, max(sites) + n
    if walk.lattice == "half-line":
        lo = max(lo, 0)
    return [amplitude_index(walk.lattice, s, spin) for s in range(lo, hi + 1) for spin in (0, 1)]


def state_amplitudes(walk: WalkModel, coefficients: dict, targets: Sequence[int],
                     ns: Sequence[int], method: str = "kmcg",
                     spec: Optional[QuadratureSpec] = None) -> np.ndarray:
    """Amplitudes ``(psi U^n)_k`` for a finite state ``psi``, indexed ``[n, k]``.

    ``coefficients`` maps walk indices to amplitudes; ``method`` is
    ``"kmcg"`` or ``"direct"``.
    """
    sources = sorted(coefficients)
    targets, ns = list(targets), list(ns)
    if method == "kmcg":
        psi = np.array([coefficients[j] for j in sources], dtype=complex)
        arr = kmcg_matrix(walk, sources, targets, ns, spec)
        return np.einsum("j,njk->nk", psi, arr)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    if walk.lattice == "half-line":
        vec = StateVector.from_dict("semi-infinite", coefficients)
    else:
        vec = StateVector.from_dict("doubly-infinite",
                                    {fold_to_line(k): v for k, v in coefficients.items()})
    table = direct_amplitudes(walk, vec, max(ns), steps=ns)
    return np.array([[table.get("psi", k, n) for k in targets] for n in ns], dtype=complex)


__all__ += ["reachable_indices", "state_amplitudes"]
