"""Carathéodory functions, radial limits and asymptotic (weak-limit) analysis.

A :class:`CaratheodoryEvaluator` either wraps a closed form or computes
``F = lim phi~*_j / phi*_j`` from Verblunsky parameters, where ``phi~`` are
the polynomials of the sign-flipped sequence ``-alpha``.  Boundary values
are read off radially: the weight is ``lim Re F(r e^{it})`` and a point mass
at ``z0`` is ``lim (1 - r)/2 F(r z0)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .coins import WalkModel
from .opuc import VerblunskySequence

__all__ = [
    "GUARD_RADIUS",
    "RatioConvergenceError",
    "CaratheodoryEvaluator",
    "MassPoint",
    "NumericMeasure",
    "AsymptoticResult",
    "caratheodory_ratio",
    "numeric_measure",
    "recover_weight",
    "find_mass_points",
    "weak_limit",
]

GUARD_RADIUS = 0.999
RATIO_TOL = 1e-13
RATIO_MAX_ITER = 10_000
MASS_THRESHOLD = 1e-6


class RatioConvergenceError(RuntimeError):
    def __init__(self, msg, ratio=None, gap=None):
        super().__init__(msg)
        self.ratio = ratio
        self.gap = gap


def _ratio_eval(alphas, z, tol=RATIO_TOL, max_iter=RATIO_MAX_ITER, min_iter=None, arr=None):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > GUARD_RADIUS + 1e-15):
        raise ValueError(f"ratio limit needs |z| <= {GUARD_RADIUS}")
    if arr is None:
        arr = np.ascontiguousarray(alphas.array(0, max_iter))
    if min_iter is None:
        min_iter = alphas.explicit_extent + 2
    ratio, gap, iters = kernels.szego_ratio(arr, z.ravel(), tol, int(min_iter))
    bad = gap >= tol * np.maximum(1.0, np.abs(ratio))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise RatioConvergenceError(
            f"ratio limit not converged after {max_iter} steps at z={z.ravel()[i]:.6g} "
            f"(last ratio {ratio[i]:.12g}, gap {gap[i]:.3g})", ratio[i], gap[i])
    return ratio.reshape(z.shape), gap.reshape(z.shape), iters.reshape(z.shape)


def caratheodory_ratio(alphas: VerblunskySequence, z, min_iter: Optional[int] = None) -> complex:
    """``F(z)`` as the limit of ``phi~*_j(z) / phi*_j(z)``.

    All four polynomial values are divided by ``|phi*_j|`` at each step to
    avoid overflow.  Iteration stops when two-step changes fall below 1e-13,
    or fails after 10^4 steps.  At least ``min_iter`` steps are taken
    (default: two past the explicitly stored parameters), so zero parameters
    inside a perturbed region cannot stop the iteration early.

    Raises
    ------
    ValueError
        If ``|z| > 0.999``.
    RatioConvergenceError
        If the limit has not settled.
    """
    ratio, _, _ = _ratio_eval(alphas, z, min_iter=min_iter)
    return ratio[()]


@dataclass
class CaratheodoryEvaluator:
    """Evaluate ``F`` of a measure inside the unit disk.

    Use :meth:`closed_form` or :meth:`from_verblunsky` to build one.
    """

    source: str
    measure: object = None
    alphas: Optional[VerblunskySequence] = None
    min_iter: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def closed_form(cls, measure) -> "CaratheodoryEvaluator":
        return cls("closed-form", measure=measure)

    @classmethod
    def from_verblunsky(cls, alphas: VerblunskySequence,
                        min_iter: Optional[int] = None) -> "CaratheodoryEvaluator":
        if alphas.cell != "scalar":
            raise ValueError("the ratio limit is implemented for scalar parameters")
        return cls("ratio-limit", alphas=alphas, min_iter=min_iter)

    @cached_property
    def _alpha_array(self):
        return np.ascontiguousarray(self.alphas.array(0, RATIO_MAX_ITER))

    @property
    def matrix(self) -> bool:
        return self.source == "closed-form" and self.measure.value_shape == (2, 2)

    @property
    def radial_exponents(self):
        """Exponents ``k`` of the radii ``r = 1 - 10^-k`` used for boundary limits.

        The ratio limit needs about ``21 / (1 - |z|)`` steps on the support, so
        with the 10^4 step cap its radii stop at ``1 - 10^-2.5``.
        """
        return (4.0, 5.0, 6.0, 7.0) if self.source == "closed-form" else (2.0, 2.25, 2.5)

    def __call__(self, z):
        if self.source == "closed-form":
            return self.measure.caratheodory(z)
        ratio, gap, iters = _ratio_eval(self.alphas, z, min_iter=self.min_iter,
                                        arr=self._alpha_array)
        self.diagnostics["max_gap"] = float(np.max(gap))
        self.diagnostics["max_iterations"] = int(np.max(iters))
        return ratio[()]


def _neville(values, hs):
    """Neville extrapolation of ``values`` sampled at ``hs`` to ``h = 0``."""
    p = [np.asarray(x, dtype=complex) for x in values]
    n = len(p)
    for m in range(1, n):
        p = [(hs[i] * p[i + 1] - hs[i + m] * p[i]) / (hs[i] - hs[i + m]) for i in range(n - m)]
    return p[0]


def _scalar_part(f, matrix: bool):
    if not matrix:
        return np.asarray(f)
    # Hermitian part's largest eigenvalue for weights/masses of matrix measures
    f = np.asarray(f)
    herm = 0.5 * (f + np.conj(np.swapaxes(f, -1, -2)))
    return np.linalg.eigvalsh(herm)[..., -1]


def recover_weight(F: CaratheodoryEvaluator, theta: float) -> float:
    """Boundary density ``lim Re F(r e^{i theta})`` by Richardson extrapolation.

    Uses the first three radii of ``F.radial_exponents`` (``r = 1 - 10^-4,
    1 - 10^-5, 1 - 10^-6`` for closed forms).  Returns ``inf`` when the values
    grow like an inverse power of ``1 - r`` (a point mass or singular endpoint
    at ``theta``); otherwise ``max(estimate, 0)``.  For matrix measures the
    largest eigenvalue of the density is returned.
    """
    ks = F.radial_exponents[:3]
    hs = [10.0 ** -k for k in ks]
    z = np.exp(1j * theta)
    vals = [float(np.real(_scalar_part(F((1 - h) * z), F.matrix))) for h in hs]
    ratio = abs(vals[-1]) / max(abs(vals[-2]), 1e-300)
    if abs(vals[-1]) > 10 and ratio > 2.5:
        return float("inf")
    est = float(np.real(_neville(vals, hs)))
    return max(est, 0.0)


@dataclass(frozen=True)
class MassPoint:
    location: complex
    mass: float

    @property
    def angle(self) -> float:
        return float(np.angle(self.location))


def _mass_estimates(F, angle, ks):
    hs = [10.0 ** -k for k in ks]
    z = np.exp(1j * angle)
    est = [float(np.real(_scalar_part(0.5 * h * F((1 - h) * z), F.matrix))) for h in hs]
    return est, hs


def find_mass_points(F: CaratheodoryEvaluator, n_scan: int = 4096) -> list:
    """Locate point masses from the radial growth of ``F``.

    ``|F|`` is scanned on ``n_scan`` angles at the first radius; each local
    maximum is refined by bounded golden-section search at successively larger
    radii, and its mass estimated from ``(1 - r)/2 F(r z0)`` with Richardson
    extrapolation.  Candidates whose estimates are not stable in ``r``
    (inverse square-root endpoints) or fall below 1e-6 are dropped.
    """
    ks = F.radial_exponents
    r0 = 1 - 10.0 ** -ks[0]
    grid = 2 * np.pi * np.arange(n_scan) / n_scan
    vals = np.abs(_scalar_part(F(r0 * np.exp(1j * grid)), F.matrix))
    peaks = np.flatnonzero((vals >= np.roll(vals, 1)) & (vals >= np.roll(vals, -1)))
    step = 2 * np.pi / n_scan
    found = []
    for i in peaks:
        angle = grid[i]
        width = step
        for k in ks:
            r = 1 - 10.0 ** -k
            # search the offset from the current angle: the bounded method adds a
            # relative tolerance sqrt(eps) |x|, which would cap the accuracy near 5e-8
            res = minimize_scalar(
                lambda s: -float(np.abs(_scalar_part(F(r * np.exp(1j * (angle + s))), F.matrix))),
                bounds=(-width, width), method="bounded",
                options={"xatol": 1e-3 * 10.0 ** -k})
            angle = angle + float(res.x)
            width = max(20 * 10.0 ** -k, 1e-12)
        est, hs = _mass_estimates(F, angle, ks)
        mass = float(np.real(_neville(est[-2:], hs[-2:])))
        stable = abs(est[-1] - est[-2]) <= 0.05 * abs(mass) + 1e-12
        if stable and mass > MASS_THRESHOLD:
            loc = complex(np.exp(1j * angle))
            if not any(abs(loc - m.location) < 1e-6 for m in found):
                found.append(MassPoint(loc, mass))
    return found


@dataclass
class NumericMeasure:
    """Measure known only through a ratio-limit Carathéodory function.

    Moments come from the Maclaurin series of ``F``; general integrals use a
    uniform grid of recovered weights plus detected point masses, which is
    far less accurate than the closed-form quadrature.
    """

    evaluator: CaratheodoryEvaluator
    grid_size: int = 1024
    numeric = True
    value_shape = ()
    rotation = 0.0

    def caratheodory(self, z):
        return self.evaluator(z)

    @cached_property
    def detected_masses(self) -> list:
        return find_mass_points(self.evaluator)

    @property
    def mass_points(self):
        return [(m.location, m.mass) for m in self.detected_masses]

    @cached_property
    def weight_grid(self):
        t = 2 * np.pi * (np.arange(self.grid_size) + 0.5) / self.grid_size
        w = np.array([recover_weight(self.evaluator, x) for x in t])
        w[~np.isfinite(w)] = 0.0
        return t, w

    def integrate(self, integrand: Callable):
        t, w = self.weight_grid
        z = np.exp(1j * t)
        total = np.tensordot(np.asarray(integrand(z), dtype=complex), w, axes=(0, 0)) / self.grid_size
        for z0, m in self.mass_points:
            total = total + m * np.asarray(integrand(np.array([z0])))[0]
        return total


def numeric_measure(alphas: VerblunskySequence, min_iter: Optional[int] = None) -> NumericMeasure:
    return NumericMeasure(CaratheodoryEvaluator.from_verblunsky(alphas, min_iter))


def _evaluator_for(measure) -> CaratheodoryEvaluator:
    if isinstance(measure, NumericMeasure):
        return measure.evaluator
    return CaratheodoryEvaluator.closed_form(measure)


@dataclass
class AsymptoticResult:
    """Weak limit of phase-corrected powers ``z0^{-n} U^n``.

    ``kind`` is ``"zero-weak-limit"`` or ``"projector"``.  For a projector,
    ``projector_entry(j, k) = mu({z0}) X_j(z0) conj(X_k(z0))`` (blocks
    ``X_j mu({z0}) X_k^H`` on the line, read with the folded layout).
    """

    kind: str
    z0: Optional[complex] = None
    mu_infinity: Optional[float] = None
    projector_entry: Optional[Callable[[int, int], complex]] = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict)

    def projector(self, size: int) -> np.ndarray:
        if self.kind != "projector":
            return np.zeros((size, size), dtype=complex)
        return np.array([[self.projector_entry(j, k) for k in range(size)] for j in range(size)])


def weak_limit(walk: WalkModel, horizon: int = 512) -> AsymptoticResult:
    """Classify the weak limit of ``U^n`` for a walk.

    With no point mass the limit is zero; the moment tail up to ``horizon``
    is reported as a numerical certificate (it must be decreasing).  With one
    point mass ``z0`` the limit of ``z0^{-n} U^n`` is the rank-one projector
    ``mu({z0}) X(z0) X(z0)^H``.
    """
    from .kmcg import moments, walk_measure, walk_polynomials

    measure = walk_measure(walk)
    if isinstance(measure, NumericMeasure):
        masses = [(m.location, m.mass) for m in measure.detected_masses]
    else:
        masses = list(measure.mass_points)
    if not masses:
        mu = moments(measure, horizon, method="series")
        mags = np.abs(mu.reshape(horizon + 1, -1)).max(axis=1)
        early = float(mags[horizon // 4: horizon // 2].max())
        late = float(mags[horizon // 2:].max())
        diag = {"horizon": horizon, "max_moment_early": early, "max_moment_late": late,
                "moment_at_horizon": float(mags[horizon]), "decreasing": late < early,
                "certificate": "heuristic: moment tail decreasing over a finite horizon"}
        if not late < early:
            raise RuntimeError(f"moment tail not decreasing up to n={horizon}: inconclusive")
        return AsymptoticResult("zero-weak-limit", diagnostics=diag)
    if len(masses) > 1:
        raise ValueError("more than one point mass: weak limit not supported")
    z0, mass = masses[0]
    cache: dict = {}

    def xval(j):
        need = j + 1
        if cache.get("count", 0) < need:
            count = max(need, 2 * cache.get("count", 8))
            polys = walk_polynomials(walk, count)
            cache["vals"] = [p.evaluate(z0) for p in polys]
            cache["count"] = count
        return cache["vals"][j]

    if walk.lattice == "half-line":
        def entry(j, k):
            return complex(mass * xval(j) * np.conj(xval(k)))
    else:
        def entry(j, k):
            block = xval(j // 2) @ (mass * np.eye(2)) @ xval(k // 2).conj().T
            return complex(block[j % 2, k % 2])
    return AsymptoticResult("projector", complex(z0), float(mass), entry,
                            {"phase_per_step": float(np.angle(z0))})
