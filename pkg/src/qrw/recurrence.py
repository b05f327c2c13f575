"""Recurrence and transience of local states.

A finitely supported state ``psi`` is transient when its return probabilities
``p_n = |<psi, U^n psi>|^2`` are summable.  With the associated Laurent
polynomial ``f = sum_k psi_k X_k`` (row vector blocks on the line) this is
decided by the behaviour of ``|f|^2 F`` at the singularities of the
Carathéodory function on the unit circle: ``f`` has to vanish at every
non-removable one.  Only constant coins are handled, since only there is the
singularity set known in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .cmv import StateVector
from .coins import WalkModel, amplitude_index, fold_to_line, index_state
from .kmcg import UnsupportedWalkError, direct_amplitudes, walk_polynomials
from .opuc import LaurentPoly

__all__ = [
    "QuantumState",
    "Singularity",
    "SingularitySet",
    "RecurrenceVerdict",
    "TransientSubspace",
    "associated_function",
    "singularities",
    "classify_state",
    "transient_subspace",
    "return_probability_partial_sum",
]

VANISH_TOL = 1e-9
REMOVABLE_TOL = 1e-10
NULLSPACE_CUTOFF = 1e-10


@dataclass(frozen=True)
class QuantumState:
    """Finitely supported state of a walk.

    ``coefficients`` maps walk indices (``2*site + spin`` on the half-line,
    folded indices on the line, see :func:`qrw.coins.amplitude_index`) to
    amplitudes.
    """

    walk: WalkModel = field(repr=False)
    coefficients: Mapping[int, complex]
    normalized: bool = False

    @classmethod
    def from_sites(cls, walk: WalkModel, amplitudes: Mapping, normalize: bool = False):
        """Build from ``{(site, spin): amplitude}``, spin ``"up"``/``"down"`` or 0/1."""
        coeffs = {amplitude_index(walk.lattice, s, spin): complex(v)
                  for (s, spin), v in amplitudes.items()}
        state = cls(walk, coeffs)
        return state.normalize() if normalize else state

    @classmethod
    def from_vector(cls, walk: WalkModel, indices: Sequence[int], vector) -> "QuantumState":
        return cls(walk, {int(k): complex(v) for k, v in zip(indices, vector) if v != 0})

    @property
    def norm(self) -> float:
        return float(np.sqrt(sum(abs(v) ** 2 for v in self.coefficients.values())))

    def normalize(self) -> "QuantumState":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return QuantumState(self.walk, {k: v / n for k, v in self.coefficients.items()}, True)

    def site_amplitudes(self) -> dict:
        return {index_state(self.walk.lattice, k): v for k, v in self.coefficients.items()}

    def line_vector(self) -> StateVector:
        """The state indexed by ``2*site + spin`` (the layout of direct evolution)."""
        if self.walk.lattice == "half-line":
            return StateVector.from_dict("semi-infinite", dict(self.coefficients))
        return StateVector.from_dict(
            "doubly-infinite", {fold_to_line(k): v for k, v in self.coefficients.items()})


@dataclass(frozen=True)
class Singularity:
    """A singular point of ``F`` on the unit circle.

    ``kind`` is ``"pole"``, ``"removable"`` or ``"inverse-sqrt"``.  On the
    line ``direction`` is the column ``u`` with ``F_0(z) = s u v^H``; the
    condition there is ``f(z) u = 0``.
    """

    point: complex
    kind: str
    direction: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def removable(self) -> bool:
        return self.kind == "removable"


@dataclass(frozen=True)
class SingularitySet:
    points: tuple
    provenance: str = "closed-form Carathéodory function"

    @property
    def essential(self) -> list:
        return [s for s in self.points if not s.removable]


@dataclass(frozen=True)
class RecurrenceVerdict:
    """``classification`` plus the certificate ``[(singularity, value)]``.

    The value is ``f(z_s)`` on the half-line and ``f(z_s) u`` on the line.
    """

    classification: str
    certificate: list
    state_norm: float = 1.0

    @property
    def transient(self) -> bool:
        return self.classification == "transient"


def _require_constant(walk: WalkModel):
    if walk.constant_params is None:
        raise UnsupportedWalkError(
            "recurrence analysis needs a constant coin (the singularities of F are "
            "only known in closed form there)")


def _polys(walk: WalkModel, count: int) -> list:
    return walk_polynomials(walk, count)


def associated_function(state: QuantumState) -> LaurentPoly:
    """``f = sum psi_k X_k`` (half-line) or ``sum (psi_2k, psi_2k+1) X_k`` (line)."""
    walk = state.walk
    if not state.coefficients:
        shape = (2,) if walk.lattice == "line" else ()
        return LaurentPoly(np.zeros((1,) + shape), 0)
    top = max(state.coefficients)
    if walk.lattice == "half-line":
        xs = _polys(walk, top + 1)
        f = None
        for k, v in state.coefficients.items():
            term = xs[k] * v
            f = term if f is None else f + term
        return f.pruned()
    xs = _polys(walk, top // 2 + 1)
    rows: dict = {}
    for k, v in state.coefficients.items():
        rows.setdefault(k // 2, np.zeros(2, dtype=complex))[k % 2] += v
    f = None
    for blk, row in rows.items():
        term = xs[blk].lmul(row)
        f = term if f is None else f + term
    return f.pruned()


def _inside_s(w, abs_a):
    """``S = Q / w`` on the branch continued from the inside of the disk."""
    from .closed_forms import _branch_q

    r = 1 - 1e-9
    return complex(_branch_q(r * w, abs_a) / (r * w))


def singularities(walk: WalkModel) -> SingularitySet:
    """Singular points of the closed-form ``F`` on the unit circle.

    Half-line: the zeros ``e^{i(vartheta + beta)}`` and ``-e^{i(vartheta - beta)}``
    of the denominator.  With ``S = +-2|Re a|`` there (sign continued from
    inside), the numerator ``S + 2 Re a`` decides between a removable point and
    a pole; ``Re a = 0`` gives two inverse square-root singularities.  Line:
    the four roots of ``(w - 1/w)^2 + 4|a|^2``, all of inverse square-root
    type, where the numerator matrix has rank one.
    """
    _require_constant(walk)
    p = walk.constant_params
    a, vt = p.a, p.vartheta
    rot = np.exp(1j * vt)
    if abs(a) <= REMOVABLE_TOL:
        return SingularitySet(())
    if walk.lattice == "half-line":
        beta = walk.measure.beta
        out = []
        for w in (np.exp(1j * beta), -np.exp(-1j * beta)):
            if abs(a.real) <= REMOVABLE_TOL:
                kind = "inverse-sqrt"
            else:
                s_in = _inside_s(w, abs(a))
                s = 2 * abs(a.real) * (1 if s_in.real >= 0 else -1)
                num = abs(s + 2 * a.real) / (abs(s) + 2 * abs(a.real))
                kind = "removable" if num < REMOVABLE_TOL else "pole"
            out.append(Singularity(complex(rot * w), kind))
        return SingularitySet(tuple(out))
    eta = np.arcsin(abs(a))
    out = []
    for t in (eta, np.pi - eta, -eta, eta - np.pi):
        w = np.exp(1j * t)
        f0 = np.array([[w * w - 1, 2 * np.conj(a) * w], [-2 * a * w, w * w - 1]])
        u, _, _ = np.linalg.svd(f0)
        out.append(Singularity(complex(rot * w), "inverse-sqrt", u[:, 0]))
    return SingularitySet(tuple(out))


def _condition_rows(walk: WalkModel, sing: SingularitySet, indices: Sequence[int]) -> np.ndarray:
    """Matrix ``A`` with ``A psi = 0`` iff ``psi`` (on ``indices``) is transient."""
    ess = sing.essential
    if not ess:
        return np.zeros((0, len(indices)), dtype=complex)
    top = max(indices)
    if walk.lattice == "half-line":
        xs = _polys(walk, top + 1)
        return np.array([[xs[k].evaluate(s.point) for k in indices] for s in ess])
    xs = _polys(walk, top // 2 + 1)
    rows = []
    for s in ess:
        # component k%2 of the column X_{k//2}(z_s) u_s multiplies psi_k
        cols = {b: xs[b].evaluate(s.point) @ s.direction for b in {k // 2 for k in indices}}
        rows.append([cols[k // 2][k % 2] for k in indices])
    return np.array(rows, dtype=complex)


def classify_state(state: QuantumState) -> RecurrenceVerdict:
    """Recurrent or transient, with the certificate values at each singularity.

    The state is normalized first; it is transient iff every certificate value
    is below 1e-9 in magnitude.  Removable singularities are listed with
    value ``None``.
    """
    walk = state.walk
    sing = singularities(walk)
    st = state.normalize()
    f = associated_function(st)
    cert = []
    for s in sing.points:
        if s.removable:
            cert.append((s, None))
            continue
        val = f.evaluate(s.point)
        if walk.lattice == "line":
            val = val @ s.direction
        cert.append((s, complex(val)))
    transient = all(v is None or abs(v) < VANISH_TOL for _, v in cert)
    return RecurrenceVerdict("transient" if transient else "recurrent", cert, state.norm)


@dataclass(frozen=True)
class TransientSubspace:
    """Orthonormal basis (rows of ``basis``) of the transient states on ``indices``."""

    walk: WalkModel = field(repr=False)
    indices: tuple
    basis: np.ndarray

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    @property
    def labels(self) -> list:
        return [index_state(self.walk.lattice, k) for k in self.indices]

    def states(self) -> list:
        return [QuantumState.from_vector(self.walk, self.indices, v) for v in self.basis]

    def residual(self, vector) -> float:
        """Distance of a (normalized) vector from the subspace."""
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        proj = self.basis.T @ (self.basis.conj() @ v)
        return float(np.linalg.norm(v - proj))


def transient_subspace(walk: WalkModel, count: Optional[int] = None,
                       indices: Optional[Sequence[int]] = None) -> TransientSubspace:
    """Transient states supported on the first ``count`` walk indices.

    Solves ``sum_k psi_k X_k(z_s) = 0`` at every non-removable singularity
    (``sum_k psi_k [X(z_s) u_s]_k = 0`` on the line) and returns an
    orthonormal basis of the solution space, cutting singular values at
    1e-10.  Explicit ``indices`` may be given instead of ``count``.
    """
    if indices is None:
        if count is None or count < 1:
            raise ValueError("give count >= 1 or explicit indices")
        indices = range(count)
    indices = tuple(int(k) for k in indices)
    sing = singularities(walk)
    A = _condition_rows(walk, sing, indices)
    if A.shape[0] == 0:
        basis = np.eye(len(indices), dtype=complex)
    else:
        scale = max(1.0, float(np.abs(A).max()))
        basis = null_space(A / scale, rcond=NULLSPACE_CUTOFF).T
    return TransientSubspace(walk, indices, basis)


def return_probability_partial_sum(state: QuantumState, N: int) -> float:
    """``sum_{n=1..N} |<psi, U^n psi>|^2`` from exact direct evolution.

    Advisory evidence only: it grows without bound for recurrent states and
    levels off for transient ones.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    st = state.normalize()
    table = direct_amplitudes(st.walk, st.line_vector(), N, steps=range(1, N + 1))
    total = 0.0
    for n in range(1, N + 1):
        amp = sum(table.get("psi", k, n) * np.conj(v) for k, v in st.coefficients.items())
        total += abs(amp) ** 2
    return float(total)
