"""CMV operators built from Verblunsky data and applied to finite supports.

The operator is never truncated.  ``C = L M`` where ``L`` holds the
``Theta_j`` with even ``j`` and ``M`` those with odd ``j``; ``Theta_j`` acts on
the units ``j`` and ``j + 1`` (a unit is one index for scalar cells and two
consecutive indices for 2x2 block cells).  On the semi-infinite lattice the
unit ``0`` is left alone by ``M``.

States are row vectors and evolve as ``psi -> psi C``, matching the
convention ``psi_{n+1} = psi_n U`` used for the walks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .opuc import VerblunskySequence, laurent_polynomials, rho_pair

__all__ = [
    "ThetaBlock",
    "CMVOperator",
    "StateVector",
    "LatticeMismatchError",
    "theta_block",
    "build_cmv",
    "apply",
    "apply_rows",
    "recurrence_residual",
]

_LATTICE_ALIASES = {
    "semi-infinite": "semi-infinite",
    "half-line": "semi-infinite",
    "half": "semi-infinite",
    "doubly-infinite": "doubly-infinite",
    "line": "doubly-infinite",
}


def _lattice(name: str) -> str:
    try:
        return _LATTICE_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown lattice {name!r}") from None


class LatticeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaBlock:
    """``[[alpha^H, rho_L], [rho_R, -alpha]]`` (scalar: ``conj(alpha)``, ``rho``)."""

    alpha: object
    rho_left: object
    rho_right: object

    @property
    def matrix(self) -> np.ndarray:
        a = self.alpha
        if isinstance(a, np.ndarray):
            return np.block([[a.conj().T, self.rho_left], [self.rho_right, -a]])
        return np.array([[np.conj(a), self.rho_left], [self.rho_right, -a]], dtype=complex)


def theta_block(alpha) -> ThetaBlock:
    left, right = rho_pair(alpha)
    return ThetaBlock(alpha, left, right)


class _ThetaCache:
    """Contiguous store of Theta matrices for a growing index window."""

    def __init__(self, alphas: VerblunskySequence, width: int):
        self.alphas = alphas
        self.width = width
        self.lo = 0
        self.data = np.zeros((0, width, width), dtype=complex)

    def _make(self, lo, hi):
        return np.array([theta_block(self.alphas[j]).matrix for j in range(lo, hi)],
                        dtype=complex).reshape(hi - lo, self.width, self.width)

    def get(self, lo: int, hi: int) -> np.ndarray:
        have_lo, have_hi = self.lo, self.lo + self.data.shape[0]
        if self.data.shape[0] == 0:
            span = max(hi - lo, 16)
            self.lo, self.data = lo, self._make(lo, lo + span)
        else:
            if lo < have_lo:
                new_lo = min(lo, have_lo - (have_hi - have_lo))
                if self.alphas.kind == "one-sided":
                    new_lo = max(new_lo, 0)
                self.data = np.concatenate([self._make(new_lo, have_lo), self.data])
                self.lo = new_lo
            have_hi = self.lo + self.data.shape[0]
            if hi > have_hi:
                new_hi = max(hi, have_hi + (have_hi - self.lo))
                self.data = np.concatenate([self.data, self._make(have_hi, new_hi)])
        return self.data[lo - self.lo: hi - self.lo]


@dataclass(frozen=True)
class CMVOperator:
    """Lazily applied CMV operator.

    Attributes
    ----------
    alphas : VerblunskySequence
    lattice : {"semi-infinite", "doubly-infinite"}
    cell : {"scalar", "block"}
    """

    alphas: VerblunskySequence
    lattice: str = "semi-infinite"
    _cache: _ThetaCache = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lattice", _lattice(self.lattice))
        if self.lattice == "semi-infinite" and self.alphas.kind != "one-sided":
            raise ValueError("a semi-infinite operator needs a one-sided sequence")
        if self.lattice == "doubly-infinite" and self.alphas.kind != "two-sided":
            raise ValueError("a doubly infinite operator needs a two-sided sequence")
        if self.alphas.cell == "block" and self.lattice != "semi-infinite":
            raise ValueError("block operators are semi-infinite")
        width = 4 if self.alphas.cell == "block" else 2
        object.__setattr__(self, "_cache", _ThetaCache(self.alphas, width))

    @property
    def cell(self) -> str:
        return self.alphas.cell

    @property
    def unit(self) -> int:
        return 2 if self.cell == "block" else 1

    @property
    def band_width(self) -> int:
        return 3 if self.cell == "block" else 5

    def theta(self, j: int) -> ThetaBlock:
        return theta_block(self.alphas[j])

    def L_blocks(self, lo: int, hi: int) -> dict:
        """Theta matrices of ``L`` with index in ``[lo, hi)``."""
        return {j: self.theta(j).matrix for j in range(lo, hi) if j % 2 == 0}

    def M_blocks(self, lo: int, hi: int) -> dict:
        return {j: self.theta(j).matrix for j in range(lo, hi) if j % 2}

    def thetas(self, lo: int, hi: int) -> np.ndarray:
        return self._cache.get(lo, hi)

    def matrix(self, lo: int, hi: int) -> np.ndarray:
        """Exact entries ``C[i, k]`` for ``lo <= i, k < hi`` (scalar indices)."""
        rows = np.zeros((hi - lo, hi - lo), dtype=complex)
        for i in range(lo, hi):
            out = apply(self, StateVector.basis(self.lattice, i))
            for k, v in out.amplitudes.items():
                if lo <= k < hi:
                    rows[i - lo, k - lo] = v
        return rows


def build_cmv(alphas: VerblunskySequence, cell: str = None, lattice: str = None) -> CMVOperator:
    """Assemble the CMV operator for ``alphas``.

    ``cell`` is checked against the parameters when given; ``lattice``
    defaults to semi-infinite for one-sided and doubly infinite for two-sided
    sequences.
    """
    if cell is not None and cell != alphas.cell:
        raise ValueError(f"parameters are {alphas.cell}, not {cell}")
    if lattice is None:
        lattice = "semi-infinite" if alphas.kind == "one-sided" else "doubly-infinite"
    return CMVOperator(alphas, lattice)


@dataclass(frozen=True)
class StateVector:
    """Finitely supported wave function stored densely from index ``start``."""

    lattice: str
    start: int
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lattice", _lattice(self.lattice))
        object.__setattr__(self, "data", np.asarray(self.data, dtype=complex).ravel())
        if self.lattice == "semi-infinite" and self.start < 0:
            raise ValueError("semi-infinite states live on non-negative indices")

    @classmethod
    def basis(cls, lattice: str, index: int) -> "StateVector":
        return cls(lattice, index, np.ones(1))

    @classmethod
    def from_dict(cls, lattice: str, amplitudes: Mapping[int, complex]) -> "StateVector":
        if not amplitudes:
            return cls(lattice, 0, np.zeros(1))
        lo, hi = min(amplitudes), max(amplitudes)
        data = np.zeros(hi - lo + 1, dtype=complex)
        for k, v in amplitudes.items():
            data[k - lo] = v
        return cls(lattice, lo, data)

    @property
    def stop(self) -> int:
        return self.start + self.data.size

    @property
    def amplitudes(self) -> dict:
        return {self.start + i: complex(v) for i, v in enumerate(self.data) if v != 0}

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __getitem__(self, index: int) -> complex:
        i = index - self.start
        return complex(self.data[i]) if 0 <= i < self.data.size else 0j

    def normalized(self) -> "StateVector":
        return StateVector(self.lattice, self.start, self.data / self.norm)

    def trimmed(self, tol: float = 0.0) -> "StateVector":
        nz = np.flatnonzero(np.abs(self.data) > tol)
        if nz.size == 0:
            return StateVector(self.lattice, self.start, np.zeros(1))
        return StateVector(self.lattice, self.start + int(nz[0]), self.data[nz[0]: nz[-1] + 1])


def _apply_factor(op: CMVOperator, rows: np.ndarray, start: int, parity: int):
    """Apply the factor holding Thetas of the given parity to row vectors."""
    u = op.unit
    first_unit = start // u - 1
    last_unit = -(-(start + rows.shape[1]) // u)  # ceil
    j0 = first_unit if (first_unit - parity) % 2 == 0 else first_unit - 1
    if op.lattice == "semi-infinite":
        j0 = max(j0, parity)
    j1 = last_unit
    npair = (j1 - j0) // 2 + 1 if j1 >= j0 else 0
    lo_idx = min(start, j0 * u)
    hi_idx = max(start + rows.shape[1], (j0 + 2 * npair) * u)
    buf = np.zeros((rows.shape[0], hi_idx - lo_idx), dtype=complex)
    buf[:, start - lo_idx: start - lo_idx + rows.shape[1]] = rows
    if npair:
        blocks = op.thetas(j0, j0 + 2 * npair)[::2]
        kernels.theta_pairs(buf, np.ascontiguousarray(blocks), j0 * u - lo_idx)
    return buf, lo_idx


def apply_rows(op: CMVOperator, rows: np.ndarray, start: int):
    """Apply ``C`` to a batch of row vectors supported from index ``start``."""
    rows = np.ascontiguousarray(rows, dtype=complex)
    rows, start = _apply_factor(op, rows, start, 0)
    rows, start = _apply_factor(op, rows, start, 1)
    return rows, start


def apply(op: CMVOperator, psi: StateVector) -> StateVector:
    """One step ``psi -> psi C``, computed as ``(psi L) M`` with exact blocks."""
    if psi.lattice != op.lattice:
        raise LatticeMismatchError(f"state on {psi.lattice} lattice, operator on {op.lattice}")
    rows, start = apply_rows(op, psi.data[None, :], psi.start)
    return StateVector(op.lattice, start, rows[0]).trimmed()


def recurrence_residual(op: CMVOperator, alphas: VerblunskySequence, z, count: int) -> float:
    """Largest residual of ``(C x(z))_j = z x_j(z)`` over the first ``count`` rows."""
    if op.lattice != "semi-infinite":
        raise ValueError("residuals are defined for semi-infinite operators")
    xs = laurent_polynomials(alphas, count + 3)
    vals = [x.evaluate(z) for x in xs]
    u = op.unit
    worst = 0.0
    for j in range(count):
        rows = np.zeros((u, u * (j + 1)), dtype=complex)
        rows[np.arange(u), np.arange(u) + u * j] = 1
        out, start = apply_rows(op, rows, 0)
        acc = np.zeros_like(vals[0])
        for col in range(out.shape[1]):
            k = (start + col) // u
            if k >= len(vals) or not np.any(out[:, col]):
                continue
            q = (start + col) % u
            if u == 1:
                acc = acc + out[0, col] * vals[k]
            else:
                acc = acc + np.outer(out[:, col], vals[k][q])
        worst = max(worst, float(np.linalg.norm(acc - z * vals[j])))
    return worst
