"""Orthogonal polynomials on the unit circle.

Verblunsky sequences, the Szegő recurrence, Laurent polynomial tables and
the rotation covariance of all of them.  Scalar and 2x2 block parameters are
both supported; in the block case matrices always multiply from the left.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

__all__ = [
    "ParameterDomainError",
    "VerblunskySequence",
    "SzegoPair",
    "LaurentPoly",
    "PRUNE_TOL",
    "rho_pair",
    "szego_seed",
    "szego_next",
    "laurent_polynomials",
    "rotate_verblunsky",
    "rotate_laurent",
]

PRUNE_TOL = 1e-15

Value = Union[complex, np.ndarray]


class ParameterDomainError(ValueError):
    """A Verblunsky parameter lies outside the open unit disk (or ball)."""


def _is_block(value) -> bool:
    return isinstance(value, np.ndarray) and value.shape == (2, 2)


def _check_value(value, where: str) -> Value:
    if _is_block(value):
        value = np.asarray(value, dtype=complex)
        if np.linalg.norm(value, 2) >= 1.0:
            raise ParameterDomainError(f"block parameter at {where} has norm >= 1")
        return value
    value = complex(value)
    if abs(value) >= 1.0:
        raise ParameterDomainError(f"parameter at {where} has modulus {abs(value):.17g} >= 1")
    return value


def _hermitian_sqrt(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def rho_pair(alpha: Value):
    """Return ``(rho_L, rho_R)`` for a scalar or 2x2 block parameter.

    For a scalar both entries are ``sqrt(1 - |alpha|^2)``.  For a block
    they are ``(1 - A^H A)^{1/2}`` and ``(1 - A A^H)^{1/2}``, computed
    from a Hermitian eigendecomposition.
    """
    if _is_block(alpha):
        a = np.asarray(alpha, dtype=complex)
        eye = np.eye(2)
        return _hermitian_sqrt(eye - a.conj().T @ a), _hermitian_sqrt(eye - a @ a.conj().T)
    r = float(np.sqrt(1.0 - abs(alpha) ** 2))
    return r, r


@dataclass(frozen=True)
class VerblunskySequence:
    """A one- or two-sided sequence of Verblunsky parameters.

    Parameters
    ----------
    kind : {"one-sided", "two-sided"}
    values : mapping int -> complex or 2x2 array
        Explicitly stored parameters.
    default : complex, 2x2 array or callable
        Value used for every index not in ``values``.  A callable receives
        the index, which is how rotating (non-constant) tails are expressed.
    """

    kind: str = "one-sided"
    values: Mapping[int, Value] = field(default_factory=dict)
    default: Union[Value, Callable[[int], Value]] = 0j
    cell: str = field(init=False)

    def __post_init__(self):
        if self.kind not in ("one-sided", "two-sided"):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        clean = {int(j): _check_value(v, f"index {j}") for j, v in self.values.items()}
        object.__setattr__(self, "values", clean)
        if not callable(self.default):
            object.__setattr__(self, "default", _check_value(self.default, "default"))
        probe = next(iter(clean.values()), None)
        if probe is None:
            probe = self.default(0) if callable(self.default) else self.default
        object.__setattr__(self, "cell", "block" if _is_block(probe) else "scalar")
        if self.cell == "block" and not callable(self.default) and not _is_block(self.default):
            # a scalar tail next to block values means that multiple of the identity
            object.__setattr__(self, "default", self.default * np.eye(2, dtype=complex))

    @classmethod
    def from_list(cls, seq, default: Value = 0j, kind: str = "one-sided") -> "VerblunskySequence":
        return cls(kind, dict(enumerate(seq)), default)

    @classmethod
    def constant(cls, value: Value, kind: str = "one-sided") -> "VerblunskySequence":
        return cls(kind, {}, value)

    def __getitem__(self, j: int) -> Value:
        j = int(j)
        if j < 0 and self.kind == "one-sided":
            raise IndexError(f"one-sided sequence has no index {j}")
        if j in self.values:
            return self.values[j]
        if callable(self.default):
            return _check_value(self.default(j), f"index {j}")
        return self.default

    def rho(self, j: int):
        """``rho_j``; for blocks this is the pair ``(rho_L, rho_R)``."""
        left, right = rho_pair(self[j])
        return left if self.cell == "scalar" else (left, right)

    def array(self, start: int, stop: int) -> np.ndarray:
        """Stack the parameters with indices in ``[start, stop)``."""
        return np.array([self[j] for j in range(start, stop)], dtype=complex)

    @property
    def explicit_extent(self) -> int:
        """One past the largest explicitly stored index (0 if none)."""
        return max(self.values, default=-1) + 1


@dataclass(frozen=True)
class SzegoPair:
    """Values ``phi_j(z)`` and ``phi_j^*(z)`` of the orthonormal polynomials."""

    degree: int
    phi: complex
    phi_star: complex
    point: complex


def szego_seed(z) -> SzegoPair:
    return SzegoPair(0, 1.0 + 0j, 1.0 + 0j, complex(z))


def szego_next(pair: SzegoPair, alpha) -> SzegoPair:
    """Advance the Szegő recurrence by one degree.

    ``rho phi_{j+1} = z phi_j - conj(alpha) phi_j^*`` and
    ``rho phi_{j+1}^* = phi_j^* - alpha z phi_j``.
    """
    alpha = _check_value(alpha, f"degree {pair.degree}")
    if _is_block(alpha):
        raise ParameterDomainError("szego_next is scalar only")
    rho = np.sqrt(1.0 - abs(alpha) ** 2)
    z = pair.point
    phi = (z * pair.phi - np.conj(alpha) * pair.phi_star) / rho
    phi_star = (pair.phi_star - alpha * z * pair.phi) / rho
    return SzegoPair(pair.degree + 1, complex(phi), complex(phi_star), z)


@dataclass(frozen=True)
class LaurentPoly:
    """Finite Laurent series ``sum_p c_p z^p``.

    ``coeffs[i]`` is the coefficient of ``z^(min_power + i)``.  The trailing
    axes of ``coeffs`` give the value kind: none for scalars, ``(2,)`` for
    row 2-vectors and ``(2, 2)`` for matrices.
    """

    coeffs: np.ndarray
    min_power: int = 0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 0:
            c = c.reshape(1)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "min_power", int(self.min_power))

    # -- construction --------------------------------------------------
    @classmethod
    def monomial(cls, power: int, coeff=1.0) -> "LaurentPoly":
        return cls(np.asarray(coeff, dtype=complex)[None, ...], power)

    @classmethod
    def from_dict(cls, table: Mapping[int, Value]) -> "LaurentPoly":
        if not table:
            return cls(np.zeros(1, dtype=complex), 0)
        lo, hi = min(table), max(table)
        sample = np.asarray(next(iter(table.values())), dtype=complex)
        out = np.zeros((hi - lo + 1,) + sample.shape, dtype=complex)
        for p, c in table.items():
            out[p - lo] = c
        return cls(out, lo)

    # -- structure -----------------------------------------------------
    @property
    def value_shape(self) -> tuple:
        return self.coeffs.shape[1:]

    @property
    def value_kind(self) -> str:
        return {0: "scalar", 1: "2-vector", 2: "2x2-matrix"}[len(self.value_shape)]

    @property
    def max_power(self) -> int:
        return self.min_power + self.coeffs.shape[0] - 1

    @property
    def support(self) -> tuple:
        return self.min_power, self.max_power

    def coefficient(self, p: int):
        i = p - self.min_power
        if 0 <= i < self.coeffs.shape[0]:
            return self.coeffs[i]
        return np.zeros(self.value_shape, dtype=complex)[()]

    def as_dict(self) -> dict:
        return {self.min_power + i: c for i, c in enumerate(self.coeffs)}

    def pruned(self, tol: float = PRUNE_TOL) -> "LaurentPoly":
        """Zero coefficients below ``tol`` and trim empty ends."""
        c = self.coeffs.copy()
        mag = np.abs(c).reshape(c.shape[0], -1).max(axis=1)
        c[mag < tol] = 0
        nz = np.flatnonzero(mag >= tol)
        if nz.size == 0:
            return LaurentPoly(np.zeros((1,) + self.value_shape, dtype=complex), 0)
        return LaurentPoly(c[nz[0]: nz[-1] + 1], self.min_power + int(nz[0]))

    # -- evaluation ----------------------------------------------------
    def __call__(self, z):
        return self.evaluate(z)

    def evaluate(self, z):
        """Evaluate at ``z`` (scalar or array, ``z != 0`` if negative powers)."""
        z = np.asarray(z, dtype=complex)
        zz = z.reshape(z.shape + (1,) * len(self.value_shape))
        acc = np.zeros(z.shape + self.value_shape, dtype=complex)
        for c in self.coeffs[::-1]:
            acc = acc * zz + c
        if self.min_power:
            acc = acc * zz ** self.min_power
        return acc[()] if acc.ndim == 0 else acc

    # -- algebra -------------------------------------------------------
    def _aligned(self, other: "LaurentPoly"):
        lo = min(self.min_power, other.min_power)
        hi = max(self.max_power, other.max_power)
        shape = np.broadcast_shapes(self.value_shape, other.value_shape)
        a = np.zeros((hi - lo + 1,) + shape, dtype=complex)
        b = np.zeros_like(a)
        a[self.min_power - lo: self.max_power - lo + 1] = self.coeffs
        b[other.min_power - lo: other.max_power - lo + 1] = other.coeffs
        return a, b, lo

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.monomial(0, np.broadcast_to(other, self.value_shape))
        a, b, lo = self._aligned(other)
        return LaurentPoly(a + b, lo)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(-self.coeffs, self.min_power)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, LaurentPoly):
            return self.multiply(scalar)
        return LaurentPoly(self.coeffs * scalar, self.min_power)

    __rmul__ = __mul__

    def multiply(self, other: "LaurentPoly") -> "LaurentPoly":
        """Product of two scalar Laurent polynomials (or scalar times any)."""
        if self.value_shape and other.value_shape:
            raise TypeError("use lmul for matrix-valued products")
        if not self.value_shape:
            s, o = self, other
        else:
            s, o = other, self
        out = np.zeros((s.coeffs.shape[0] + o.coeffs.shape[0] - 1,) + o.value_shape, dtype=complex)
        for i, c in enumerate(s.coeffs):
            out[i: i + o.coeffs.shape[0]] += c * o.coeffs
        return LaurentPoly(out, s.min_power + o.min_power)

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by ``z**k``."""
        return LaurentPoly(self.coeffs, self.min_power + k)

    def lmul(self, a) -> "LaurentPoly":
        """Left multiplication by a constant (scalar, 2-vector row or matrix)."""
        a = np.asarray(a, dtype=complex)
        if a.ndim == 0:
            return self * a
        if not self.value_shape:
            return LaurentPoly(self.coeffs[(...,) + (None,) * a.ndim] * a, self.min_power)
        return LaurentPoly(np.einsum("...b,pbc->p...c", a, self.coeffs), self.min_power)

    def reflect(self) -> "LaurentPoly":
        """``conj(x(1/conj(z)))``; for matrix values the conjugate transpose."""
        c = np.conj(self.coeffs[::-1])
        if len(self.value_shape) == 2:
            c = np.swapaxes(c, 1, 2)
        return LaurentPoly(c, -self.max_power)

    def allclose(self, other: "LaurentPoly", atol: float = 1e-12) -> bool:
        a, b, _ = self._aligned(other)
        return bool(np.allclose(a, b, rtol=0, atol=atol))


def _adj(a):
    return a.conj().T if _is_block(a) else np.conj(a)


def _solve(r, poly: LaurentPoly) -> LaurentPoly:
    if _is_block(r):
        return poly.lmul(np.linalg.inv(r))
    return poly * (1.0 / r)


def laurent_polynomials(alphas: VerblunskySequence, count: int) -> list:
    """Orthonormal Laurent polynomials ``x_0 .. x_{count-1}``.

    Obtained by solving the rows of ``C x = z x`` in coefficient space, so
    the same code serves scalar and 2x2 block parameters.  ``x_{2j}`` is
    supported on powers ``[-j, j]`` and ``x_{2j+1}`` on ``[-j-1, j]``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if alphas.kind != "one-sided":
        raise ValueError("Laurent polynomials need a one-sided sequence")
    block = alphas.cell == "block"
    one = np.eye(2, dtype=complex) if block else 1.0 + 0j
    xs = [LaurentPoly.monomial(0, one)]
    if count == 1:
        return xs
    a0 = alphas[0]
    _, rr0 = rho_pair(a0)
    xs.append(_solve(rr0, xs[0].shift(-1) - xs[0].lmul(a0)).pruned())
    while len(xs) < count:
        m = len(xs)
        if m % 2 == 0:
            i = (m - 2) // 2
            a_even, a_odd = alphas[2 * i], alphas[2 * i + 1]
            rl_even, _ = rho_pair(a_even)
            rl_odd, _ = rho_pair(a_odd)
            inner = xs[2 * i].lmul(rl_even) - xs[2 * i + 1].lmul(_adj(a_even))
            xs.append(_solve(rl_odd, inner.shift(1) - xs[2 * i + 1].lmul(_adj(a_odd))).pruned())
        else:
            i = (m - 1) // 2
            a_prev, a_even = alphas[2 * i - 1], alphas[2 * i]
            _, rr_prev = rho_pair(a_prev)
            _, rr_even = rho_pair(a_even)
            inner = xs[2 * i - 1].lmul(rr_prev) - xs[2 * i].lmul(a_prev)
            xs.append(_solve(rr_even, inner.shift(-1) - xs[2 * i].lmul(a_even)).pruned())
    return xs


def rotate_verblunsky(alphas: VerblunskySequence, theta: float) -> VerblunskySequence:
    """Parameters of the rotated measure: ``alpha_j -> exp(-i(j+1)theta) alpha_j``."""
    phase = lambda j: np.exp(-1j * (j + 1) * theta)
    values = {j: phase(j) * v for j, v in alphas.values.items()}
    old = alphas.default
    if callable(old):
        default = lambda j, old=old: phase(j) * old(j)
    elif (np.all(np.asarray(old) == 0)) or theta == 0:
        default = old
    else:
        default = lambda j, old=old: phase(j) * old
    return VerblunskySequence(alphas.kind, values, default)


def rotate_laurent(x: LaurentPoly, index: int, theta: float) -> LaurentPoly:
    """Laurent polynomial of the rotated measure with the given index.

    ``x_{2j-1}(z) -> e^{-ij theta} x_{2j-1}(e^{-i theta} z)`` and
    ``x_{2j}(z) -> e^{ij theta} x_{2j}(e^{-i theta} z)``.
    """
    j = (index + 1) // 2
    sign = -1 if index % 2 else 1
    powers = np.arange(x.min_power, x.max_power + 1)
    phase = np.exp(1j * (sign * j - powers) * theta)
    return LaurentPoly(x.coeffs * phase.reshape((-1,) + (1,) * len(x.value_shape)), x.min_power)
