"""Closed-form spectral data for constant coins.

For the parameters ``(a, 0, a, 0, ...)`` the measure, its Carathéodory
function and the Laurent polynomials are explicit.  A constant coin on the
half-line gives this sequence rotated by ``vartheta``; on the line it gives
the block sequence ``(A, 0, A, 0, ...)`` with ``A = [[0, -conj a], [a, 0]]``,
again rotated.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .coins import ConstantParams, DegenerateCoinError, GaugeTransform, _CoinField, _as_coin
from .opuc import LaurentPoly, rotate_laurent

__all__ = [
    "chebyshev_u",
    "ClosedFormMeasure",
    "ClosedFormMatrixMeasure",
    "appendix_measure",
    "appendix_caratheodory",
    "appendix_laurent",
    "line_matrix_measure",
    "line_matrix_caratheodory",
    "line_matrix_laurent",
    "MomentCoeffs",
    "moment_coeff",
]


def chebyshev_u(n: int, x):
    """Chebyshev polynomial of the second kind by its three-term recurrence.

    ``U_{-1} = 0``, ``U_0 = 1``, ``U_{n+1} = 2x U_n - U_{n-1}``.  Works for
    complex and array arguments.
    """
    if n < -1:
        raise ValueError("n must be >= -1")
    x = np.asarray(x)
    prev, cur = np.zeros_like(x, dtype=np.result_type(x, float)), np.ones_like(x, dtype=np.result_type(x, float))
    if n == -1:
        return prev[()]
    for _ in range(n):
        prev, cur = cur, 2 * x * cur - prev
    return cur[()]


def _chebyshev_u_poly(n: int, y: LaurentPoly) -> LaurentPoly:
    """``U_n(y)`` for a scalar Laurent polynomial ``y`` (coefficient space)."""
    if n == -1:
        return LaurentPoly.monomial(0, 0.0)
    prev, cur = LaurentPoly.monomial(0, 0.0), LaurentPoly.monomial(0, 1.0)
    for _ in range(n):
        prev, cur = cur, (y.multiply(cur) * 2 - prev).pruned()
    return cur


def _arc_delta(theta, arcs):
    """Arc label (+1 upper, -1 lower, 0 outside) and distance to its nearest end."""
    theta = np.angle(np.exp(1j * np.asarray(theta, dtype=float)))
    sign = np.zeros(theta.shape)
    delta = np.zeros(theta.shape)
    for s, (lo, hi) in zip((1.0, -1.0), arcs):
        inside = (theta >= lo) & (theta <= hi)
        sign = np.where(inside, s, sign)
        delta = np.where(inside, np.minimum(theta - lo, hi - theta), delta)
    return theta, sign, delta


def _branch_q(w, abs_a):
    """``Q = w * sqrt((w - 1/w)^2 + 4|a|^2)`` with ``|lambda_+| > |lambda_-|``.

    ``lambda_+- = (w^2 + 1 +- Q) / (2 rho w)``; picking the larger root
    selects the branch with ``Q(0) = 1``, i.e. ``F(0) = 1``.
    """
    w = np.asarray(w, dtype=complex)
    q = np.sqrt((w * w - 1) ** 2 + 4 * abs_a ** 2 * w * w)
    keep = np.abs(w * w + 1 + q) >= np.abs(w * w + 1 - q)
    return np.where(keep, q, -q)


@dataclass(frozen=True)
class ClosedFormMeasure:
    """Measure of ``(a, 0, a, 0, ...)`` rotated by ``rotation``.

    Before rotation the absolutely continuous part is
    ``w(t) dt / 2pi`` with ``w(t) = sqrt(sin^2 t - sin^2 eta) / |sin t - sin beta|``
    on ``[eta, pi - eta]`` and ``[eta - pi, -eta]``, plus a point mass ``M`` at
    ``e^{i beta}``.  The rotated measure satisfies ``mu(z) = mu_hat(e^{-i rotation} z)``.
    """

    a: complex
    rotation: float = 0.0
    eta: float = field(init=False)
    beta: float = field(init=False)
    mass: float = field(init=False)

    def __post_init__(self):
        a = complex(self.a)
        if abs(a) >= 1:
            raise ValueError("|a| must be < 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "eta", float(np.arcsin(abs(a))))
        sb = -a.imag
        beta = np.arcsin(sb) if a.real >= 0 else np.pi - np.arcsin(sb)
        object.__setattr__(self, "beta", float(np.angle(np.exp(1j * beta))))
        object.__setattr__(self, "mass", float(abs(a.real) / np.sqrt(1 - a.imag ** 2)))

    value_shape = ()

    @property
    def arcs(self):
        """Support arcs before rotation, upper arc first."""
        return [(self.eta, np.pi - self.eta), (self.eta - np.pi, -self.eta)]

    @property
    def mass_points(self):
        """``[(z, M)]`` in rotated coordinates (empty when ``Re a = 0``)."""
        if self.mass <= 0:
            return []
        return [(complex(np.exp(1j * (self.beta + self.rotation))), self.mass)]

    def arc_weight(self, sign, delta):
        """Weight at distance ``delta`` from the nearest end of an arc.

        Written in terms of ``delta`` so the endpoint behaviour (including the
        merged case ``|sin beta| = sin eta``) keeps full relative accuracy.
        """
        s_eta = abs(self.a)
        if s_eta == 0:
            # Lebesgue measure: the endpoint 0/0 at t = 0, pi is removable
            return np.ones(np.shape(delta))
        diff = 2 * np.cos(self.eta + delta / 2) * np.sin(delta / 2)  # |sin t| - sin eta
        num = np.sqrt(diff * (diff + 2 * s_eta))
        den = np.abs(sign * diff + (sign * s_eta + self.a.imag))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        return np.where(delta > 0, out, np.where(den > 0, 0.0, np.inf))

    def weight(self, theta):
        """Density ``w`` at unrotated angle ``theta`` (0 off the support)."""
        _, sign, delta = _arc_delta(theta, self.arcs)
        out = self.arc_weight(sign, delta)
        return np.where(sign != 0, out, 0.0)[()]

    def density(self, angle):
        """Density of the rotated measure at ``z = e^{i angle}``."""
        return self.weight(np.asarray(angle) - self.rotation)

    def caratheodory(self, z):
        return appendix_caratheodory(self.a, z, self.rotation)


def appendix_measure(a: complex, rotation: float = 0.0) -> ClosedFormMeasure:
    """Closed-form measure for ``(a, 0, a, 0, ...)`` rotated by ``rotation``."""
    return ClosedFormMeasure(complex(a), float(rotation))


def appendix_caratheodory(a: complex, z, rotation: float = 0.0):
    """Carathéodory function ``F(z) = F_hat(e^{-i rotation} z)`` for ``|z| < 1``.

    ``F_hat = -(S + 2 Re a) / (w - 1/w + 2i Im a)`` with
    ``S = sqrt((w - 1/w)^2 + 4|a|^2)``; the equivalent form
    ``-(w - 1/w - 2i Im a) / (S - 2 Re a)`` is used wherever its denominator
    is larger.  Both are multiplied through by ``w`` so ``z = 0`` is regular.
    """
    a = complex(a)
    w = np.exp(-1j * rotation) * np.asarray(z, dtype=complex)
    q = _branch_q(w, abs(a))
    den1 = w * w - 1 + 2j * a.imag * w
    den2 = q - 2 * a.real * w
    use1 = np.abs(den1) >= np.abs(den2)
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 = -(q + 2 * a.real * w) / den1
        f2 = -(w * w - 1 - 2j * a.imag * w) / den2
    return np.where(use1, f1, f2)[()]


def appendix_laurent(a: complex, index: int) -> LaurentPoly:
    """Laurent polynomial ``x_index`` of ``(a, 0, a, 0, ...)`` as exact coefficients.

    ``x_{2n-1} = U_n(y) - (z + a) U_{n-1}(y) / rho`` and
    ``x_{2n} = U_n(y) - (1/z + conj a) U_{n-1}(y) / rho`` with
    ``y = (z + 1/z) / (2 rho)``.
    """
    a = complex(a)
    if index < 0:
        raise ValueError("index must be non-negative")
    if index == 0:
        return LaurentPoly.monomial(0, 1.0)
    rho = np.sqrt(1 - abs(a) ** 2)
    n = (index + 1) // 2
    y = LaurentPoly(np.array([1, 0, 1]) / (2 * rho), -1)
    un, um = _chebyshev_u_poly(n, y), _chebyshev_u_poly(n - 1, y)
    if index % 2:
        lin = LaurentPoly(np.array([a, 1]), 0)
    else:
        lin = LaurentPoly(np.array([1, np.conj(a)]), -1)
    return (un - lin.multiply(um) * (1 / rho)).pruned()


def _w_matrix(a, sign, delta, eta):
    if a == 0:
        return np.broadcast_to(np.eye(2, dtype=complex), np.shape(delta) + (2, 2)).copy()
    diff = 2 * np.cos(eta + delta / 2) * np.sin(delta / 2)
    q = np.sqrt(diff * (diff + 2 * np.sin(eta)))
    s = diff + np.sin(eta)  # |sin t|
    out = np.empty(np.shape(delta) + (2, 2), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[..., 0, 0] = s / q
        out[..., 1, 1] = s / q
        out[..., 0, 1] = -sign * 1j * np.conj(a) / q
        out[..., 1, 0] = sign * 1j * a / q
    return out


@dataclass(frozen=True)
class ClosedFormMatrixMeasure:
    """2x2 matrix measure of a constant coin on the line (no point masses).

    ``W(t) = (sin^2 t - sin^2 eta)^{-1/2} [[|sin t|, -+ i conj a], [+- i a, |sin t|]]``
    with the upper sign on ``[eta, pi - eta]``; rotated like the scalar case.
    """

    a: complex
    rotation: float = 0.0
    eta: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "eta", float(np.arcsin(abs(self.a))))

    value_shape = (2, 2)

    @property
    def arcs(self):
        return [(self.eta, np.pi - self.eta), (self.eta - np.pi, -self.eta)]

    @property
    def mass_points(self):
        return []

    def arc_weight(self, sign, delta):
        return _w_matrix(self.a, sign, delta, self.eta)

    def weight(self, theta):
        _, sign, delta = _arc_delta(theta, self.arcs)
        out = _w_matrix(self.a, sign, delta, self.eta)
        return np.where((sign != 0)[..., None, None], out, 0.0)[()]

    def density(self, angle):
        return self.weight(np.asarray(angle) - self.rotation)

    def caratheodory(self, z):
        return line_matrix_caratheodory(self.a, z, self.rotation)


def line_matrix_caratheodory(a: complex, z, rotation: float = 0.0):
    """``F(z) = -(1/S) [[w - 1/w, 2 conj a], [-2a, w - 1/w]]`` at ``w = e^{-i rotation} z``."""
    a = complex(a)
    w = np.exp(-1j * rotation) * np.asarray(z, dtype=complex)
    q = _branch_q(w, abs(a))
    out = np.empty(w.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = out[..., 1, 1] = -(w * w - 1) / q
    out[..., 0, 1] = -2 * np.conj(a) * w / q
    out[..., 1, 0] = 2 * a * w / q
    return out


def line_matrix_measure(coin) -> ClosedFormMatrixMeasure:
    """Matrix measure of the constant line walk with this coin.

    A diagonal coin gives ``a = 0``, i.e. Lebesgue measure times the identity.
    """
    p = ConstantParams.from_coin(_as_coin(coin, 0))
    return ClosedFormMatrixMeasure(p.a, p.vartheta)


def line_matrix_laurent(coin, index: int) -> LaurentPoly:
    """Matrix Laurent polynomial ``X_index`` of a constant line walk.

    ``X_hat_{2j-1} = U_j(y) 1 - [[z, -conj a], [a, z]] U_{j-1}(y) / rho`` and
    ``X_hat_{2j}(z) = X_hat_{2j-1}(1/conj z)^H``; the result is rotated by
    ``vartheta`` and multiplied by the folded gauge block.
    """
    c = _as_coin(coin, 0)
    if c.diagonal:
        raise DegenerateCoinError("diagonal coin: use the free-walk description")
    p = ConstantParams.from_coin(c)
    a, rho = p.a, p.rho
    eye = np.eye(2, dtype=complex)
    if index == 0:
        xhat = LaurentPoly.monomial(0, eye)
    else:
        j = (index + 1) // 2
        y = LaurentPoly(np.array([1, 0, 1]) / (2 * rho), -1)
        uj, um = _chebyshev_u_poly(j, y), _chebyshev_u_poly(j - 1, y)
        lin = LaurentPoly(np.array([[[0, -np.conj(a)], [a, 0]], eye]), 0)
        odd = (uj.lmul(eye) - um.multiply(lin) * (1 / rho)).pruned()
        xhat = odd if index % 2 else odd.reflect()
    gauge = GaugeTransform(_CoinField({}, c))
    return rotate_laurent(xhat, index, p.vartheta).lmul(gauge.fold_block(index)).pruned()


class MomentCoeffs:
    """Running-product sequences ``c_n``, ``c_hat_n`` and ``d_n``.

    ``c_n = (-1)^n prod_{k<=n} (1 - 1/(2k))``;
    ``c_hat_0 = 1``, ``c_hat_1 = 1/2``,
    ``c_hat_n = (-1)^{n-1}/2 prod_{k=2..n} (1 - 3/(2k))``;
    ``d_n = c_hat_0 + ... + c_hat_n``.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._c = [1.0]
        self._chat = [1.0, 0.5]
        self._d = [1.0, 1.5]

    def _extend(self, m: int):
        with self._lock:
            while len(self._c) <= m:
                k = len(self._c)
                self._c.append(-self._c[-1] * (1 - 1 / (2 * k)))
            while len(self._chat) <= m:
                k = len(self._chat)
                self._chat.append(-self._chat[-1] * (1 - 3 / (2 * k)))
                self._d.append(self._d[-1] + self._chat[-1])

    def get(self, kind: str, m: int) -> float:
        if m < 0:
            raise ValueError("m must be non-negative")
        self._extend(m)
        table = {"c": self._c, "chat": self._chat, "ĉ": self._chat, "d": self._d}
        try:
            return table[kind][m]
        except KeyError:
            raise ValueError(f"unknown coefficient kind {kind!r}") from None


_COEFFS = MomentCoeffs()


def moment_coeff(kind: str, m: int) -> float:
    """``c_m``, ``c_hat_m`` (``kind="chat"``) or ``d_m``."""
    return _COEFFS.get(kind, m)
