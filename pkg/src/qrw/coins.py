"""Coins, gauge phases and the Verblunsky data of coined walks.

Pure states are indexed as ``2*site + spin`` with ``spin`` 0 for up and 1
for down (on the line this is the doubly infinite index).  The folded
ordering used for block CMV matrices on the line is produced by
:func:`amplitude_index`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional

import numpy as np

from .cmv import CMVOperator
from .opuc import VerblunskySequence

__all__ = [
    "CoinValidationError",
    "TrivialCoinError",
    "DegenerateCoinError",
    "Coin",
    "ConstantParams",
    "GaugeTransform",
    "WalkModel",
    "ConstantSplit",
    "HADAMARD",
    "HMOD",
    "IDENTITY",
    "preset_coin",
    "validate_coin",
    "halfline_walk",
    "line_walk",
    "free_walk",
    "constant_coin_split",
    "amplitude_index",
    "index_state",
    "fold_to_line",
    "line_to_fold",
]

UNITARY_TOL = 1e-12
TRIVIAL_TOL = 1e-12
# components of derived constants below this are rounding residue of exact zeros
_SNAP = 64 * np.finfo(float).eps

UP, DOWN = 0, 1


class CoinValidationError(ValueError):
    pass


class TrivialCoinError(CoinValidationError):
    """The coin has ``c11 = 0``; such walks split into independent pieces."""


class DegenerateCoinError(ValueError):
    pass


def _snap(x: complex) -> complex:
    re = 0.0 if abs(x.real) < _SNAP else x.real
    im = 0.0 if abs(x.imag) < _SNAP else x.imag
    return complex(re, im)


@dataclass(frozen=True)
class Coin:
    """A validated 2x2 unitary coin sitting at ``site``."""

    entries: np.ndarray
    site: int = 0

    def __post_init__(self):
        object.__setattr__(self, "entries", np.array(self.entries, dtype=complex).reshape(2, 2))

    @property
    def diagonal(self) -> bool:
        return abs(self.entries[1, 0]) <= TRIVIAL_TOL

    @property
    def sigma1(self) -> float:
        return float(np.angle(self.entries[0, 0]))

    @property
    def sigma2(self) -> float:
        return float(np.angle(self.entries[1, 1]))

    def same_matrix(self, other: "Coin") -> bool:
        return bool(np.array_equal(self.entries, other.entries))


def validate_coin(matrix, site: int = 0) -> Coin:
    """Check that ``matrix`` is a unitary, non-trivial coin.

    Raises
    ------
    CoinValidationError
        If the matrix is not 2x2 unitary to 1e-12.
    TrivialCoinError
        If ``|c11| <= 1e-12``: the walk then decouples into separate pieces
        and has no CMV description.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        raise CoinValidationError(f"coin must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise CoinValidationError("coin has non-finite entries")
    err = np.abs(m.conj().T @ m - np.eye(2)).max()
    if err > UNITARY_TOL:
        raise CoinValidationError(f"coin is not unitary (deviation {err:.3g})")
    if abs(m[0, 0]) <= TRIVIAL_TOL:
        raise TrivialCoinError(
            "trivial coin (c11 = 0): the walk splits into decoupled two-state pieces")
    return Coin(m, site)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
HMOD = np.array([[1, -1j], [1j, -1]], dtype=complex) / np.sqrt(2)
IDENTITY = np.eye(2, dtype=complex)

_PRESETS = {"hadamard": HADAMARD, "hmod": HMOD, "identity": IDENTITY}


def preset_coin(name: str) -> Coin:
    try:
        return validate_coin(_PRESETS[name.lower()])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}") from None


@dataclass(frozen=True)
class ConstantParams:
    """Data of a constant coin: phases, mean phase ``vartheta`` and ``a``."""

    sigma1: float
    sigma2: float
    vartheta: float
    a: complex
    rho: float

    @classmethod
    def from_coin(cls, coin: Coin) -> "ConstantParams":
        s1, s2 = coin.sigma1, coin.sigma2
        vt = 0.5 * (s1 + s2)
        a = _snap(complex(np.conj(coin.entries[1, 0]) * np.exp(1j * vt)))
        return cls(s1, s2, vt, a, float(abs(coin.entries[0, 0])))


class _CoinField:
    """Per-site coins with a constant default outside the listed sites."""

    def __init__(self, sites: Mapping[int, Coin], default: Coin):
        self.default = default
        self.sites = {i: c for i, c in sites.items() if not c.same_matrix(default)}

    def __call__(self, site: int) -> Coin:
        return self.sites.get(site, self.default)

    def phase_sum(self, which: str, lo: int, hi: int) -> float:
        """Sum of ``sigma_which`` over sites ``lo <= i < hi``."""
        base = getattr(self.default, which)
        total = base * (hi - lo)
        for i, c in self.sites.items():
            if lo <= i < hi:
                total += getattr(c, which) - base
        return total


@dataclass(frozen=True)
class GaugeTransform:
    """Diagonal phases turning the walk into a CMV matrix: ``C = Lambda^H U Lambda``.

    ``lam(d)`` is defined for every index ``d`` (negative ones on the line)
    through ``lambda_{2j+2} = e^{-i sigma1^j} lambda_{2j}``,
    ``lambda_{2j+1} = e^{i sigma2^j} lambda_{2j-1}`` and
    ``lambda_{-1} = lambda_0 = 1``.
    """

    coins: _CoinField = field(repr=False)

    def lam(self, d: int) -> complex:
        d = int(d)
        if d % 2 == 0:
            j = d // 2
            s = self.coins.phase_sum("sigma1", 0, j) if j >= 0 else -self.coins.phase_sum("sigma1", j, 0)
            return complex(np.exp(-1j * s))
        m = (d - 1) // 2  # d = 2m + 1
        s = self.coins.phase_sum("sigma2", 0, m + 1) if m >= 0 else -self.coins.phase_sum("sigma2", m + 1, 0)
        return complex(np.exp(1j * s))

    def lambdas(self, indices) -> np.ndarray:
        return np.array([self.lam(d) for d in indices], dtype=complex)

    def reduced(self, j: int) -> complex:
        """Phase ``hat-lambda_j`` of a constant coin (``e^{ik(sigma2-sigma1)/2}``, ``k = ceil(j/2)``)."""
        c = self.coins.default
        k = (j + 1) // 2
        return complex(np.exp(0.5j * k * (c.sigma2 - c.sigma1)))

    def fold_block(self, j: int) -> np.ndarray:
        """``diag(lambda_{d(2j)}, lambda_{d(2j+1)})`` for folded block ``j``."""
        return np.diag([self.lam(fold_to_line(2 * j)), self.lam(fold_to_line(2 * j + 1))])


@dataclass(frozen=True)
class WalkModel:
    """A coined walk together with its CMV data.

    Attributes
    ----------
    lattice : {"half-line", "line"}
    coins : callable site -> Coin
    gauge : GaugeTransform
    verblunsky : VerblunskySequence
        One-sided on the half-line, two-sided (scalar) on the line.
    block_verblunsky : VerblunskySequence or None
        The folded 2x2 block parameters (line only).
    constant_params : ConstantParams or None
        Present when every site carries the same coin.
    """

    lattice: str
    coins: _CoinField = field(repr=False)
    gauge: GaugeTransform = field(repr=False)
    verblunsky: VerblunskySequence = field(repr=False)
    block_verblunsky: Optional[VerblunskySequence] = field(default=None, repr=False)
    constant_params: Optional[ConstantParams] = None

    def coin(self, site: int) -> Coin:
        return self.coins(site)

    @property
    def is_constant(self) -> bool:
        return not self.coins.sites

    @cached_property
    def measure(self):
        """Closed-form orthogonality measure for constant coins, else ``None``.

        Numeric measures for other half-line walks are built on demand by
        :func:`qrw.kmcg.walk_measure`.
        """
        if self.constant_params is None:
            return None
        from .closed_forms import appendix_measure, line_matrix_measure
        if self.lattice == "half-line":
            return appendix_measure(self.constant_params.a, self.constant_params.vartheta)
        return line_matrix_measure(self.coins.default)

    def cmv(self) -> CMVOperator:
        """CMV operator: scalar semi-infinite (half-line) or folded block (line)."""
        if self.lattice == "half-line":
            return CMVOperator(self.verblunsky, "semi-infinite")
        return CMVOperator(self.block_verblunsky, "semi-infinite")

    def line_cmv(self) -> CMVOperator:
        """Doubly infinite scalar CMV operator of a line walk."""
        if self.lattice != "line":
            raise ValueError("only line walks have a doubly infinite operator")
        return CMVOperator(self.verblunsky, "doubly-infinite")

    def coin_array(self, lo: int, hi: int) -> np.ndarray:
        """Coins of sites ``lo..hi-1`` as rows ``(c11, c12, c21, c22)``."""
        return np.array([self.coin(i).entries.ravel() for i in range(lo, hi)], dtype=complex)


def _as_coin(c, site: int) -> Coin:
    if isinstance(c, Coin):
        return validate_coin(c.entries, site)
    if isinstance(c, str):
        return validate_coin(preset_coin(c).entries, site)
    return validate_coin(c, site)


def _scalar_alpha(coins: _CoinField, gauge: GaugeTransform):
    def alpha(j: int) -> complex:
        if j % 2:
            return 0j
        i = j // 2
        val = np.conj(coins(i).entries[1, 0]) * gauge.lam(j) / gauge.lam(j - 1)
        return _snap(complex(val))
    return alpha


def _build(lattice: str, coins: _CoinField) -> WalkModel:
    gauge = GaugeTransform(coins)
    alpha = _scalar_alpha(coins, gauge)
    const = ConstantParams.from_coin(coins.default) if not coins.sites else None
    if lattice == "half-line":
        seq = VerblunskySequence("one-sided", {}, alpha)
        return WalkModel("half-line", coins, gauge, seq, None, const)
    seq = VerblunskySequence("two-sided", {}, alpha)

    def block(j: int) -> np.ndarray:
        if j % 2:
            return np.zeros((2, 2), dtype=complex)
        return np.array([[0, -np.conj(alpha(-j - 2))], [alpha(j), 0]], dtype=complex)

    bseq = VerblunskySequence("one-sided", {}, block)
    return WalkModel("line", coins, gauge, seq, bseq, const)


def halfline_walk(coins, default=None) -> WalkModel:
    """Walk on the non-negative integers.

    Parameters
    ----------
    coins : Coin, 2x2 array, preset name, a sequence of these, or a mapping
        A sequence gives the coin at sites 0, 1, ...; sites beyond it use
        ``default`` (the last listed coin if ``default`` is None).  A mapping
        site -> coin requires ``default``.
    """
    if isinstance(coins, (Coin, str)) or (np.ndim(coins) == 2 and np.shape(coins) == (2, 2)):
        field_ = _CoinField({}, _as_coin(coins, 0))
    elif isinstance(coins, Mapping):
        if default is None:
            raise ValueError("a per-site coin mapping needs a default coin")
        if any(int(i) < 0 for i in coins):
            raise ValueError("half-line sites are non-negative")
        field_ = _CoinField({int(i): _as_coin(c, int(i)) for i, c in coins.items()},
                            _as_coin(default, 0))
    else:
        coins = list(coins)
        if not coins:
            raise ValueError("no coins given")
        tail = _as_coin(default if default is not None else coins[-1], len(coins))
        field_ = _CoinField({i: _as_coin(c, i) for i, c in enumerate(coins)}, tail)
    return _build("half-line", field_)


def line_walk(coins, default=None) -> WalkModel:
    """Walk on all integers.

    ``coins`` is a single coin (constant walk) or a mapping site -> coin;
    unlisted sites use ``default``, which is then required.
    """
    if isinstance(coins, Mapping):
        if default is None:
            raise ValueError("a per-site coin mapping needs a default coin")
        field_ = _CoinField({int(i): _as_coin(c, int(i)) for i, c in coins.items()},
                            _as_coin(default, 0))
    else:
        field_ = _CoinField({}, _as_coin(coins, 0))
    return _build("line", field_)


def free_walk(lattice: str) -> WalkModel:
    """The walk with identity coins (all Verblunsky parameters zero)."""
    if lattice in ("half-line", "half"):
        return halfline_walk(IDENTITY)
    if lattice == "line":
        return line_walk(IDENTITY)
    raise ValueError(f"unknown lattice {lattice!r}")


@dataclass(frozen=True)
class ConstantSplit:
    """Diagonalized form of a constant coin's block parameters."""

    plus: VerblunskySequence
    minus: VerblunskySequence
    vartheta: float
    P: np.ndarray
    A: np.ndarray


def constant_coin_split(coin) -> ConstantSplit:
    """Split ``A = [[0, -conj a], [a, 0]]`` into ``P diag(i|a|, -i|a|) P^H``.

    The scalar sequences ``(+-i|a|, 0, +-i|a|, 0, ...)`` describe the two
    diagonal measures; the actual line measure is their conjugation by ``P``
    rotated by ``vartheta``.
    """
    coin = _as_coin(coin, 0)
    if coin.diagonal:
        raise DegenerateCoinError("diagonal coin: a = 0 and the diagonalizer is undefined")
    p = ConstantParams.from_coin(coin)
    a, m = p.a, abs(p.a)
    P = np.array([[1, -1j * np.conj(a) / m], [-1j * a / m, 1]], dtype=complex) / np.sqrt(2)
    A = np.array([[0, -np.conj(a)], [a, 0]], dtype=complex)

    def seq(value):
        return VerblunskySequence("one-sided", {}, lambda j: value if j % 2 == 0 else 0j)

    return ConstantSplit(seq(1j * m), seq(-1j * m), p.vartheta, P, A)


def fold_to_line(f: int) -> int:
    """Doubly infinite index of folded index ``f``."""
    k, r = divmod(int(f), 4)
    return (2 * k, -2 * k - 1, -2 * k - 2, 2 * k + 1)[r]


def line_to_fold(d: int) -> int:
    """Inverse of :func:`fold_to_line`."""
    d = int(d)
    site, spin = divmod(d, 2)
    if site >= 0:
        return 4 * site + (0 if spin == UP else 3)
    k = -site - 1
    return 4 * k + (2 if spin == UP else 1)


def _spin(spin) -> int:
    if spin in (UP, "up", "u", "+"):
        return UP
    if spin in (DOWN, "down", "d", "-"):
        return DOWN
    raise ValueError(f"unknown spin {spin!r}")


def amplitude_index(lattice: str, site: int, spin) -> int:
    """Position of a pure state in the (folded) ordering used by KMcG formulas.

    Half-line: ``|j up> -> 2j``, ``|j down> -> 2j+1``.  Line:
    ``|k up> -> 4k``, ``|-k-1 down> -> 4k+1``, ``|-k-1 up> -> 4k+2``,
    ``|k down> -> 4k+3``.
    """
    s = _spin(spin)
    if lattice in ("half-line", "half"):
        if site < 0:
            raise ValueError("half-line sites are non-negative")
        return 2 * site + s
    if lattice == "line":
        return line_to_fold(2 * site + s)
    raise ValueError(f"unknown lattice {lattice!r}")


def index_state(lattice: str, index: int):
    """Inverse of :func:`amplitude_index`: ``(site, "up"|"down")``."""
    if index < 0:
        raise ValueError("indices are non-negative")
    d = index if lattice in ("half-line", "half") else fold_to_line(index)
    site, s = divmod(d, 2)
    return site, ("up" if s == UP else "down")
