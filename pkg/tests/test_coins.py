import numpy as np
import pytest
from hypothesis import given

from conftest import coins_st
from oracles import dense_walk_matrix, random_coin
from qrw import (
    HADAMARD,
    HMOD,
    IDENTITY,
    CoinValidationError,
    StateVector,
    TrivialCoinError,
    amplitude_index,
    apply,
    constant_coin_split,
    evolve,
    free_walk,
    halfline_walk,
    index_state,
    line_walk,
    preset_coin,
    validate_coin,
)
from qrw.coins import DegenerateCoinError, fold_to_line, line_to_fold


class TestValidate:
    def test_hadamard(self):
        c = validate_coin(HADAMARD)
        assert not c.diagonal
        assert c.sigma1 == 0.0 and c.sigma2 == pytest.approx(np.pi)

    def test_identity_is_diagonal(self):
        assert validate_coin(IDENTITY).diagonal

    def test_trivial(self):
        with pytest.raises(TrivialCoinError):
            validate_coin([[0, 1], [1, 0]])

    @pytest.mark.parametrize("bad", [[[1, 1], [0, 1]], [[1, 0, 0], [0, 1, 0]], [[np.nan, 0], [0, 1]]])
    def test_invalid(self, bad):
        with pytest.raises(CoinValidationError):
            validate_coin(bad)

    def test_presets(self):
        assert np.allclose(preset_coin("Hadamard").entries, HADAMARD)
        assert np.allclose(preset_coin("hmod").entries, [[1, -1j], [1j, -1]] / np.sqrt(2))
        with pytest.raises(KeyError):
            preset_coin("grover")

    @given(coins_st())
    def test_random_coins_pass(self, m):
        c = validate_coin(m)
        assert abs(abs(c.entries[0, 0]) - abs(c.entries[1, 1])) < 1e-12


class TestHalfLine:
    def test_hadamard_constants(self):
        p = halfline_walk("hadamard").constant_params
        assert p.sigma1 == 0.0
        assert p.sigma2 == pytest.approx(np.pi)
        assert p.vartheta == pytest.approx(np.pi / 2)
        assert p.a == pytest.approx(1j / np.sqrt(2), abs=1e-15)
        assert p.a.real == 0.0  # snapped, so the mass-free branch is taken exactly

    def test_hmod_constants(self):
        p = halfline_walk(HMOD).constant_params
        assert p.a == pytest.approx(1 / np.sqrt(2), abs=1e-15)
        assert p.a.imag == 0.0

    def test_identity_is_free(self):
        walk = halfline_walk(IDENTITY)
        assert all(walk.verblunsky[j] == 0 for j in range(10))
        assert np.allclose(walk.cmv().matrix(0, 10), free_walk("half-line").cmv().matrix(0, 10))

    @given(coins_st(), coins_st(), coins_st())
    def test_parameters_from_coins(self, c0, c1, c2):
        walk = halfline_walk([c0, c1, c2])
        lam = walk.gauge.lam
        assert lam(-1) == 1 and lam(0) == 1
        for j, c in enumerate([c0, c1, c2, c2]):
            alpha = walk.verblunsky[2 * j]
            assert abs(alpha - np.conj(c[1, 0]) * lam(2 * j) / lam(2 * j - 1)) < 1e-13
            assert walk.verblunsky[2 * j + 1] == 0
            assert walk.verblunsky.rho(2 * j) == pytest.approx(abs(c[0, 0]), abs=1e-13)
            assert abs(abs(lam(2 * j + 1)) - 1) < 1e-14

    def test_phase_rules(self, rng):
        coins = [random_coin(rng) for _ in range(4)]
        walk = halfline_walk(coins)
        lam = walk.gauge.lam
        for j, c in enumerate(coins):
            s1, s2 = np.angle(c[0, 0]), np.angle(c[1, 1])
            assert lam(2 * j + 2) == pytest.approx(np.exp(-1j * s1) * lam(2 * j))
            assert lam(2 * j + 1) == pytest.approx(np.exp(1j * s2) * lam(2 * j - 1))

    def test_mapping_and_errors(self):
        walk = halfline_walk({2: HMOD}, default=HADAMARD)
        assert np.allclose(walk.coin(2).entries, HMOD)
        assert np.allclose(walk.coin(5).entries, HADAMARD)
        assert walk.constant_params is None
        with pytest.raises(ValueError):
            halfline_walk({1: HMOD})
        with pytest.raises(ValueError):
            halfline_walk({-1: HMOD}, default=HADAMARD)
        with pytest.raises(ValueError):
            halfline_walk([])
        with pytest.raises(TrivialCoinError):
            halfline_walk([HADAMARD, [[0, 1], [1, 0]]])

    def test_repeated_default_is_constant(self):
        assert halfline_walk([HADAMARD, HADAMARD]).constant_params is not None


class TestGauge:
    def test_halfline_gauge_equivalence(self, rng):
        for _ in range(10):
            walk = halfline_walk([random_coin(rng) for _ in range(6)], default=random_coin(rng))
            U = dense_walk_matrix(lambda i: walk.coin(i).entries, "half-line", 0, 14)
            lam = walk.gauge.lambdas(range(30))
            C = walk.cmv().matrix(0, 30)
            G = np.conj(lam)[:, None] * U * lam[None, :]
            assert np.abs(G[:16, :16] - C[:16, :16]).max() < 1e-13

    def test_line_gauge_equivalence(self, rng):
        for _ in range(10):
            coins = {s: random_coin(rng) for s in range(-3, 4)}
            walk = line_walk(coins, default=random_coin(rng))
            U = dense_walk_matrix(lambda i: walk.coin(i).entries, "line", -12, 11)
            lam = walk.gauge.lambdas(range(-24, 24))
            D = walk.line_cmv().matrix(-24, 24)
            G = np.conj(lam)[:, None] * U * lam[None, :]
            assert np.abs((G - D)[8:-8, 8:-8]).max() < 1e-13


class TestLine:
    def test_identity_is_free(self):
        walk = line_walk(IDENTITY)
        assert all(walk.verblunsky[j] == 0 for j in range(-6, 6))

    def test_hadamard_blocks(self):
        walk = line_walk(HADAMARD)
        p = walk.constant_params
        A = np.array([[0, -np.conj(p.a)], [p.a, 0]])
        assert p.a == pytest.approx(1j / np.sqrt(2))
        for j in range(8):
            b = walk.block_verblunsky[j]
            expected = A * np.exp(-1j * (j + 1) * p.vartheta) if j % 2 == 0 else 0 * A
            assert np.abs(b - expected).max() < 1e-15

    def test_block_layout_from_scalars(self, rng):
        coins = {s: random_coin(rng) for s in range(-4, 4)}
        walk = line_walk(coins, default=random_coin(rng))
        al = walk.verblunsky
        r = lambda k: np.sqrt(1 - abs(al[k]) ** 2)
        for j in range(5):
            b = walk.block_verblunsky[2 * j]
            assert np.abs(b - [[0, -np.conj(al[-2 * j - 2])], [al[2 * j], 0]]).max() < 1e-15
            # (1 - b b^H)^(1/2) pairs the rho of the mirrored index -2j-2 with rho_2j
            rl, rr = walk.block_verblunsky.rho(2 * j)
            assert np.allclose(rr, np.diag([r(-2 * j - 2), r(2 * j)]), atol=1e-14)
            assert np.allclose(rl, np.diag([r(2 * j), r(-2 * j - 2)]), atol=1e-14)

    def test_constant_coin_rho_blocks(self, rng):
        walk = line_walk(random_coin(rng))
        al = walk.verblunsky
        r = lambda k: np.sqrt(1 - abs(al[k]) ** 2)
        for j in range(5):
            rl, rr = walk.block_verblunsky.rho(2 * j)
            assert np.allclose(rr, np.diag([r(2 * j - 2), r(2 * j)]), atol=1e-14)
            assert np.allclose(rl, np.diag([r(2 * j), r(2 * j - 2)]), atol=1e-14)

    def test_fold_correctness(self, backend, rng):
        coins = {s: random_coin(rng) for s in range(-5, 5)}
        walk = line_walk(coins, default=random_coin(rng))
        folded, line = walk.cmv(), walk.line_cmv()
        for _ in range(20):
            amps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            amps /= np.linalg.norm(amps)
            f = StateVector("semi-infinite", 0, amps)
            d = StateVector.from_dict("doubly-infinite",
                                      {fold_to_line(k): v for k, v in enumerate(amps)})
            for _ in range(10):
                f, d = apply(folded, f), apply(line, d)
            unfolded = {fold_to_line(k): v for k, v in f.amplitudes.items()}
            keys = set(unfolded) | set(d.amplitudes)
            assert max(abs(unfolded.get(k, 0) - d[k]) for k in keys) < 1e-13

    def test_mapping_requires_default(self):
        with pytest.raises(ValueError):
            line_walk({0: HADAMARD})


class TestSplit:
    def test_hadamard(self):
        s = constant_coin_split(HADAMARD)
        m = 1 / np.sqrt(2)
        assert s.vartheta == pytest.approx(np.pi / 2)
        assert s.plus[0] == pytest.approx(1j * m) and s.minus[0] == pytest.approx(-1j * m)
        assert s.plus[1] == 0 and s.plus[2] == pytest.approx(1j * m)

    def test_diagonalizes(self, rng):
        for _ in range(50):
            s = constant_coin_split(random_coin(rng))
            assert np.abs(s.P.conj().T @ s.P - np.eye(2)).max() < 1e-14
            D = s.P.conj().T @ s.A @ s.P
            assert abs(D[0, 1]) < 1e-14 and abs(D[1, 0]) < 1e-14
            m = abs(s.A[1, 0])
            assert D[0, 0] == pytest.approx(1j * m, abs=1e-14)
            assert D[1, 1] == pytest.approx(-1j * m, abs=1e-14)

    def test_diagonal_coin(self):
        with pytest.raises(DegenerateCoinError):
            constant_coin_split(np.diag([1, 1j]))


class TestIndices:
    @pytest.mark.parametrize("site,spin,expected", [
        (0, "up", 0), (-1, "down", 1), (-1, "up", 2), (0, "down", 3), (1, "down", 7)])
    def test_line(self, site, spin, expected):
        assert amplitude_index("line", site, spin) == expected

    def test_half(self):
        assert amplitude_index("half-line", 1, "up") == 2
        assert amplitude_index("half-line", 3, 1) == 7
        with pytest.raises(ValueError):
            amplitude_index("half-line", -1, "up")
        with pytest.raises(ValueError):
            amplitude_index("half-line", 0, "sideways")

    def test_bijection(self):
        seen = {fold_to_line(f) for f in range(400)}
        assert seen == set(range(-200, 200))
        for f in range(400):
            assert line_to_fold(fold_to_line(f)) == f
            site, spin = index_state("line", f)
            assert amplitude_index("line", site, spin) == f
        for k in range(50):
            assert amplitude_index("half-line", *index_state("half-line", k)) == k


class TestFreeWalk:
    def test_half_step_left(self):
        out = evolve(free_walk("half-line"), StateVector.basis("semi-infinite", 3), 1)
        assert out.amplitudes == {1: 1}  # |1 down> -> |0 down>

    def test_line_shift(self):
        out = evolve(free_walk("line"), StateVector.basis("doubly-infinite", 0), 7)
        assert out.amplitudes == {14: 1}

    def test_unknown_lattice(self):
        with pytest.raises(ValueError):
            free_walk("torus")
