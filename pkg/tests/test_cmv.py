import numpy as np
import pytest
from hypothesis import given

from conftest import alphas_st
from oracles import cmv_display_entry, dense_cmv, random_coin
from qrw import (
    HADAMARD,
    ParameterDomainError,
    StateVector,
    VerblunskySequence,
    apply,
    build_cmv,
    evolve,
    halfline_walk,
    laurent_polynomials,
    line_walk,
    recurrence_residual,
)
from qrw.cmv import LatticeMismatchError, theta_block
from qrw.coins import fold_to_line


def random_alphas(rng, n, scale=0.5):
    r = scale * np.sqrt(rng.uniform(0, 1, n))
    return list(r * np.exp(2j * np.pi * rng.uniform(0, 1, n)))


def random_state(rng, lattice, lo, hi):
    data = rng.standard_normal(hi - lo) + 1j * rng.standard_normal(hi - lo)
    return StateVector(lattice, lo, data / np.linalg.norm(data))


class TestTheta:
    def test_scalar_unitary(self, rng):
        for a in random_alphas(rng, 20, 0.99):
            m = theta_block(a).matrix
            assert np.abs(m.conj().T @ m - np.eye(2)).max() < 1e-14

    def test_block_unitary(self, rng):
        for _ in range(20):
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            a *= 0.9 / np.linalg.norm(a, 2)
            m = theta_block(a).matrix
            assert np.abs(m.conj().T @ m - np.eye(4)).max() < 1e-14


class TestBuild:
    def test_free_is_shift_walk(self):
        C = build_cmv(VerblunskySequence.constant(0j)).matrix(0, 12)
        expected = np.zeros((12, 12))
        expected[1, 0] = 1  # |0 down> reverses and stays
        for j in range(5):
            expected[2 * j, 2 * j + 2] = 1  # up moves right
            expected[2 * j + 3, 2 * j + 1] = 1  # down moves left
        assert np.array_equal(C[:10, :10], expected[:10, :10])

    def test_half_first_parameter(self):
        C = build_cmv(VerblunskySequence.from_list([0.5])).matrix(0, 4)
        assert np.allclose(C[:2, :2], [[0.5, 0], [np.sqrt(3) / 2, 0]], atol=1e-15)

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            build_cmv(VerblunskySequence.from_list([0.3, 1.2]))
        with pytest.raises(ValueError):
            build_cmv(VerblunskySequence.from_list([0.3]), cell="block")

    def test_corner_matches_factors_and_display(self, rng):
        for _ in range(20):
            al = random_alphas(rng, 12)
            C = build_cmv(VerblunskySequence.from_list(al)).matrix(0, 10)
            assert np.abs(C[:8, :8] - dense_cmv(al, 10)[:8, :8]).max() < 1e-14
            disp = np.array([[cmv_display_entry(al, i, k) for k in range(8)] for i in range(8)])
            assert np.abs(C[:8, :8] - disp).max() < 1e-14

    def test_block_corner_matches_factors(self, rng):
        blocks = []
        for j in range(10):
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            blocks.append(0.6 * a / np.linalg.norm(a, 2))
        C = build_cmv(VerblunskySequence.from_list(blocks)).matrix(0, 16)
        assert np.abs(C[:12, :12] - dense_cmv(blocks, 8)[:12, :12]).max() < 1e-14

    def test_folded_block_is_reordered_line_operator(self, rng):
        for _ in range(30):
            coins = {s: random_coin(rng) for s in range(-4, 4)}
            walk = line_walk(coins, default=random_coin(rng))
            B = walk.cmv().matrix(0, 12)
            D = walk.line_cmv().matrix(-16, 16)
            idx = [fold_to_line(f) + 16 for f in range(12)]
            assert np.abs(B - D[np.ix_(idx, idx)]).max() < 1e-14

    def test_band_width(self):
        assert build_cmv(VerblunskySequence.constant(0.1)).band_width == 5
        assert build_cmv(VerblunskySequence.constant(0.1 * np.eye(2))).band_width == 3


class TestApply:
    def test_free_reflection(self, backend):
        op = build_cmv(VerblunskySequence.constant(0j))
        out = apply(op, StateVector.basis("semi-infinite", 1))
        assert out.amplitudes == {0: 1}

    def test_hadamard_line_one_step(self, backend):
        out = evolve(line_walk(HADAMARD), StateVector.basis("doubly-infinite", 0), 1)
        s = 1 / np.sqrt(2)
        # |1 up> has index 2, |-1 down> index -1
        assert out[2] == pytest.approx(s) and out[-1] == pytest.approx(s)
        assert out.norm == pytest.approx(1.0, abs=1e-15)

    def test_long_run_norm(self, backend, rng):
        op = build_cmv(VerblunskySequence.from_list(random_alphas(rng, 40), default=0.3 - 0.2j))
        psi = random_state(rng, "semi-infinite", 0, 6)
        for _ in range(1000):
            psi = apply(op, psi)
        assert abs(psi.norm - 1) <= 1e-12

    def test_doubly_infinite_norm_and_band(self, backend, rng):
        al = {j: a for j, a in zip(range(-20, 20), random_alphas(rng, 40))}
        op = build_cmv(VerblunskySequence("two-sided", al, 0.1j))
        psi = StateVector.basis("doubly-infinite", 3)
        for n in range(1, 15):
            psi = apply(op, psi)
            assert abs(psi.norm - 1) < 1e-14
            assert 3 - 2 * n <= psi.start and psi.stop - 1 <= 3 + 2 * n

    def test_block_apply_matches_matrix(self, backend, rng):
        walk = line_walk(random_coin(rng))
        op = walk.cmv()
        B = op.matrix(0, 20)
        psi = random_state(rng, "semi-infinite", 0, 6)
        out = apply(op, psi)
        dense = psi.data @ B[:6, :]
        got = np.array([out[k] for k in range(20)])
        assert np.abs(got - dense).max() < 1e-14

    def test_lattice_mismatch(self):
        op = build_cmv(VerblunskySequence.constant(0j))
        with pytest.raises(LatticeMismatchError):
            apply(op, StateVector.basis("doubly-infinite", 0))

    @given(alphas_st)
    def test_unitarity_property(self, alphas):
        op = build_cmv(VerblunskySequence.from_list(alphas))
        psi = StateVector("semi-infinite", 2, np.array([0.6, 0.8j, 0.0, 0.0]))
        for _ in range(5):
            psi = apply(op, psi)
            assert abs(psi.norm - 1) < 1e-14


class TestResidual:
    def test_free_vanishes(self):
        # exact in arithmetic; z * z^k and z^(k+1) differ by rounding only
        seq = VerblunskySequence.constant(0j)
        assert recurrence_residual(build_cmv(seq), seq, np.exp(0.3j), 20) <= 4 * np.finfo(float).eps

    def test_random_forty_rows(self, rng):
        for _ in range(5):
            seq = VerblunskySequence.from_list(random_alphas(rng, 45))
            z = np.exp(1j * rng.uniform(-np.pi, np.pi))
            assert recurrence_residual(build_cmv(seq), seq, z, 40) <= 1e-12

    def test_block_hadamard(self, rng):
        # on the support arcs |t| <= pi/4 (mod pi) the polynomials stay bounded
        walk = line_walk(HADAMARD)
        for t in rng.uniform(-np.pi / 4, np.pi / 4, 5):
            for z in (np.exp(1j * t), -np.exp(1j * t)):
                res = recurrence_residual(walk.cmv(), walk.block_verblunsky, z, 20)
                assert res <= 1e-12

    def test_block_hadamard_in_gap_relative(self):
        walk = line_walk(HADAMARD)
        seq = walk.block_verblunsky
        xs = laurent_polynomials(seq, 23)
        for t in (1.1, np.pi / 2, 2.0):
            z = np.exp(1j * t)
            scale = max(np.abs(x(z)).max() for x in xs)
            assert scale > 100
            assert recurrence_residual(walk.cmv(), seq, z, 20) <= 1e-15 * scale

    def test_requires_semi_infinite(self):
        seq = VerblunskySequence.constant(0j, kind="two-sided")
        with pytest.raises(ValueError):
            recurrence_residual(build_cmv(seq), seq, 1.0, 3)

    def test_halfline_walk_operator(self):
        walk = halfline_walk(HADAMARD)
        for t in (0.2, 1.1, 2.0):
            assert recurrence_residual(walk.cmv(), walk.verblunsky, np.exp(1j * t), 20) <= 1e-12
