"""Acceptance criteria, one test each, at their stated tolerances and time budgets.

Every test prints a ``PASS``/``FAIL`` line with its wall time.  Running this
file as a script (``python tests/test_acceptance.py``) prints the same lines
without pytest.
"""
import os
import sys
import time

import numpy as np
from scipy.linalg import null_space

sys.path.insert(0, os.path.dirname(__file__))

from oracles import dense_walk_matrix, random_coin  # noqa: E402
from qrw import (  # noqa: E402
    HADAMARD,
    HMOD,
    CaratheodoryEvaluator,
    StateVector,
    VerblunskySequence,
    apply,
    build_cmv,
    caratheodory_ratio,
    direct_amplitudes,
    find_mass_points,
    free_walk,
    halfline_walk,
    kmcg_matrix,
    line_walk,
    moment_coeff,
    moments,
    recurrence_residual,
    walk_measure,
)
from qrw.coins import amplitude_index  # noqa: E402
from qrw.kmcg import integrate  # noqa: E402
from qrw.recurrence import QuantumState, classify_state, transient_subspace  # noqa: E402
from qrw.spectral import weak_limit  # noqa: E402

S2 = np.sqrt(2)
SEED = 20240611


def c(m):
    return moment_coeff("c", m)


def d(m):
    return moment_coeff("d", m)


def run_criterion(number, budget, fn):
    """Time ``fn`` (returning ``(ok, detail)``), print the verdict line, return it."""
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    in_time = elapsed < budget
    verdict = "PASS" if ok and in_time else "FAIL"
    timing = f"{elapsed:.2f}s / budget {budget:g}s" + ("" if in_time else " (over budget)")
    line = f"criterion {number}: {verdict}  [{timing}]  {detail}"
    return verdict == "PASS", line


def check(number, budget, fn, capsys):
    ok, line = run_criterion(number, budget, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


# ---------------------------------------------------------------- 1

def criterion_1():
    walk = free_walk("half-line")
    ns = list(range(-10, 11))
    K = kmcg_matrix(walk, range(10), range(10), ns)

    # the free half-line walk is a shift along ... 3 -> 1 -> 0 -> 2 -> 4 ...
    def position(k):
        site, spin = divmod(k, 2)
        return site if spin == 0 else -site - 1

    err = 0.0
    for a, n in enumerate(ns):
        ref = np.array([[1.0 if position(k) == position(j) + n else 0.0 for k in range(10)]
                        for j in range(10)])
        err = max(err, float(np.abs(K[a] - ref).max()))
    return err <= 1e-12, f"max |KMcG - shift| = {err:.2e} over j,k <= 9, |n| <= 10 (tol 1e-12)"


# ---------------------------------------------------------------- 2

def hadamard_half_table(n):
    m, r = divmod(n, 4)
    uu = {0: c(m) / 2, 1: c(m) / S2, 2: c(m) / 2, 3: 0}[r]
    dd = {0: c(m) / 2, 1: c(m) / S2, 2: c(m) / 2, 3: -(c(m) + c(m + 1)) / S2}[r]
    ud = {0: -c(m) / 2, 1: 0, 2: c(m) / 2, 3: -c(m + 1) / S2}[r]
    du = {0: c(m) / 2, 1: 0, 2: -c(m) / 2, 3: -c(m) / S2}[r]
    if n == 1:
        dd, du = 0, -1 / S2
    return np.array([[uu, ud], [du, dd]])


def criterion_2():
    # n = 0 is the identity (mu_0 is the total mass); the table starts at n = 1
    ns = list(range(1, 25))
    K = kmcg_matrix(halfline_walk(HADAMARD), [0, 1], [0, 1], ns)
    err = max(float(np.abs(K[a] - hadamard_half_table(n)).max()) for a, n in enumerate(ns))
    return err <= 1e-8, f"max table error {err:.2e} for n <= 24 (tol 1e-8)"


# ---------------------------------------------------------------- 3

def hadamard_line_table(n):
    """Amplitudes keyed by (source, target) (site, spin) pairs relative to site k."""
    m, r = divmod(n, 4)
    even = n % 2 == 0
    same = c(m) / 2 if even else 0.0
    updown = {0: -c(m) / 2, 2: c(m) / 2}.get(r, 0.0)
    right_up = c(m) / S2 if r == 3 else 0.0
    if n == 1:
        right_up = 1 / S2
    cross = c(m) / S2 if r == 1 else 0.0
    return {
        ((0, 0), (0, 0)): same, ((0, 1), (0, 1)): same,
        ((0, 0), (0, 1)): updown, ((0, 1), (0, 0)): -updown,
        ((0, 0), (1, 0)): right_up, ((0, 1), (-1, 1)): -right_up,
        ((0, 0), (-1, 1)): cross, ((0, 1), (1, 0)): cross,
    }


def criterion_3():
    walk = line_walk(HADAMARD)
    measure = walk_measure(walk)
    anti = np.array([[0, 1], [1, 0]])
    worst = {}
    for method, tol in (("series", 1e-12), ("quadrature", 1e-8)):
        mu = moments(measure, 27, method=method)
        err = float(np.abs(mu[0] - np.eye(2)).max())  # total mass
        for m in range(7):
            err = max(err,
                      np.abs(mu[4 * m] - c(m) / 2 * np.eye(2)).max() if m else 0.0,
                      np.abs(mu[4 * m + 2] - c(m) / 2 * np.eye(2)).max(),
                      np.abs(mu[4 * m + 1] - c(m) / S2 * anti).max(),
                      np.abs(mu[4 * m + 3]).max())
        worst[method] = (float(err), tol)
    ns = list(range(1, 25))
    table_err = 0.0
    for k in (0, 3, -2):
        pairs = list(hadamard_line_table(1))
        idx = sorted({amplitude_index("line", k + ds, sp) for p in pairs for ds, sp in p})
        K = kmcg_matrix(walk, idx, idx, ns)
        pos = {i: a for a, i in enumerate(idx)}
        for a, n in enumerate(ns):
            for ((ds, ss), (dt, st)), ref in hadamard_line_table(n).items():
                got = K[a, pos[amplitude_index("line", k + ds, ss)], pos[amplitude_index("line", k + dt, st)]]
                table_err = max(table_err, abs(got - ref))
    ok = all(e <= t for e, t in worst.values()) and table_err <= 1e-8
    detail = (f"moments series {worst['series'][0]:.1e} (tol 1e-12), quadrature "
              f"{worst['quadrature'][0]:.1e} (tol 1e-8); u^n table {table_err:.1e} for n <= 24")
    return ok, detail


# ---------------------------------------------------------------- 4

def criterion_4():
    walk = halfline_walk(HMOD)
    errs = {}
    for method in ("series", "quadrature"):
        mu = moments(walk.measure, 27, method=method)
        e = 0.0
        for m in range(7):
            refs = [d(m) / 2, 1j / S2, -d(m) / 2, -1j / S2]
            if m == 0:
                refs[0] = 1.0  # mu_0 is the total mass
            for r in range(4):
                e = max(e, abs(mu[4 * m + r] - refs[r]))
        errs[method] = e
    found = find_mass_points(CaratheodoryEvaluator.closed_form(walk.measure))
    mass_ok = (len(found) == 1 and abs(found[0].location - 1j) < 1e-6
               and abs(found[0].mass - 1 / S2) <= 1e-5)
    ok = max(errs.values()) <= 1e-8 and mass_ok
    mp = ", ".join(f"z={p.location:.6f} mass={p.mass:.8f}" for p in found) or "none"
    return ok, (f"moment errors series {errs['series']:.1e}, quadrature {errs['quadrature']:.1e} "
                f"(tol 1e-8); mass points: {mp}")


# ---------------------------------------------------------------- 5

def criterion_5():
    rng = np.random.default_rng(SEED)
    coins = [HADAMARD, HMOD] + [random_coin(rng) for _ in range(10)]
    ns = list(range(31))
    idx = list(range(10))
    worst = 0.0
    for coin in coins:
        for walk in (halfline_walk(coin), line_walk(coin)):
            K = kmcg_matrix(walk, idx, idx, ns)
            D = direct_amplitudes(walk, idx, 30, steps=ns)
            for a, n in enumerate(ns):
                for j in idx:
                    for k in idx:
                        worst = max(worst, abs(K[a, j, k] - D.get(j, k, n)))
    return worst <= 1e-8, f"max |KMcG - direct| = {worst:.2e} over 12 coins x 2 lattices (tol 1e-8)"


# ---------------------------------------------------------------- 6

def criterion_6():
    walk = halfline_walk(HMOD)
    res = weak_limit(walk)
    P = res.projector(10)
    ref = np.array([[1j ** ((p + 1) // 2 - (q + 1) // 2) * (S2 - 1) ** ((p + 1) // 2 + (q + 1) // 2) / S2
                     for q in range(10)] for p in range(10)])
    closed_err = float(np.abs(P - ref).max())
    # direct oracle: dense powers applied to the first five basis rows
    U = dense_walk_matrix(lambda i: HMOD, "half-line", 0, 410)
    V = np.eye(U.shape[0], dtype=complex)[:5]
    dev = {}
    for n in range(1, 401):
        V = V @ U
        if n in (100, 400):
            dev[n] = np.abs(1j ** (-n) * V[:, :5] - P[:5, :5])
    ok = (res.kind == "projector" and closed_err <= 1e-10
          and dev[400].max() < 0.05 and np.all(dev[400] < dev[100]))
    return ok, (f"closed form {closed_err:.1e} (tol 1e-10); direct deviation n=100 {dev[100].max():.2e}, "
                f"n=400 {dev[400].max():.2e}, decreasing for all j,k <= 4: {bool(np.all(dev[400] < dev[100]))}")


# ---------------------------------------------------------------- 7

def criterion_7():
    horizon = 512
    mags = {}
    kinds = {}
    for name, walk in (("line", line_walk(HADAMARD)), ("half-line", halfline_walk(HADAMARD))):
        mu = moments(walk_measure(walk), horizon, method="series")
        mags[name] = float(np.abs(mu[horizon]).max())
        kinds[name] = weak_limit(walk, horizon).kind
    ok = all(v < 1e-2 for v in mags.values()) and all(k == "zero-weak-limit" for k in kinds.values())
    detail = (f"|mu_512| line {mags['line']:.4f}, half-line {mags['half-line']:.4f} (need < 1e-2; "
              f"mu_4m = c_m/2 and c_128/2 = {c(128) / 2:.4f}, so 1e-2 is first reached near n = 3200); "
              f"analyzer: {kinds['line']}, {kinds['half-line']}")
    return ok, detail


# ---------------------------------------------------------------- 8

def projector(rows):
    q, _ = np.linalg.qr(np.asarray(rows, dtype=complex).T)
    return q @ q.conj().T


def span_error(T, rows):
    """Distance between the span of ``T.basis`` and the span of ``rows``."""
    return float(np.abs(projector(T.basis) - projector(rows)).max())


def criterion_8():
    errs = []
    had, hm, line = halfline_walk(HADAMARD), halfline_walk(HMOD), line_walk(HADAMARD)
    ok = not classify_state(QuantumState(had, {0: 1})).transient
    T = transient_subspace(had, 4)
    ok &= T.dimension == 2
    errs.append(span_error(T, [[0, 1, -1, 0], [1, 0, 0, 1]]))
    T = transient_subspace(hm, 2)
    ok &= T.dimension == 1
    errs.append(span_error(T, [[1, 1j * (1 + S2)]]))
    T = transient_subspace(hm, 4)
    q = 1j * (S2 - 1)
    ok &= T.dimension == 3
    errs.append(span_error(T, null_space(np.array([[1, q, q, q * q]])).T))
    for k in (-3, 0, 5):
        idx = [amplitude_index("line", s, sp) for s in (k, k + 1) for sp in ("up", "down")]
        ok &= transient_subspace(line, indices=idx).dimension == 0
        idx = [amplitude_index("line", s, sp) for s in range(k, k + 4) for sp in ("up", "down")]
        T = transient_subspace(line, indices=idx)
        for entries in ([(k, "down"), (k + 2, "down")], [(k + 1, "up"), (k + 3, "up")]):
            v = np.zeros(len(idx), dtype=complex)
            for site, spin in entries:
                v[idx.index(amplitude_index("line", site, spin))] = 1
            errs.append(T.residual(v))
    # the folded window of the first six indices holds exactly the displayed pair (k = -2)
    T = transient_subspace(line, 6)
    rows = []
    for entries in ([(-2, "down"), (0, "down")], [(-1, "up"), (1, "up")]):
        v = np.zeros(6, dtype=complex)
        for site, spin in entries:
            v[amplitude_index("line", site, spin)] = 1
        rows.append(v)
    ok &= T.dimension == 2
    errs.append(span_error(T, rows))
    worst = max(errs)
    return bool(ok) and worst <= 1e-9, f"all dimensions and verdicts as stated; max basis residual {worst:.1e} (tol 1e-9)"


# ---------------------------------------------------------------- 9

def criterion_9():
    rng = np.random.default_rng(SEED)
    notes = []

    def draw(n, scale=0.5):
        r = scale * np.sqrt(rng.uniform(0, 1, n))
        return r * np.exp(2j * np.pi * rng.uniform(0, 1, n))

    op = build_cmv(VerblunskySequence.from_list(list(draw(60)), default=0.3 - 0.2j))
    start = draw(6)
    psi = StateVector("semi-infinite", 0, start / np.linalg.norm(start))
    for _ in range(1000):
        psi = apply(op, psi)
    drift = abs(psi.norm - 1)
    notes.append(f"norm drift {drift:.1e}")

    res = 0.0
    for _ in range(50):
        seq = VerblunskySequence.from_list(list(draw(45)))
        z = np.exp(1j * rng.uniform(-np.pi, np.pi))
        res = max(res, recurrence_residual(build_cmv(seq), seq, z, 40))
    notes.append(f"recurrence residual {res:.1e}")

    norm_err = 0.0
    coins = [random_coin(rng) for _ in range(20)]
    for coin in coins:
        for walk in (halfline_walk(coin), line_walk(coin)):
            total = integrate(walk_measure(walk), lambda z: np.ones_like(z))
            norm_err = max(norm_err, float(np.abs(total - (np.eye(2) if walk.lattice == "line" else 1)).max()))
    notes.append(f"normalization {norm_err:.1e}")

    ratio_err = 0.0
    for b in range(10):
        walk = halfline_walk(coins[b])
        z = 0.99 * np.sqrt(rng.uniform(0, 1, 10)) * np.exp(2j * np.pi * rng.uniform(0, 1, 10))
        ratio_err = max(ratio_err, float(np.abs(caratheodory_ratio(walk.verblunsky, z)
                                                - walk.measure.caratheodory(z)).max()))
    notes.append(f"ratio vs closed form {ratio_err:.1e} at 100 points")
    ok = drift <= 1e-12 and res <= 1e-12 and norm_err <= 1e-8 and ratio_err <= 1e-10
    return ok, "; ".join(notes)


CRITERIA = [
    (1, 1, criterion_1), (2, 5, criterion_2), (3, 10, criterion_3), (4, 10, criterion_4),
    (5, 60, criterion_5), (6, 30, criterion_6), (7, 5, criterion_7), (8, 5, criterion_8),
    (9, 60, criterion_9),
]


def test_criterion_1_free_walk_shift(capsys):
    check(1, 1, criterion_1, capsys)


def test_criterion_2_hadamard_halfline_table(capsys):
    check(2, 5, criterion_2, capsys)


def test_criterion_3_hadamard_line_moments_and_amplitudes(capsys):
    check(3, 10, criterion_3, capsys)


def test_criterion_4_hmod_halfline_moments_and_mass(capsys):
    check(4, 10, criterion_4, capsys)


def test_criterion_5_oracle_equivalence(capsys):
    check(5, 60, criterion_5, capsys)


def test_criterion_6_asymptotic_projector(capsys):
    check(6, 30, criterion_6, capsys)


def test_criterion_7_weak_limit_zero(capsys):
    check(7, 5, criterion_7, capsys)


def test_criterion_8_recurrence(capsys):
    check(8, 5, criterion_8, capsys)


def test_criterion_9_structural_invariants(capsys):
    check(9, 60, criterion_9, capsys)


if __name__ == "__main__":
    results = [run_criterion(n, b, fn) for n, b, fn in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
