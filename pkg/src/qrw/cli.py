"""Command-line interface: ``qrw simulate | moments | measure | recurrence | asymptotics | compare``.

Reports are tables written as CSV or JSON.  Complex values become two CSV
columns ``<name>_re`` and ``<name>_im`` or ``[re, im]`` pairs in JSON.
"""
from __future__ import annotations

import csv
import io
import json
import os
import sys
import warnings
from dataclasses import dataclass, field
from typing import Optional

import click
import numpy as np

from .coins import (
    Coin,
    CoinValidationError,
    _PRESETS,
    amplitude_index,
    halfline_walk,
    index_state,
    line_walk,
    validate_coin,
)
from .kmcg import (
    QuadratureError,
    QuadratureSpec,
    UnsupportedWalkError,
    kmcg_matrix,
    moments as walk_moments,
    reachable_indices,
    state_amplitudes,
    walk_measure,
    direct_amplitudes,
)
from .opuc import ParameterDomainError
from .recurrence import QuantumState, classify_state, singularities, transient_subspace
from .spectral import (
    NumericMeasure,
    RatioConvergenceError,
    recover_weight,
    weak_limit,
)

__all__ = ["CoinSpec", "CoinSpecError", "Report", "parse_coin_spec", "load_state", "run_command", "main"]


# ---------------------------------------------------------------- coin specs

class CoinSpecError(ValueError):
    """Malformed coin document; ``location`` says where parsing failed."""

    def __init__(self, msg: str, location: str = ""):
        super().__init__(f"{msg} (at {location})" if location else msg)
        self.location = location


@dataclass
class CoinSpec:
    """A default coin plus optional per-site overrides."""

    default: Coin
    sites: dict = field(default_factory=dict)
    preset: Optional[str] = None

    @property
    def diagonal(self) -> bool:
        return self.default.diagonal and all(c.diagonal for c in self.sites.values())

    @property
    def constant(self) -> bool:
        return not self.sites

    def describe(self) -> str:
        if self.preset and not self.sites:
            return self.preset
        return json.dumps(_coin_doc(self))

    def walk(self, lattice: str):
        if lattice in ("half", "half-line"):
            if self.sites:
                return halfline_walk(self.sites, default=self.default)
            return halfline_walk(self.default)
        if self.sites:
            return line_walk(self.sites, default=self.default)
        return line_walk(self.default)


def _coin_doc(spec: CoinSpec):
    def mat(c):
        return [[[float(v.real), float(v.imag)] for v in row] for row in c.entries]
    doc = {"default": mat(spec.default)}
    if spec.sites:
        doc["sites"] = {str(k): mat(c) for k, c in sorted(spec.sites.items())}
    return doc


def _matrix_from(obj, where: str) -> np.ndarray:
    if isinstance(obj, str):
        key = obj.strip().lower()
        if key not in _PRESETS:
            raise CoinSpecError(f"unknown preset {obj!r}", where)
        return _PRESETS[key]
    if not (isinstance(obj, list) and len(obj) == 2):
        raise CoinSpecError("a coin matrix needs 2 rows", where)
    out = np.zeros((2, 2), dtype=complex)
    for i, row in enumerate(obj):
        if not (isinstance(row, list) and len(row) == 2):
            raise CoinSpecError("each row needs 2 entries", f"{where} row {i}")
        for j, entry in enumerate(row):
            loc = f"{where} entry ({i},{j})"
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                out[i, j] = entry
            elif (isinstance(entry, list) and len(entry) == 2
                  and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
                out[i, j] = complex(entry[0], entry[1])
            else:
                raise CoinSpecError("entries are numbers or [re, im] pairs", loc)
    return out


def _coin(obj, where: str, site: int = 0) -> Coin:
    m = _matrix_from(obj, where)
    try:
        return validate_coin(m, site)
    except CoinValidationError as exc:
        raise CoinValidationError(f"{exc} (at {where})") from None


def _loads(text: str, origin: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CoinSpecError(exc.msg, f"{origin} line {exc.lineno} column {exc.colno}") from None


def parse_coin_spec(text: str) -> CoinSpec:
    """Read a coin specification.

    Accepted forms: a preset name (``hadamard``, ``hmod``, ``identity``); a
    JSON 2x2 matrix whose entries are numbers or ``[re, im]`` pairs; the
    same with rows separated by ``;`` (``[[1,0],[0,0];[0,0],[1,0]]``); a JSON
    object ``{"default": <coin>, "sites": {"<site>": <coin>, ...}}``; or a
    path to a file holding any of these.

    Raises
    ------
    CoinSpecError
        For malformed documents, with the failing location.
    qrw.coins.CoinValidationError
        For non-unitary or trivial matrices.
    """
    origin = "coin spec"
    src = text.strip()
    if src and not src.startswith(("[", "{")) and os.path.isfile(src):
        origin = src
        with open(src, encoding="utf-8") as fh:
            src = fh.read().strip()
    if not src:
        raise CoinSpecError("empty coin specification", origin)
    if src.lower() in _PRESETS:
        return CoinSpec(_coin(src, origin), preset=src.lower())
    if src.startswith("[") and ";" in src:
        if not src.endswith("]"):
            raise CoinSpecError("row syntax must be wrapped in [ ]", origin)
        rows = src[1:-1].split(";")
        obj = [_loads("[" + r + "]", f"{origin} row {i}") for i, r in enumerate(rows)]
        return CoinSpec(_coin(obj, origin))
    if src.startswith(("[", "{")):
        obj = _loads(src, origin)
    else:
        raise CoinSpecError(f"unknown preset or unreadable file {src!r}", origin)
    if isinstance(obj, list):
        return CoinSpec(_coin(obj, origin))
    if "default" not in obj:
        raise CoinSpecError('per-site coin documents need a "default" coin', origin)
    default = _coin(obj["default"], f"{origin} default")
    sites = {}
    for key, val in (obj.get("sites") or {}).items():
        try:
            site = int(key)
        except ValueError:
            raise CoinSpecError(f"site key {key!r} is not an integer", f"{origin} sites") from None
        sites[site] = _coin(val, f"{origin} site {site}", site)
    return CoinSpec(default, sites)


# ---------------------------------------------------------------- states

RENORM_WARN = 1e-9


def load_state(path: str, lattice: str) -> dict:
    """Read ``[{"site": s, "spin": "up"|"down", "amp": [re, im]}, ...]``.

    Returns walk index -> amplitude, normalized; warns when the file was off
    from unit norm by more than 1e-9.
    """
    with open(path, encoding="utf-8") as fh:
        doc = _loads(fh.read(), path)
    if not isinstance(doc, list) or not doc:
        raise CoinSpecError("state file must be a non-empty JSON list", path)
    coeffs: dict = {}
    for i, item in enumerate(doc):
        where = f"{path} item {i}"
        try:
            site, spin, amp = int(item["site"]), item["spin"], item["amp"]
        except (KeyError, TypeError, ValueError):
            raise CoinSpecError("items need site, spin and amp", where) from None
        if spin not in ("up", "down"):
            raise CoinSpecError("spin must be 'up' or 'down'", where)
        if isinstance(amp, list) and len(amp) == 2:
            val = complex(amp[0], amp[1])
        elif isinstance(amp, (int, float)):
            val = complex(amp)
        else:
            raise CoinSpecError("amp must be [re, im]", where)
        k = amplitude_index(lattice, site, spin)
        coeffs[k] = coeffs.get(k, 0j) + val
    norm = float(np.sqrt(sum(abs(v) ** 2 for v in coeffs.values())))
    if norm == 0:
        raise CoinSpecError("state has zero norm", path)
    if abs(norm - 1) > RENORM_WARN:
        warnings.warn(f"state renormalized (norm was {norm:.12g})", stacklevel=2)
    return {k: v / norm for k, v in coeffs.items()}


# ---------------------------------------------------------------- reports

@dataclass
class Report:
    """A table plus metadata.

    ``types`` gives each column's kind: ``"int"``, ``"float"``, ``"complex"``
    or ``"str"``.  Missing values are ``None``.
    """

    kind: str
    columns: list
    types: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the columns")
        self.rows.append(tuple(values))

    def _header(self):
        return {"kind": self.kind, "columns": self.columns, "types": self.types,
                "metadata": self.metadata}

    def to_json(self) -> str:
        def enc(v, t):
            if v is None:
                return None
            if t == "complex":
                return [float(v.real), float(v.imag)]
            return {"int": int, "float": float, "str": str}[t](v)
        doc = self._header()
        doc["rows"] = [[enc(v, t) for v, t in zip(r, self.types)] for r in self.rows]
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        doc = json.loads(text)

        def dec(v, t):
            if v is None:
                return None
            if t == "complex":
                return complex(v[0], v[1])
            return {"int": int, "float": float, "str": str}[t](v)
        rows = [tuple(dec(v, t) for v, t in zip(r, doc["types"])) for r in doc["rows"]]
        return cls(doc["kind"], doc["columns"], doc["types"], rows, doc["metadata"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# qrw-report " + json.dumps(self._header(), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        head = []
        for c, t in zip(self.columns, self.types):
            head += [f"{c}_re", f"{c}_im"] if t == "complex" else [c]
        w.writerow(head)
        for r in self.rows:
            out = []
            for v, t in zip(r, self.types):
                if t == "complex":
                    out += ["", ""] if v is None else [repr(float(v.real)), repr(float(v.imag))]
                elif v is None:
                    out.append("")
                else:
                    out.append(repr(float(v)) if t == "float" else str(v))
            w.writerow(out)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Report":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# qrw-report "):
            raise ValueError("missing report header line")
        head = json.loads(lines[0][len("# qrw-report "):])
        reader = csv.reader(lines[2:])
        rows = []
        for raw in reader:
            vals, i = [], 0
            for t in head["types"]:
                if t == "complex":
                    re, im = raw[i], raw[i + 1]
                    vals.append(None if re == "" else complex(float(re), float(im)))
                    i += 2
                else:
                    s = raw[i]
                    i += 1
                    if s == "":
                        vals.append(None if t != "str" else "")
                    else:
                        vals.append({"int": int, "float": float, "str": str}[t](s))
            rows.append(tuple(vals))
        return cls(head["kind"], head["columns"], head["types"], rows, head["metadata"])

    def __eq__(self, other):
        if not isinstance(other, Report):
            return NotImplemented
        return (self.kind, self.columns, self.types, self.metadata, self.rows) == \
               (other.kind, other.columns, other.types, other.metadata, other.rows)


def _emit(report: Report, fmt: str, output: Optional[str]):
    text = report.to_json() if fmt == "json" else report.to_csv()
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


# ---------------------------------------------------------------- plotting

def _pyplot():
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:  # pragma: no cover - depends on the environment
        raise click.ClickException("--svg needs matplotlib (pip install qrw[plot])") from None
    # fixed hash salt so repeated runs write identical files
    plt.rcParams["svg.hashsalt"] = "qrw"
    return plt


def _svg_profile(path, sites, probs, title):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(sites, probs, width=0.8)
    ax.set_xlabel("site")
    ax.set_ylabel("probability")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _svg_weight(path, thetas, weights, masses, title):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(thetas, weights, lw=1)
    for t, m in masses:
        ax.axvline(t, color="C3", ls="--", lw=1)
        ax.annotate(f"mass {m:.4g}", (t, 0), color="C3", rotation=90, va="bottom")
    ax.set_xlabel("theta")
    ax.set_ylabel("weight")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------- commands

class CoinParam(click.ParamType):
    name = "coin"

    def convert(self, value, param, ctx):
        if isinstance(value, CoinSpec):
            return value
        try:
            return parse_coin_spec(value)
        except (CoinSpecError, CoinValidationError) as exc:
            self.fail(str(exc), param, ctx)


LATTICE = click.Choice(["half", "line"])
_COMPUTE_ERRORS = (ValueError, RuntimeError, ArithmeticError, QuadratureError,
                   UnsupportedWalkError, RatioConvergenceError, ParameterDomainError)


def _lattice_name(lattice: str) -> str:
    return "half-line" if lattice == "half" else "line"


def _common(f):
    f = click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
                     help="Write the report here instead of stdout.")(f)
    f = click.option("--out", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                     show_default=True, help="Report format.")(f)
    f = click.option("--coin", type=CoinParam(), required=True,
                     help="Preset, JSON matrix, per-site document or file.")(f)
    f = click.option("--lattice", type=LATTICE, required=True)(f)
    return f


def _meta(lattice, spec: CoinSpec, **extra):
    meta = {"lattice": _lattice_name(lattice), "coin": spec.describe()}
    meta.update(extra)
    return meta


def _guard(fn):
    """Turn computation failures into exit status 1 with a diagnostic."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except _COMPUTE_ERRORS as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc
    return wrapper


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="qrw")
def cli():
    """Coined quantum walks through CMV matrices and Karlin-McGregor formulas."""


@cli.command()
@_common
@click.option("--initial", type=click.Path(exists=True, dir_okay=False), default=None,
              help="State file (JSON); default is spin up at site 0.")
@click.option("--steps", type=click.IntRange(min=0), required=True)
@click.option("--method", type=click.Choice(["direct", "kmcg", "both"]), default="both",
              show_default=True)
@click.option("--all-steps", is_flag=True, help="Report every step 0..N, not just N.")
@click.option("--svg", type=click.Path(dir_okay=False), default=None,
              help="Plot the final site profile.")
@_guard
def simulate(lattice, coin, fmt, output, initial, steps, method, all_steps, svg):
    """Amplitudes of psi U^n on every reachable site."""
    lat = _lattice_name(lattice)
    walk = coin.walk(lat)
    state = load_state(initial, lat) if initial else {amplitude_index(lat, 0, "up"): 1 + 0j}
    targets = reachable_indices(walk, state, steps)
    ns = list(range(steps + 1)) if all_steps else [steps]
    methods = ["direct", "kmcg"] if method == "both" else [method]
    tables = {m: state_amplitudes(walk, state, targets, ns, m) for m in methods}
    cols = ["n", "site", "spin"] + methods + ["probability"]
    types = ["int", "int", "str"] + ["complex"] * len(methods) + ["float"]
    meta = _meta(lattice, coin, steps=steps, method=method,
                 quad_tol=QuadratureSpec().abs_tol if "kmcg" in methods else None)
    if method == "both":
        cols.append("abs_diff")
        types.append("float")
        meta["max_abs_diff"] = float(np.abs(tables["direct"] - tables["kmcg"]).max())
    report = Report("amplitudes", cols, types, metadata=meta)
    ref = tables[methods[0]]
    for a, n in enumerate(ns):
        for b, k in enumerate(targets):
            site, spin = index_state(lat, k)
            vals = [complex(tables[m][a, b]) for m in methods]
            row = [n, site, spin, *vals, float(abs(ref[a, b]) ** 2)]
            if method == "both":
                row.append(float(abs(tables["direct"][a, b] - tables["kmcg"][a, b])))
            report.add(*row)
    report.rows.sort(key=lambda r: (r[0], r[1], r[2] != "up"))
    _emit(report, fmt, output)
    if svg:
        final = [r for r in report.rows if r[0] == ns[-1]]
        sites = sorted({r[1] for r in final})
        probs = [sum(r[cols.index("probability")] for r in final if r[1] == s) for s in sites]
        _svg_profile(svg, sites, probs, f"{coin.describe()} on the {lat}, n = {steps}")


@cli.command()
@_common
@click.option("--n", "n_max", type=click.IntRange(min=0), required=True, help="Largest moment index.")
@click.option("--method", type=click.Choice(["quadrature", "series"]), default="quadrature",
              show_default=True)
@_guard
def moments(lattice, coin, fmt, output, n_max, method):
    """Moments mu_n = int z^n dmu, n = 0..N."""
    lat = _lattice_name(lattice)
    walk = coin.walk(lat)
    measure = walk_measure(walk)
    if isinstance(measure, NumericMeasure):
        method = "series"
    mu = walk_moments(measure, n_max, method=method)
    meta = _meta(lattice, coin, method=method)
    if mu.ndim == 1:
        report = Report("moments", ["n", "mu"], ["int", "complex"], metadata=meta)
        for n in range(n_max + 1):
            report.add(n, complex(mu[n]))
    else:
        report = Report("moments", ["n", "mu00", "mu01", "mu10", "mu11"],
                        ["int"] + ["complex"] * 4, metadata=meta)
        for n in range(n_max + 1):
            report.add(n, *(complex(v) for v in mu[n].ravel()))
    _emit(report, fmt, output)


@cli.command()
@_common
@click.option("--grid", type=click.IntRange(min=1), default=256, show_default=True,
              help="Number of equally spaced angles.")
@click.option("--svg", type=click.Path(dir_okay=False), default=None, help="Plot the weight.")
@_guard
def measure(lattice, coin, fmt, output, grid, svg):
    """Weight samples on the circle plus the point masses."""
    lat = _lattice_name(lattice)
    walk = coin.walk(lat)
    mu = walk_measure(walk)
    thetas = -np.pi + 2 * np.pi * (np.arange(grid) + 0.5) / grid
    if isinstance(mu, NumericMeasure):
        weights = np.array([recover_weight(mu.evaluator, t) for t in thetas])
        masses = [(m.location, m.mass) for m in mu.detected_masses]
        source = "ratio-limit"
    else:
        weights = mu.density(thetas)
        masses = list(mu.mass_points)
        source = "closed-form"
    meta = _meta(lattice, coin, grid=grid, source=source)
    if np.ndim(weights) == 1:
        report = Report("measure", ["kind", "theta", "weight", "z", "mass"],
                        ["str", "float", "float", "complex", "float"], metadata=meta)
        for t, w in zip(thetas, weights):
            report.add("weight", float(t), float(w), None, None)
        for z, m in masses:
            report.add("mass", float(np.angle(z)), None, complex(z), float(m))
        scalar = weights
    else:
        report = Report("measure", ["kind", "theta", "w00", "w01", "w10", "w11"],
                        ["str", "float"] + ["complex"] * 4, metadata=meta)
        for t, w in zip(thetas, weights):
            report.add("weight", float(t), *(complex(v) for v in w.ravel()))
        scalar = np.real(weights[:, 0, 0] + weights[:, 1, 1])
    _emit(report, fmt, output)
    if svg:
        _svg_weight(svg, thetas, scalar, [(float(np.angle(z)), m) for z, m in masses],
                    f"{coin.describe()} on the {lat}")


@cli.command()
@_common
@click.option("--state", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Classify this state instead of listing transient states.")
@click.option("--max-index", type=click.IntRange(min=1), default=4, show_default=True,
              help="Solve for transient states on the first K walk indices.")
@_guard
def recurrence(lattice, coin, fmt, output, state, max_index):
    """Recurrence verdict for a state, or a basis of transient states."""
    lat = _lattice_name(lattice)
    walk = coin.walk(lat)
    sing = singularities(walk)
    meta = _meta(lattice, coin, singularities=[
        {"z": [s.point.real, s.point.imag], "kind": s.kind} for s in sing.points])
    if state:
        verdict = classify_state(QuantumState(walk, load_state(state, lat)))
        meta["classification"] = verdict.classification
        report = Report("recurrence", ["singularity", "kind", "value"],
                        ["complex", "str", "complex"], metadata=meta)
        for s, v in verdict.certificate:
            report.add(s.point, s.kind, v)
    else:
        sub = transient_subspace(walk, max_index)
        meta["max_index"] = max_index
        meta["dimension"] = sub.dimension
        report = Report("recurrence", ["basis", "site", "spin", "coefficient"],
                        ["int", "int", "str", "complex"], metadata=meta)
        for b, vec in enumerate(sub.basis):
            for (site, spin), c in zip(sub.labels, vec):
                report.add(b, site, spin, complex(c))
    _emit(report, fmt, output)


@cli.command()
@_common
@click.option("--size", type=click.IntRange(min=1), default=6, show_default=True,
              help="Projector entries for walk indices below this.")
@click.option("--horizon", type=click.IntRange(min=8), default=512, show_default=True)
@_guard
def asymptotics(lattice, coin, fmt, output, size, horizon):
    """Weak limit of the walk: zero, or a rank-one projector."""
    lat = _lattice_name(lattice)
    res = weak_limit(coin.walk(lat), horizon=horizon)
    meta = _meta(lattice, coin, weak_limit=res.kind, diagnostics=res.diagnostics)
    report = Report("asymptotics", ["j", "k", "entry"], ["int", "int", "complex"], metadata=meta)
    if res.kind == "projector":
        meta["z0"] = [res.z0.real, res.z0.imag]
        meta["mu_infinity"] = res.mu_infinity
        P = res.projector(size)
        for j in range(size):
            for k in range(size):
                report.add(j, k, complex(P[j, k]))
    _emit(report, fmt, output)


@cli.command()
@_common
@click.option("--steps", type=click.IntRange(min=0), required=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--max-index", type=click.IntRange(min=1), default=10, show_default=True,
              help="Compare (U^n)_{j,k} for walk indices j, k below this.")
@_guard
def compare(lattice, coin, fmt, output, steps, tol, max_index):
    """Check KMcG amplitudes against direct evolution; exit 1 on mismatch."""
    lat = _lattice_name(lattice)
    walk = coin.walk(lat)
    idx = list(range(max_index))
    ns = list(range(steps + 1))
    km = kmcg_matrix(walk, idx, idx, ns)
    direct = direct_amplitudes(walk, idx, steps, steps=ns)
    report = Report("compare", ["n", "max_abs_diff"], ["int", "float"],
                    metadata=_meta(lattice, coin, tol=tol, max_index=max_index))
    worst = 0.0
    for a, n in enumerate(ns):
        d = max(abs(km[a, b, c] - direct.get(j, k, n))
                for b, j in enumerate(idx) for c, k in enumerate(idx))
        worst = max(worst, float(d))
        report.add(n, float(d))
    report.metadata["max_abs_diff"] = worst
    report.metadata["agree"] = worst <= tol
    _emit(report, fmt, output)
    if worst > tol:
        raise click.ClickException(f"KMcG and direct amplitudes differ by {worst:.3g} > {tol:g}")


def run_command(argv) -> int:
    """Run the CLI on ``argv`` and return the exit status instead of exiting."""
    try:
        cli.main(args=list(argv), prog_name="qrw", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    return 0


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":  # pragma: no cover
    main()
