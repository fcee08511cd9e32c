"""Parameter sweeps over the concrete models, with CSV/JSON emission and a run manifest."""

from __future__ import annotations

import ast
import csv
import io
import itertools
import json
import math
import operator
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._version import __version__
from .models import (
    MacrospinParams,
    QubitQuenchParams,
    macrospin_protocol,
    qubit_pulse_protocol,
    qubit_quench_protocol,
)
from .perturbation import PerturbationInput, expansion_coefficients
from .splitting import QUANTITIES, WorkProtocol, average_split
from .tfim import DEFAULT_QUAD_NODES, TfimParams, infinitesimal_tfim, totals
from .trajectories import (
    DivergentQuantityError,
    build_table,
    cumulants,
    distribution,
    histogram,
)

THREADS_ENV = "QENTROPY_THREADS"
FORMATS = ("csv", "json")
CUMULANT_COLUMNS = tuple(f"{q}_kappa{n}" for q in QUANTITIES for n in range(1, 5))


class SpecError(ValueError):
    """Invalid sweep configuration; the message names the offending field."""


class SweepFailure(RuntimeError):
    """A grid point produced an unusable value."""


# --------------------------------------------------------------------- models


def _table_outputs(p: WorkProtocol, wanted: set[str]) -> dict[str, float]:
    out = average_split(p).as_dict()
    if wanted & set(CUMULANT_COLUMNS):
        table = build_table(p)
        for q in QUANTITIES:
            try:
                ks = cumulants(distribution(table, q), q).as_tuple()
            except DivergentQuantityError:
                ks = (math.inf,) * 4
            out.update({f"{q}_kappa{n}": k for n, k in enumerate(ks, 1)})
    return out


def _qubit_quench(params: dict, wanted: set[str], opts: dict) -> dict[str, float]:
    qp = QubitQuenchParams(params["omega"], params["theta"], params["beta"])
    p = qubit_quench_protocol(qp)
    out = _table_outputs(p, wanted) if wanted - {"s1", "f1", "f_tilde1"} else {}
    if wanted & {"s1", "f1", "f_tilde1"}:
        c = expansion_coefficients(PerturbationInput(p.H0, p.Htau - p.H0, p.beta))
        # index 1 is the excited level of H0
        out.update(s1=float(c.s[1]), f1=float(c.f[1]), f_tilde1=float(c.f_tilde[1]))
    return out


def _qubit_pulse(params: dict, wanted: set[str], opts: dict) -> dict[str, float]:
    p = qubit_pulse_protocol(params["omega"], params["hx"], params["tau"], params["beta"])
    return _table_outputs(p, wanted)


def _macrospin(params: dict, wanted: set[str], opts: dict) -> dict[str, float]:
    mp = MacrospinParams(int(params["d"]), params["hz"], params["hx"], params["tau"], params["beta"])
    return _table_outputs(macrospin_protocol(mp), wanted)


def _tfim(params: dict, wanted: set[str], opts: dict) -> dict[str, float]:
    size = params.get("size")
    tp = TfimParams(
        params["g0"],
        params["delta_g"],
        params["beta"],
        None if size is None else int(size),
        opts.get("quad_nodes", DEFAULT_QUAD_NODES),
    )
    out = totals(tp)
    if wanted & {"lambda_cl_inf", "lambda_qu_inf"}:
        out["lambda_cl_inf"], out["lambda_qu_inf"] = infinitesimal_tfim(tp)
    return out


def _as_complex_matrix(obj, name: str) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.ndim == 3 and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim == 2:
        return a.astype(complex)
    raise SpecError(f"fixed.matrices: {name} must be a real matrix or a matrix of [re, im] pairs")


def load_matrices(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """Read ``H0``, ``Htau`` and ``U`` from a ``.npz`` or JSON file."""
    path = Path(path)
    try:
        if path.suffix == ".npz":
            with np.load(path) as z:
                raw = {k: z[k] for k in ("H0", "Htau", "U")}
            return {k: np.asarray(v, dtype=complex) for k, v in raw.items()}
        raw = json.loads(path.read_text())
        return {k: _as_complex_matrix(raw[k], k) for k in ("H0", "Htau", "U")}
    except KeyError as e:
        raise SpecError(f"fixed.matrices: file {str(path)!r} lacks entry {e}") from None
    except OSError as e:
        raise SpecError(f"fixed.matrices: cannot read {str(path)!r}: {e}") from None


def _custom(params: dict, wanted: set[str], opts: dict) -> dict[str, float]:
    m = opts["_matrices"]
    return _table_outputs(WorkProtocol(m["H0"], m["Htau"], m["U"], params["beta"]), wanted)


@dataclass(frozen=True)
class ModelSpec:
    evaluate: Callable[[dict, set, dict], dict]
    required: tuple[str, ...]
    defaults: dict
    outputs: tuple[str, ...]
    default_outputs: tuple[str, ...] = QUANTITIES


MODELS: dict[str, ModelSpec] = {
    "qubit-quench": ModelSpec(
        _qubit_quench,
        ("theta", "beta"),
        {"omega": 1.0},
        QUANTITIES + CUMULANT_COLUMNS + ("s1", "f1", "f_tilde1"),
    ),
    "qubit-pulse": ModelSpec(
        _qubit_pulse, ("hx", "tau", "beta"), {"omega": 1.0}, QUANTITIES + CUMULANT_COLUMNS
    ),
    "tfim": ModelSpec(
        _tfim,
        ("g0", "delta_g", "beta"),
        {"size": None},
        QUANTITIES + ("lambda_cl_inf", "lambda_qu_inf"),
    ),
    "macrospin": ModelSpec(
        _macrospin,
        ("d", "beta"),
        {"hz": 1.0, "hx": 0.5, "tau": 2.0},
        QUANTITIES + CUMULANT_COLUMNS,
    ),
    "custom-matrix": ModelSpec(_custom, ("beta",), {}, QUANTITIES + CUMULANT_COLUMNS),
}


# ---------------------------------------------------------------- config + grid


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def compile_scaling(expr: str) -> Callable[[dict], float]:
    """Arithmetic expression over parameter names, e.g. ``beta * delta_g**2``."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as e:
        raise SpecError(f"scaling: cannot parse {expr!r}: {e.msg}") from None

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise SpecError(f"scaling: unknown parameter {node.id!r}")
            return float(env[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        raise SpecError(f"scaling: unsupported syntax in {expr!r}")

    return lambda env: ev(tree, env)


def expand_axis(name: str, axis) -> list[float]:
    """Explicit list, or ``{"start", "stop", "count", "spacing": "linear"|"log"}``."""
    if isinstance(axis, (list, tuple)):
        if not axis:
            raise SpecError(f"grid.{name}: empty list")
        return [float(x) for x in axis]
    if not isinstance(axis, dict):
        raise SpecError(f"grid.{name}: expected a list or a range object")
    missing = {"start", "stop", "count"} - axis.keys()
    if missing:
        raise SpecError(f"grid.{name}: missing {sorted(missing)}")
    count = axis["count"]
    if not isinstance(count, int) or count < 1:
        raise SpecError(f"grid.{name}.count: must be an integer >= 1, got {count!r}")
    spacing = axis.get("spacing", "linear")
    start, stop = float(axis["start"]), float(axis["stop"])
    if spacing == "linear":
        return np.linspace(start, stop, count).tolist()
    if spacing == "log":
        if start <= 0 or stop <= 0:
            raise SpecError(f"grid.{name}: log spacing needs positive bounds")
        return np.geomspace(start, stop, count).tolist()
    raise SpecError(f"grid.{name}.spacing: expected 'linear' or 'log', got {spacing!r}")


@dataclass
class SweepSpec:
    model: str
    grid: dict
    fixed: dict = field(default_factory=dict)
    outputs: list[str] | None = None
    format: str = "csv"
    scaling: str | None = None
    quad_nodes: int = DEFAULT_QUAD_NODES
    threads: int | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepSpec":
        if not isinstance(raw, dict):
            raise SpecError("config: top level must be an object")
        unknown = raw.keys() - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecError(f"config: unknown field(s) {sorted(unknown)}")
        if "model" not in raw:
            raise SpecError("model: required")
        if "grid" not in raw:
            raise SpecError("grid: required")
        spec = cls(**raw)
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.model not in MODELS:
            raise SpecError(f"model: unknown {self.model!r}; choose from {sorted(MODELS)}")
        m = MODELS[self.model]
        if not isinstance(self.grid, dict) or not self.grid:
            raise SpecError("grid: must map at least one parameter to values")
        for name, axis in self.grid.items():
            expand_axis(name, axis)
        overlap = self.grid.keys() & self.fixed.keys()
        if overlap:
            raise SpecError(f"fixed: parameter(s) {sorted(overlap)} also appear in grid")
        known = set(m.required) | set(m.defaults) | ({"matrices"} if self.model == "custom-matrix" else set())
        for name in list(self.grid) + list(self.fixed):
            if name not in known:
                raise SpecError(f"grid/fixed: parameter {name!r} not used by model {self.model!r}")
        have = set(self.grid) | set(self.fixed) | set(m.defaults)
        for name in m.required:
            if name not in have:
                raise SpecError(f"grid/fixed: model {self.model!r} needs parameter {name!r}")
        if self.model == "custom-matrix" and "matrices" not in self.fixed:
            raise SpecError("fixed.matrices: custom-matrix needs a path to H0/Htau/U")
        for q in self.resolved_outputs():
            if q not in m.outputs:
                raise SpecError(f"outputs: {q!r} not available for {self.model!r}; choose from {list(m.outputs)}")
        if self.format not in FORMATS:
            raise SpecError(f"format: expected one of {FORMATS}, got {self.format!r}")
        if self.scaling is not None:
            # dry run resolves every name against the available parameters
            compile_scaling(self.scaling)(dict.fromkeys(have | set(self.fixed), 1.0))
        if not isinstance(self.quad_nodes, int) or self.quad_nodes < 16:
            raise SpecError("quad_nodes: must be an integer >= 16")
        if self.threads is not None and (not isinstance(self.threads, int) or self.threads < 1):
            raise SpecError("threads: must be a positive integer")

    def resolved_outputs(self) -> list[str]:
        return list(self.outputs) if self.outputs else list(MODELS[self.model].default_outputs)

    def points(self) -> list[dict]:
        names = list(self.grid)
        axes = [expand_axis(n, self.grid[n]) for n in names]
        base = {**MODELS[self.model].defaults, **self.fixed}
        return [{**base, **dict(zip(names, combo))} for combo in itertools.product(*axes)]


def load_spec(path: str | os.PathLike) -> SweepSpec:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise SpecError(f"config: cannot read {str(path)!r}: {e}") from None
    except json.JSONDecodeError as e:
        raise SpecError(f"config: invalid JSON at line {e.lineno}: {e.msg}") from None
    return SweepSpec.from_dict(raw)


def resolve_threads(flag: int | None, config: int | None = None) -> int:
    """Command-line flag, then the environment variable, then the config file, then 1."""
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SpecError(f"{THREADS_ENV}: expected an integer, got {env!r}") from None
    return config or 1


# --------------------------------------------------------------------- output


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[list[float]]
    manifest: dict
    extras: dict = field(default_factory=dict)


def format_number(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_cell(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return format_number(v) if math.isinf(v) else v


def render(columns: list[str], rows: list[list], fmt: str) -> str:
    """CSV with 17 significant digits, or JSON records; infinities become the ``inf`` token."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        w.writerows([v if isinstance(v, str) else format_number(float(v)) for v in r] for r in rows)
        return buf.getvalue()
    records = [{c: _json_cell(v) for c, v in zip(columns, r)} for r in rows]
    return json.dumps({"columns": columns, "rows": records}, indent=1) + "\n"


def run_sweep(spec: SweepSpec, threads: int = 1, seed: int | None = None) -> SweepResult:
    """Evaluate every grid point; rows follow grid order whatever the worker count."""
    spec.validate()
    model = MODELS[spec.model]
    outputs = spec.resolved_outputs()
    wanted = set(outputs)
    opts = {"quad_nodes": spec.quad_nodes}
    if spec.model == "custom-matrix":
        opts["_matrices"] = load_matrices(spec.fixed["matrices"])
    scale = compile_scaling(spec.scaling) if spec.scaling else None
    points = spec.points()
    grid_names = list(spec.grid)

    def one(params):
        vals = model.evaluate(params, wanted, opts)
        s = scale(params) if scale else 1.0
        row = [float(params[n]) for n in grid_names] + [vals[q] / s for q in outputs]
        bad = [c for c, v in zip(grid_names + outputs, row) if math.isnan(v)]
        if bad:
            where = ", ".join(f"{n}={params[n]!r}" for n in grid_names)
            raise SweepFailure(f"NaN in {bad} at grid point ({where})")
        return row

    t0 = time.perf_counter()
    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, points))
    else:
        rows = [one(p) for p in points]
    manifest = build_manifest(asdict(spec), seed, time.perf_counter() - t0, threads)
    return SweepResult(grid_names + outputs, rows, manifest)


def build_manifest(config: dict, seed: int | None, wall_time: float, threads: int) -> dict:
    return {
        "config": config,
        "seed": seed,
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "threads": threads,
        "wall_time_s": wall_time,
    }


def write_output(text: str, manifest: dict, out: str | os.PathLike | None) -> None:
    """Write ``text`` to ``out`` (stdout when None) and the manifest next to it."""
    if out is None:
        import sys

        sys.stdout.write(text)
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    manifest_path = out.with_name(out.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=1, default=str) + "\n")


# -------------------------------------------------------------------- presets

FIG_BETA_OMEGA = {"start": 0.05, "stop": 12.0, "count": 80, "spacing": "log"}
MACROSPIN_DIMS = [10, 25, 50, 100, 150, 200, 300, 400]
MACROSPIN_BETAS = [0.5, 1.0, 1.5, 2.0, 2.5]
DISTRIBUTION_DIM = 200
DISTRIBUTION_BETAS = [1.0, 2.5]

PRESETS: dict[str, dict] = {
    "fig1": {
        "model": "qubit-quench",
        "grid": {"beta": FIG_BETA_OMEGA},
        "fixed": {"omega": 1.0, "theta": 1.1},
        "outputs": ["gamma_cl", "gamma_qu", "lambda_cl", "lambda_qu"],
    },
    "fig2": {
        "model": "qubit-pulse",
        "grid": {"tau": [0.4, 1.0], "beta": FIG_BETA_OMEGA},
        "fixed": {"omega": 1.0, "hx": 1.3},
        "outputs": ["sigma", "gamma_cl", "gamma_qu", "lambda_cl", "lambda_qu"],
    },
    "fig3": {
        "model": "qubit-quench",
        "grid": {"beta": {"start": 0.05, "stop": 200.0, "count": 120, "spacing": "log"}},
        "fixed": {"omega": 1.0, "theta": 0.1},
        "outputs": ["s1", "f_tilde1", "f1"],
    },
    "fig4": {
        "model": "tfim",
        "grid": {"beta": [4.0, 8.0, 16.0, 32.0], "g0": {"start": 0.5, "stop": 1.5, "count": 101}},
        "fixed": {"delta_g": 0.01},
        "outputs": ["lambda_qu", "lambda_cl", "gamma_qu", "gamma_cl"],
        "scaling": "beta * delta_g**2",
    },
    "fig5": {
        "model": "macrospin",
        "grid": {"beta": MACROSPIN_BETAS, "d": MACROSPIN_DIMS},
        "fixed": {"hz": 1.0, "hx": 0.5, "tau": 2.0},
        "outputs": [f"{q}_kappa{n}" for q in ("lambda_cl", "lambda_qu") for n in range(1, 5)],
    },
    "fig6": {
        "model": "macrospin",
        "grid": {"beta": MACROSPIN_BETAS, "d": MACROSPIN_DIMS},
        "fixed": {"hz": 1.0, "hx": 0.5, "tau": 2.0},
        "outputs": [f"{q}_kappa{n}" for q in ("gamma_cl", "gamma_qu") for n in range(1, 5)],
    },
}

PRESET_DISTRIBUTIONS = {"fig5": ("lambda_cl", "lambda_qu"), "fig6": ("gamma_cl", "gamma_qu")}


def macrospin_histograms(quantities, d: int = DISTRIBUTION_DIM, betas=DISTRIBUTION_BETAS,
                         hz: float = 1.0, hx: float = 0.5, tau: float = 2.0):
    """Rows ``[beta, bin_left, bin_right, probability]`` per quantity."""
    columns = ["quantity", "beta", "bin_left", "bin_right", "probability"]
    rows = []
    for beta in betas:
        table = build_table(macrospin_protocol(MacrospinParams(d, hz, hx, tau, beta)))
        for q in quantities:
            edges, probs = histogram(distribution(table, q))
            rows.extend([q, beta, lo, hi, pr] for lo, hi, pr in zip(edges[:-1], edges[1:], probs))
    return columns, rows


def preset_spec(name: str, fmt: str = "csv", quad_nodes: int = DEFAULT_QUAD_NODES) -> SweepSpec:
    if name not in PRESETS:
        raise SpecError(f"preset: unknown {name!r}; choose from {sorted(PRESETS)}")
    return SweepSpec.from_dict({**PRESETS[name], "format": fmt, "quad_nodes": quad_nodes})
