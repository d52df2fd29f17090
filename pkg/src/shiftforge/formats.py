"""Plain-text file formats: instances, rules, support lists, circuits and CSV.

Instance file (``key = value`` lines, ``#`` starts a comment)::

    dim = 2
    xi_plus = 0,2; 1,-2; 1,0; 1,2
    alpha = 1, 1
    delta = 1e-8

Points are separated by ``;`` and coordinates by ``,``; coordinates may be
exact rationals such as ``3/2``. Besides ``dim``, ``xi_plus`` and ``alpha``
any :class:`~shiftforge.config.SolverConfig` field may be overridden.

Rule file: a ``#`` header with the instance and summary numbers, then one
line per atom holding the point coordinates and the coefficient, all
written with 17 significant digits so that reading the file back gives
the identical floats.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .config import DEFAULT_CONFIG, SolverConfig
from .errors import ParseError, ShiftForgeError
from .freqset import FrequencySet, format_rational, from_xi_plus, to_rational
from .pqcsim import CircuitSpec, HermitianOp
from .shiftrule import ShiftRule
from .trigpoly import DerivativeTarget, _check_alpha

_CONFIG_FIELDS = {f.name: f.type for f in fields(SolverConfig)}
_INT_FIELDS = {"max_iterations", "initial_grid", "seed", "grid_oversample", "grid_offset",
               "newton_steps", "refine_candidates"}


@dataclass(frozen=True)
class Instance:
    freqs: FrequencySet
    alpha: tuple
    config: SolverConfig = DEFAULT_CONFIG

    @property
    def target(self) -> DerivativeTarget:
        return DerivativeTarget.build(self.freqs, self.alpha)

    def header_lines(self) -> list[str]:
        return [f"dim = {self.freqs.dim}",
                f"xi_plus = {format_points(self.freqs.xi_plus)}",
                f"alpha = {', '.join(str(a) for a in self.alpha)}"]


def format_points(points: Iterable) -> str:
    return "; ".join(",".join(format_rational(c) for c in p) for p in points)


def parse_points(text: str, dim: int | None = None) -> list[tuple]:
    """``"1,0; 0,1"`` -> list of rational tuples (empty string -> empty list)."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        coords = tuple(to_rational(c) for c in chunk.split(","))
        if dim is not None and len(coords) != dim:
            raise ParseError(f"point {chunk!r} has {len(coords)} coordinates, expected {dim}")
        out.append(coords)
    return out


def parse_alpha(text: str, dim: int) -> tuple[int, ...]:
    try:
        values = [int(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"malformed alpha {text!r}") from exc
    try:
        return _check_alpha(values, dim)
    except (ValueError, ShiftForgeError) as exc:
        raise ParseError(str(exc)) from exc


def _parse_kv(lines: Iterable[str], strip_hash: bool = False) -> dict:
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if strip_hash:
            line = line.lstrip("#").strip()
        else:
            line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw.rstrip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def build_instance(values: dict, base: SolverConfig = DEFAULT_CONFIG) -> Instance:
    """Validate a ``key -> string`` mapping into an :class:`Instance`."""
    unknown = set(values) - {"dim", "xi_plus", "alpha"} - set(_CONFIG_FIELDS)
    if unknown:
        raise ParseError(f"unknown keys: {', '.join(sorted(unknown))}")
    for key in ("xi_plus", "alpha"):
        if key not in values:
            raise ParseError(f"missing key {key!r}")
    points = parse_points(values["xi_plus"])
    if "dim" in values:
        try:
            dim = int(values["dim"])
        except ValueError as exc:
            raise ParseError(f"malformed dim {values['dim']!r}") from exc
    elif points:
        dim = len(points[0])
    else:
        raise ParseError("dim is required when xi_plus is empty")
    if dim < 1:
        raise ParseError("dim must be >= 1")
    try:
        freqs = from_xi_plus(dim, points)
    except ShiftForgeError as exc:
        raise ParseError(str(exc)) from exc
    alpha = parse_alpha(values["alpha"], dim)
    overrides = {}
    for key, text in values.items():
        if key in _CONFIG_FIELDS:
            try:
                overrides[key] = int(text) if key in _INT_FIELDS else (text if key == "pivot_rule" else float(text))
            except ValueError as exc:
                raise ParseError(f"malformed value for {key}: {text!r}") from exc
    try:
        config = base.with_(**overrides)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    return Instance(freqs, alpha, config)


def read_instance(path) -> Instance:
    return build_instance(_parse_kv(_read_lines(path)))


def write_instance(path, inst: Instance) -> None:
    Path(path).write_text("\n".join(inst.header_lines()) + "\n")


def _read_lines(path) -> list[str]:
    try:
        return Path(path).read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


def format_rule(rule: ShiftRule, inst: Instance | None = None, extra: dict | None = None) -> str:
    lines = ["# shiftforge rule"]
    if inst is not None:
        lines += [f"# {h}" for h in inst.header_lines()]
    else:
        lines.append(f"# dim = {rule.dim}")
    for key, value in (extra or {}).items():
        lines.append(f"# {key} = {value:.17g}" if isinstance(value, float) else f"# {key} = {value}")
    for p, u in zip(rule.points, rule.coeffs):
        lines.append(" ".join(f"{c:.17g}" for c in p) + f" {u:.17g}")
    return "\n".join(lines) + "\n"


def write_rule(path, rule: ShiftRule, inst: Instance | None = None, extra: dict | None = None) -> None:
    Path(path).write_text(format_rule(rule, inst, extra))


def read_rule(path) -> tuple[ShiftRule, Instance | None]:
    """Parse a rule file; the instance is returned when the header carries one."""
    lines = _read_lines(path)
    header = [ln for ln in lines if ln.strip().startswith("#") and "=" in ln]
    meta = _parse_kv(header, strip_hash=True)
    body = [ln.split("#", 1)[0].strip() for ln in lines]
    rows = []
    for ln in body:
        if not ln:
            continue
        try:
            rows.append([float(v) for v in ln.replace(",", " ").split()])
        except ValueError as exc:
            raise ParseError(f"malformed rule line {ln!r}") from exc
    if "dim" in meta:
        dim = int(meta["dim"])
    elif rows:
        dim = len(rows[0]) - 1
    else:
        raise ParseError("empty rule file without a dim header")
    if any(len(r) != dim + 1 for r in rows):
        raise ParseError(f"every rule line needs {dim} coordinates and one coefficient")
    arr = np.array(rows, dtype=float).reshape(-1, dim + 1)
    rule = ShiftRule(dim, arr[:, :dim], arr[:, dim])
    inst = None
    if "xi_plus" in meta and "alpha" in meta:
        inst = build_instance({k: meta[k] for k in ("dim", "xi_plus", "alpha") if k in meta})
    return rule, inst


def read_support(path, dim: int) -> np.ndarray:
    """One point per line, coordinates separated by spaces or commas."""
    pts = []
    for ln in _read_lines(path):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        coords = [to_rational(c) for c in ln.replace(",", " ").split()]
        if len(coords) != dim:
            raise ParseError(f"support point {ln!r} has {len(coords)} coordinates, expected {dim}")
        pts.append([float(c) for c in coords])
    if not pts:
        raise ParseError("support file lists no points")
    return np.array(pts)


def _matrix(raw, name: str) -> np.ndarray:
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name}: matrix entries must be [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ParseError(f"{name}: expected a square array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def read_circuit(path) -> CircuitSpec:
    """JSON circuit: ``rho``, ``observable``, ``layers: [{hamiltonian, unitary?}]``.

    Matrices are row-major lists of rows whose entries are ``[re, im]`` pairs.
    """
    try:
        data = json.loads("\n".join(_read_lines(path)))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})") from exc
    missing = {"rho", "observable", "layers"} - set(data)
    if missing:
        raise ParseError(f"circuit file lacks {', '.join(sorted(missing))}")
    try:
        layers = []
        for i, layer in enumerate(data["layers"]):
            h = HermitianOp(_matrix(layer["hamiltonian"], f"layers[{i}].hamiltonian"))
            v = layer.get("unitary")
            layers.append((h, None if v is None else _matrix(v, f"layers[{i}].unitary")))
        return CircuitSpec(tuple(layers), _matrix(data["rho"], "rho"),
                           HermitianOp(_matrix(data["observable"], "observable")))
    except (KeyError, ValueError, ShiftForgeError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid circuit: {exc}") from exc


def write_circuit(path, spec: CircuitSpec) -> None:
    def enc(m):
        m = np.asarray(m, dtype=complex)
        return [[[float(z.real), float(z.imag)] for z in row] for row in m]
    data = {
        "rho": enc(spec.rho0),
        "observable": enc(spec.observable.entries),
        "layers": [{"hamiltonian": enc(h.entries), **({} if v is None else {"unitary": enc(v)})}
                   for h, v in spec.layers],
    }
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
