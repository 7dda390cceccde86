"""Reading and writing the file formats used by the command line tool.

Complex numbers are ``[re, im]`` pairs in JSON and ``re, im`` column pairs
in CSV. Formats:

``toeplitz`` (JSON)
    ``{"n": int, "lags": [[re, im], ...]}`` with ``n`` lags, ``lags[k] = R[0, k]``;
    the matrix must be PSD within the default tolerance.
``hermitian`` (JSON)
    ``{"n": int, "entries": [[re, im], ...]}`` with ``n * n`` entries in row-major order.
``spectrum`` (CSV)
    columns ``theta, mass``, one row per node of the uniform grid in order.
``plan`` (CSV)
    columns ``N, k, l, mass``: grid size and the nonzero cells of the plan.
``distance`` (JSON)
    the dump of :class:`~toeplitz_omt.transport.DistanceResult`, plan as
    ``[k, l, mass]`` triplets.
``signal`` (CSV)
    columns ``t, re, im``.
``ar_spec`` / ``scene`` (JSON)
    the fields of :class:`~toeplitz_omt.signals.ArSpec` and
    :class:`~toeplitz_omt.signals.UlaScene`.
"""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import SchemaError, ToeplitzOMTError
from .signals import ArSpec, UlaScene
from .solvers.report import SolveReport
from .spectral import DiscreteSpectrum, FrequencyGrid, ToeplitzCov, TransportPlan, validate_psd
from .transport import DistanceResult

FORMATS = ("toeplitz", "hermitian", "spectrum", "plan", "distance", "signal", "ar_spec", "scene")


# --- helpers -----------------------------------------------------------------------


def _complex(v, path, field):
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise SchemaError(f"expected a [re, im] pair, got {v!r}", path, field=field)
    z = complex(v[0], v[1])
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise SchemaError("non-finite value", path, field=field)
    return z


def _pairs(z):
    return [[float(c.real), float(c.imag)] for c in np.asarray(z, dtype=complex).ravel()]


def _load_json(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", path, row=exc.lineno) from exc
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object", path)
    return data


def _dump_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def _key(data, key, path, kind=None):
    if key not in data:
        raise SchemaError("missing key", path, field=key)
    v = data[key]
    if kind is int and (not isinstance(v, int) or isinstance(v, bool)):
        raise SchemaError(f"expected an integer, got {v!r}", path, field=key)
    if kind is float and (not isinstance(v, (int, float)) or isinstance(v, bool)):
        raise SchemaError(f"expected a number, got {v!r}", path, field=key)
    if kind is list and not isinstance(v, list):
        raise SchemaError(f"expected a list, got {type(v).__name__}", path, field=key)
    return v


def _read_csv(path, columns, types):
    """Rows of a CSV file with the given header, converted column by column."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError("empty file", path, row=1)
    header = [h.strip() for h in rows[0]]
    if header != list(columns):
        raise SchemaError(f"header must be {','.join(columns)}, got {','.join(header)}", path, row=1)
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(columns):
            raise SchemaError(f"expected {len(columns)} fields, got {len(row)}", path, row=i)
        vals = []
        for col, typ, cell in zip(columns, types, row):
            try:
                v = typ(cell.strip())
            except ValueError:
                raise SchemaError(f"cannot parse {cell!r}", path, row=i, field=col) from None
            if isinstance(v, float) and not math.isfinite(v):
                raise SchemaError("non-finite value", path, row=i, field=col)
            vals.append(v)
        out.append((i, vals))
    return out


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


# --- per format ------------------------------------------------------------------------


def read_toeplitz(path) -> ToeplitzCov:
    data = _load_json(path)
    n = _key(data, "n", path, int)
    lags = _key(data, "lags", path, list)
    if len(lags) != n:
        raise SchemaError(f"n = {n} but {len(lags)} lags given", path, field="lags")
    z = [_complex(v, path, f"lags[{k}]") for k, v in enumerate(lags)]
    try:
        R = ToeplitzCov(np.array(z))
    except ToeplitzOMTError as exc:
        raise SchemaError(str(exc), path, field="lags") from exc
    check = validate_psd(R)
    if not check.is_psd:
        raise SchemaError(f"matrix is not PSD (smallest eigenvalue {check.min_eigenvalue:.3g})",
                          path, field="lags")
    return R


def write_toeplitz(path, R: ToeplitzCov):
    _dump_json(path, {"n": R.n, "lags": _pairs(R.lags)})


def read_hermitian(path) -> np.ndarray:
    data = _load_json(path)
    n = _key(data, "n", path, int)
    entries = _key(data, "entries", path, list)
    if len(entries) != n * n:
        raise SchemaError(f"n = {n} needs {n * n} entries, got {len(entries)}", path, field="entries")
    H = np.array([_complex(v, path, f"entries[{k}]") for k, v in enumerate(entries)]).reshape(n, n)
    if np.abs(H - H.conj().T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(H).max(initial=0.0)):
        raise SchemaError("matrix is not Hermitian", path, field="entries")
    return H


def write_hermitian(path, H):
    H = np.asarray(H, dtype=complex)
    _dump_json(path, {"n": H.shape[0], "entries": _pairs(H)})


def read_spectrum(path) -> DiscreteSpectrum:
    rows = _read_csv(path, ("theta", "mass"), (float, float))
    if not rows:
        raise SchemaError("no data rows", path, row=2)
    grid = FrequencyGrid(len(rows))
    masses = []
    for (i, (theta, mass)), node in zip(rows, grid.nodes):
        if abs(theta - node) > 1e-9:
            raise SchemaError(f"theta {theta} is not grid node {node} of N={grid.N}", path, row=i,
                              field="theta")
        if mass < 0:
            raise SchemaError("negative mass", path, row=i, field="mass")
        masses.append(mass)
    return DiscreteSpectrum(grid, masses)


def write_spectrum(path, spec: DiscreteSpectrum):
    _write_csv(path, ("theta", "mass"), zip(map(float, spec.grid.nodes), map(float, spec.masses)))


def read_plan(path) -> TransportPlan:
    rows = _read_csv(path, ("N", "k", "l", "mass"), (int, int, int, float))
    if not rows:
        raise SchemaError("no data rows", path, row=2)
    N = rows[0][1][0]
    if N < 1:
        raise SchemaError("grid size must be positive", path, row=rows[0][0], field="N")
    M = np.zeros((N, N))
    for i, (n_i, k, l, mass) in rows:
        if n_i != N:
            raise SchemaError(f"grid size {n_i} differs from {N}", path, row=i, field="N")
        for name, v in (("k", k), ("l", l)):
            if not 0 <= v < N:
                raise SchemaError(f"index {v} outside 0..{N - 1}", path, row=i, field=name)
        if mass < 0:
            raise SchemaError("negative mass", path, row=i, field="mass")
        M[k, l] += mass
    return TransportPlan(FrequencyGrid(N), M)


def write_plan(path, plan: TransportPlan):
    k, l = np.nonzero(plan.mass)
    N = plan.grid.N
    _write_csv(path, ("N", "k", "l", "mass"),
               ((N, int(a), int(b), float(plan.mass[a, b])) for a, b in zip(k, l)))


def read_distance(path) -> DistanceResult:
    data = _load_json(path)
    N = _key(data, "grid_size", path, int)
    grid = FrequencyGrid(N)
    M = np.zeros((N, N))
    for j, t in enumerate(_key(data, "plan", path, list)):
        field = f"plan[{j}]"
        if not (isinstance(t, list) and len(t) == 3 and isinstance(t[0], int) and isinstance(t[1], int)):
            raise SchemaError(f"expected [k, l, mass], got {t!r}", path, field=field)
        if not (0 <= t[0] < N and 0 <= t[1] < N) or t[2] < 0:
            raise SchemaError(f"invalid triplet {t!r}", path, field=field)
        M[t[0], t[1]] += t[2]
    try:
        psi0 = DiscreteSpectrum(grid, _key(data, "psi0", path, list))
        psi1 = DiscreteSpectrum(grid, _key(data, "psi1", path, list))
        report = SolveReport(**_key(data, "report", path))
    except (ToeplitzOMTError, TypeError) as exc:
        raise SchemaError(str(exc), path) from exc
    kappa = data.get("kappa")
    return DistanceResult(float(_key(data, "value", path, float)), TransportPlan(grid, M), psi0, psi1,
                          report, kappa)


def write_distance(path, res: DistanceResult):
    _dump_json(path, res.to_dict())


def read_signal(path) -> np.ndarray:
    rows = _read_csv(path, ("t", "re", "im"), (int, float, float))
    out = np.empty(len(rows), dtype=complex)
    for j, (i, (t, re, im)) in enumerate(rows):
        if t != j:
            raise SchemaError(f"expected t = {j}, got {t}", path, row=i, field="t")
        out[j] = complex(re, im)
    return out


def write_signal(path, y):
    y = np.asarray(y, dtype=complex).ravel()
    _write_csv(path, ("t", "re", "im"), ((t, float(z.real), float(z.imag)) for t, z in enumerate(y)))


def _build(cls, data, path):
    try:
        return cls(**data)
    except TypeError as exc:
        raise SchemaError(str(exc), path) from exc
    except ToeplitzOMTError as exc:
        raise SchemaError(str(exc), path) from exc


def read_ar_spec(path) -> ArSpec:
    data = _load_json(path)
    for key in ("pole_radius", "freq_start", "freq_end"):
        _key(data, key, path, float)
    if "total_samples" in data:
        _key(data, "total_samples", path, int)
    return _build(ArSpec, data, path)


def write_ar_spec(path, spec: ArSpec):
    _dump_json(path, spec.to_dict())


def read_scene(path) -> UlaScene:
    data = _load_json(path)
    _key(data, "n_sensors", path, int)
    sources = _key(data, "sources", path, list)
    for j, s in enumerate(sources):
        if not (isinstance(s, list) and len(s) == 2):
            raise SchemaError(f"expected [angle, power], got {s!r}", path, field=f"sources[{j}]")
    data = dict(data, sources=tuple(tuple(s) for s in sources))
    return _build(UlaScene, data, path)


def write_scene(path, scene: UlaScene):
    _dump_json(path, scene.to_dict())


_READERS = {
    "toeplitz": read_toeplitz, "hermitian": read_hermitian, "spectrum": read_spectrum,
    "plan": read_plan, "distance": read_distance, "signal": read_signal,
    "ar_spec": read_ar_spec, "scene": read_scene,
}


def io_read(path, kind: str):
    """Read a file of the given format (one of :data:`FORMATS`)."""
    if kind not in _READERS:
        raise SchemaError(f"unknown format {kind!r}; expected one of {FORMATS}")
    try:
        return _READERS[kind](path)
    except UnicodeDecodeError as exc:
        raise SchemaError("file is not text", path) from exc


def io_write(path, obj, kind: str | None = None):
    """Write ``obj`` in its format; ``kind`` is needed only for plain arrays."""
    if isinstance(obj, ToeplitzCov):
        return write_toeplitz(path, obj)
    if isinstance(obj, DiscreteSpectrum):
        return write_spectrum(path, obj)
    if isinstance(obj, TransportPlan):
        return write_plan(path, obj)
    if isinstance(obj, DistanceResult):
        return write_distance(path, obj)
    if isinstance(obj, ArSpec):
        return write_ar_spec(path, obj)
    if isinstance(obj, UlaScene):
        return write_scene(path, obj)
    arr = np.asarray(obj)
    if kind == "hermitian" or (kind is None and arr.ndim == 2):
        return write_hermitian(path, arr)
    if kind == "signal" or (kind is None and arr.ndim == 1):
        return write_signal(path, arr)
    raise SchemaError(f"cannot write object of type {type(obj).__name__}")
