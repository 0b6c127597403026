"""File formats, atomic writes, result cache, and run manifests.

All text formats print floating-point values with 17 significant digits
(``%.17g``), which round-trips IEEE doubles exactly.  Every writer goes
through an atomic replace (write to a temporary sibling, then rename), so
readers never observe a half-written file and interrupted runs never
corrupt a cache.
"""

from __future__ import annotations

import dataclasses
import datetime
import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .classical import AttractorSample
from .quantum import KrausSet
from .spectral import (
    DensityHistogram,
    ResonanceSpectrum,
    WeylComparison,
    WeylScalingFit,
)

__all__ = [
    "FLOAT_FMT",
    "fmt",
    "atomic_write_bytes",
    "atomic_write_text",
    "sha256_file",
    "write_csv",
    "read_csv",
    "write_pgm",
    "read_pgm",
    "write_json",
    "read_json",
    "write_attractor_csv",
    "write_spectrum_csv",
    "read_spectrum_csv",
    "write_histogram_csv",
    "write_scan_csv",
    "write_husimi_csv",
    "write_overlaps_csv",
    "write_kraus_csv",
    "write_superop_binary",
    "read_superop_binary",
    "fit_to_dict",
    "comparison_to_dict",
    "write_manifest",
    "SpectrumCache",
    "cache_from_env",
]

FLOAT_FMT = "%.17g"


def fmt(x: float) -> str:
    """Shortest exact decimal form of a double (17 significant digits)."""
    return FLOAT_FMT % float(x)


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> Path:
    """Write bytes to ``path`` atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode())


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# generic CSV / PGM / JSON
# ---------------------------------------------------------------------------


def write_csv(
    path: str | os.PathLike,
    columns: list[tuple[str, np.ndarray]],
    comments: list[str] | None = None,
) -> Path:
    """CSV with '#'-prefixed comment lines, a header row, %.17g floats."""
    names = [name for name, _ in columns]
    arrays = [np.asarray(arr) for _, arr in columns]
    length = arrays[0].size if arrays else 0
    for name, arr in zip(names, arrays):
        if arr.size != length:
            raise ValueError(f"column {name!r} length {arr.size} != {length}")
    lines = [f"# {c}" for c in (comments or [])]
    lines.append(",".join(names))
    for i in range(length):
        lines.append(
            ",".join(
                str(int(a[i])) if np.issubdtype(a.dtype, np.integer) else fmt(a[i])
                for a in arrays
            )
        )
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path: str | os.PathLike) -> tuple[list[str], dict[str, np.ndarray]]:
    """Read a CSV written by :func:`write_csv`: (comments, name -> float array)."""
    comments: list[str] = []
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if header is None:
        raise ValueError(f"no header row in {path}")
    data = np.asarray(rows, dtype=float) if rows else np.empty((0, len(header)))
    return comments, {name: data[:, i] for i, name in enumerate(header)}


def write_pgm(path: str | os.PathLike, values: np.ndarray, flip_rows: bool = True) -> Path:
    """8-bit binary PGM (P5), max-normalized.

    ``values`` is a real non-negative 2D field indexed ``[p_row, q_col]``;
    with ``flip_rows`` (default) the image is written with momentum
    increasing upward, the usual phase-space portrait orientation.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("PGM export needs a 2D array")
    if v.size == 0:
        raise ValueError("PGM export needs a non-empty array")
    vmax = float(v.max())
    scaled = np.zeros_like(v) if vmax <= 0 else np.clip(v / vmax, 0.0, 1.0)
    img = np.round(scaled * 255).astype(np.uint8)
    if flip_rows:
        img = img[::-1]
    h, w = img.shape
    header = f"P5\n{w} {h}\n255\n".encode()
    return atomic_write_bytes(path, header + img.tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a binary P5 PGM written by :func:`write_pgm` (rows as stored)."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path} is not a binary PGM")
    # header: magic, width, height, maxval, then a single whitespace byte
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError("expected 8-bit PGM")
    img = np.frombuffer(data[pos : pos + w * h], dtype=np.uint8)
    return img.reshape(h, w)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path: str | os.PathLike, obj) -> Path:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True)
    return atomic_write_text(path, text + "\n")


def read_json(path: str | os.PathLike):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# domain-specific writers
# ---------------------------------------------------------------------------


def write_attractor_csv(path: str | os.PathLike, sample: AttractorSample) -> Path:
    """Two-column (q, p) CSV with generation parameters in the comment header."""
    comments = [
        f"dissipative baker map attractor sample",
        f"eps = {fmt(sample.epsilon)}",
        f"n_seeds = {sample.n_seeds}, transient = {sample.transient}, "
        f"keep = {sample.keep}, seed = {sample.seed}",
        f"points = {len(sample)}",
    ]
    return write_csv(
        path,
        [("q", sample.points[:, 0]), ("p", sample.points[:, 1])],
        comments=comments,
    )


def _spectrum_comments(spectrum: ResonanceSpectrum, solver: str | None) -> list[str]:
    comments = [
        f"resonance spectrum, kind = {spectrum.kind}, n = {spectrum.n}",
        f"eigenvalue count = {len(spectrum)} (complete = {spectrum.complete})",
    ]
    if spectrum.epsilon is not None:
        comments.insert(1, f"eps = {fmt(spectrum.epsilon)}")
    if solver:
        comments.append(f"solver = {solver}")
    return comments


def write_spectrum_csv(
    path: str | os.PathLike, spectrum: ResonanceSpectrum, solver: str | None = None
) -> Path:
    """Columns re, im, modulus, gamma — ordered as in the spectrum."""
    w = spectrum.eigenvalues
    return write_csv(
        path,
        [
            ("re", w.real),
            ("im", w.imag),
            ("modulus", spectrum.moduli),
            ("gamma", spectrum.gammas),
        ],
        comments=_spectrum_comments(spectrum, solver),
    )


def read_spectrum_csv(path: str | os.PathLike) -> np.ndarray:
    """Recover the complex eigenvalues from a spectrum CSV."""
    _, cols = read_csv(path)
    return cols["re"] + 1j * cols["im"]


def write_histogram_csv(path: str | os.PathLike, hist: DensityHistogram) -> Path:
    comments = [
        "decay-rate density, normalized to unit mass over the window",
        f"window = [{fmt(hist.window[0])}, {fmt(hist.window[1])}], "
        f"rates inside = {hist.n_inside}",
    ]
    return write_csv(
        path,
        [
            ("gamma_lo", hist.bin_edges[:-1]),
            ("gamma_hi", hist.bin_edges[1:]),
            ("density", hist.density),
        ],
        comments=comments,
    )


def write_scan_csv(path: str | os.PathLike, rows: list[dict]) -> Path:
    """Long-lived counts across dimensions/cutoffs, one row per (eps, n, cut)."""
    if not rows:
        raise ValueError("empty scan")
    eps_col = np.asarray([r.get("eps", float("nan")) for r in rows])
    return write_csv(
        path,
        [
            ("eps", eps_col),
            ("n", np.asarray([r["n"] for r in rows], dtype=int)),
            ("liouville_dim", np.asarray([r["n"] ** 2 for r in rows], dtype=int)),
            ("gamma_cut", np.asarray([r["gamma_cut"] for r in rows])),
            ("count", np.asarray([r["count"] for r in rows], dtype=int)),
            ("fraction", np.asarray([r["fraction"] for r in rows])),
        ],
        comments=[f"long-lived resonance counts, kind = {rows[0].get('kind', 'contractive')}"],
    )


def write_husimi_csv(path: str | os.PathLike, grid) -> Path:
    """Row-major (p outer, q inner) sample of a Husimi field: q, p, re, im, abs."""
    r = grid.resolution
    q = np.tile(grid.q_centers, r)
    p = np.repeat(grid.p_centers, r)
    v = grid.values.reshape(-1)
    return write_csv(
        path,
        [
            ("q", q),
            ("p", p),
            ("re", v.real),
            ("im", v.imag if np.iscomplexobj(v) else np.zeros_like(v.real)),
            ("abs", np.abs(v)),
        ],
        comments=[
            f"husimi field, kind = {grid.kind}, n = {grid.n}, resolution = {r}",
            "grid is cell-centered: q = (j+1/2)/R, p = (i+1/2)/R",
        ],
    )


def write_overlaps_csv(path: str | os.PathLike, records) -> Path:
    """Decay rate vs invariant-state overlap, one row per mode."""
    return write_csv(
        path,
        [
            ("gamma", np.asarray([r.gamma for r in records])),
            ("overlap", np.asarray([r.overlap for r in records])),
        ],
        comments=["mode overlap with the invariant state (unit Hilbert-Schmidt norms)"],
    )


def write_kraus_csv(path: str | os.PathLike, kraus: KrausSet) -> Path:
    """Sparse triples (mu, row, value) of every nonzero Kraus entry.

    Operator ``mu`` has a single nonzero diagonal: entry ``(row, row + mu)``
    holds ``value``, so the column index is implied by the triple.
    """
    mu_col: list[int] = []
    row_col: list[int] = []
    val_col: list[float] = []
    for mu, w in enumerate(kraus.weights):
        for k in range(w.size):
            mu_col.append(mu)
            row_col.append(k)
            val_col.append(float(w[k]))
    return write_csv(
        path,
        [
            ("mu", np.asarray(mu_col, dtype=int)),
            ("row", np.asarray(row_col, dtype=int)),
            ("value", np.asarray(val_col)),
        ],
        comments=[
            f"contractive Kraus family, n = {kraus.n}, eps = {fmt(kraus.epsilon)}",
            f"operators = {kraus.n_ops}; operator mu holds value at (row, row + mu)",
        ],
    )


def write_superop_binary(path: str | os.PathLike, matrix: np.ndarray) -> Path:
    """Raw dense superoperator: 8-byte little-endian side length, then
    row-major complex128 entries as little-endian (re, im) double pairs."""
    m = np.ascontiguousarray(np.asarray(matrix, dtype="<c16"))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"superoperator matrix must be square, got {m.shape}")
    header = struct.pack("<Q", m.shape[0])
    return atomic_write_bytes(path, header + m.tobytes())


def read_superop_binary(path: str | os.PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise ValueError(f"{path}: truncated header")
    (side,) = struct.unpack("<Q", data[:8])
    expected = 8 + 16 * side * side
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for side {side}, got {len(data)}")
    flat = np.frombuffer(data, dtype="<c16", offset=8)
    return flat.reshape(side, side).astype(complex)


def fit_to_dict(fit: WeylScalingFit) -> dict:
    return {
        "gamma_cut": fit.gamma_cut,
        "dims": fit.dims,
        "fractions": fit.fractions,
        "beta": fit.beta,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
    }


def comparison_to_dict(cmp: WeylComparison) -> dict:
    return dataclasses.asdict(cmp)


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------


def write_manifest(
    path: str | os.PathLike,
    command: str,
    parameters: dict,
    outputs: dict[str, str | os.PathLike],
    timings: dict[str, float] | None = None,
    tolerances: dict[str, float] | None = None,
    status: str = "ok",
    notes: list[str] | None = None,
) -> Path:
    """Reproducibility record for one CLI run.

    ``outputs`` maps logical names to file paths; each entry is recorded
    with its size and SHA-256 so downstream consumers can verify artifacts.
    """
    from . import __version__

    out_entries = {}
    base = Path(path).parent
    for name, p in sorted(outputs.items()):
        p = Path(p)
        try:
            rel = str(p.relative_to(base))
        except ValueError:
            rel = str(p)
        out_entries[name] = {
            "path": rel,
            "bytes": p.stat().st_size,
            "sha256": sha256_file(p),
        }
    doc = {
        "tool": "bakerlab",
        "version": __version__,
        "command": command,
        "status": status,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "parameters": _jsonable(parameters),
        "timings_seconds": _jsonable(timings or {}),
        "tolerances": _jsonable(tolerances or {}),
        "outputs": out_entries,
    }
    if notes:
        doc["notes"] = list(notes)
    return write_json(path, doc)


# ---------------------------------------------------------------------------
# spectrum cache
# ---------------------------------------------------------------------------


def _canonical_params(params: dict) -> str:
    """Stable text form of a parameter dict (floats at full precision)."""

    def norm(v):
        if isinstance(v, (bool, int, str)) or v is None:
            return v
        if isinstance(v, (float, np.floating)):
            return fmt(v)
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, (list, tuple)):
            return [norm(x) for x in v]
        if isinstance(v, dict):
            return {k: norm(v[k]) for k in sorted(v)}
        raise TypeError(f"unsupported cache-key value: {v!r}")

    return json.dumps(norm(params), sort_keys=True, separators=(",", ":"))


class SpectrumCache:
    """Content-addressed store of computed spectra (and other arrays).

    Keys are SHA-256 hashes of a canonical parameter record, so any change
    in dimension, noise, kind, solver, or tolerance produces a different
    entry.  Values are ``.npz`` files written atomically; a cache is safe
    to share between concurrent worker processes.
    """

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def key(self, params: dict) -> str:
        return hashlib.sha256(_canonical_params(params).encode()).hexdigest()

    def path_for(self, params: dict) -> Path:
        return self.root / f"{self.key(params)}.npz"

    def get(self, params: dict) -> dict[str, np.ndarray] | None:
        path = self.path_for(params)
        if not path.exists():
            return None
        try:
            with np.load(path, allow_pickle=False) as data:
                return {k: data[k].copy() for k in data.files if k != "params_json"}
        except (OSError, ValueError):
            return None  # treat unreadable entries as misses

    def put(self, params: dict, **arrays: np.ndarray) -> Path:
        path = self.path_for(params)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".npz.tmp")
        os.close(fd)
        try:
            with open(tmp, "wb") as fh:
                np.savez(
                    fh,
                    params_json=np.asarray(_canonical_params(params)),
                    **arrays,
                )
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
        return path


def cache_from_env(explicit: str | None = None) -> SpectrumCache | None:
    """Cache at ``explicit`` path, else at ``$BAKERLAB_CACHE``, else none."""
    root = explicit or os.environ.get("BAKERLAB_CACHE")
    return SpectrumCache(root) if root else None
