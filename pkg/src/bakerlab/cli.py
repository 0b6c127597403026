"""Command-line interface.

Five subcommands cover the workflow end to end:

* ``attractor``    — sample the classical strange attractor, estimate its
                     box-counting dimension, export CSV/PGM/JSON.
* ``spectrum``     — resonance spectrum of one superoperator (dense or
                     iterative solver), with decay-rate histogram.
* ``weyl-scan``    — long-lived resonance counts across a range of
                     dimensions and cutoffs, with power-law fits.
* ``husimi``       — phase-space portraits of spectral modes, overlaps
                     with the invariant state, long-lived projector density.
* ``compare-weyl`` — fitted scaling exponents versus the classical
                     attractor-dimension prediction.

Every option can also be supplied through an INI config file
(``--config``): values are looked up in the ``[<command>]`` section, then
``[global]``, with explicit command-line flags taking precedence.  Each
run writes a ``manifest.json`` recording parameters, versions, timings,
and SHA-256 hashes of all artifacts.  Fatal problems print a single
machine-parseable line ``bakerlab: error [<code>]: <message>`` on stderr
and exit nonzero.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .classical import (
    attractor_dimension,
    attractor_histogram,
    box_counting_dimension,
    iterate_to_attractor,
)
from .quantum import (
    MATERIALIZE_MAX_DIM,
    MaterializationGuard,
    build_superoperator,
)
from .spectral import (
    ResonanceSpectrum,
    decay_rates,
    density_of_states,
    full_spectrum,
    leading_eigenpairs,
    weyl_law_comparison,
    weyl_scaling_fit,
)
from .phasespace import (
    husimi_of_operator,
    long_lived_projector_density,
    overlap_with_invariant,
)
from . import io as bio

__all__ = ["main"]


class CliError(Exception):
    """Validation or runtime failure with a machine-readable code."""

    def __init__(self, code: str, message: str, exit_code: int = 2):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def _fail(code: str, message: str, exit_code: int = 2) -> "CliError":
    return CliError(code, message, exit_code)


# ---------------------------------------------------------------------------
# option parsing and config-file merging
# ---------------------------------------------------------------------------


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> list[float]:
    return [float(tok) for tok in s.split(",") if tok.strip()]


def _ints(s: str) -> list[int]:
    """Comma list or inclusive range 'start:stop:step'."""
    s = s.strip()
    if ":" in s:
        parts = s.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"range must be start:stop[:step], got {s!r}")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step <= 0 or stop < start:
            raise ValueError(f"bad range {s!r}")
        return list(range(start, stop + 1, step))
    return [int(tok) for tok in s.split(",") if tok.strip()]


@dataclasses.dataclass(frozen=True)
class Opt:
    name: str  # --flag name; dest is name with '-' -> '_'
    parse: Callable[[str], object] | None  # None => boolean flag
    default: object
    help: str

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_COMMON: list[Opt] = [
    Opt("out", str, ".", "output directory (created if missing)"),
    Opt("cache", str, None, "cache directory (default: $BAKERLAB_CACHE if set)"),
]

_OPTIONS: dict[str, list[Opt]] = {
    "attractor": _COMMON
    + [
        Opt("eps", float, None, "contraction parameter in (0, 1); required"),
        Opt("n-seeds", int, 10_000, "number of random initial points"),
        Opt("transient", int, 50, "iterations discarded before recording"),
        Opt("keep", int, 10, "iterations recorded per seed"),
        Opt("seed", int, 0, "random seed for the initial ensemble"),
        Opt("grid", int, 512, "heatmap resolution for the PGM export"),
        Opt("scales", _floats, None, "box sides for the dimension fit (comma list)"),
        Opt("offsets", int, 8, "random grid offsets averaged per box scale"),
        Opt("offset-seed", int, 0, "random seed for the grid offsets"),
    ],
    "spectrum": _COMMON
    + [
        Opt("n", int, None, "Hilbert space dimension (even); required"),
        Opt("kind", str, "contractive", "map kind: contractive | noiseless | open"),
        Opt("eps", float, None, "noise strength in (0, 1]; required for contractive"),
        Opt(
            "solver",
            str,
            "auto",
            "auto | dense | dense-real | iterative (auto = dense-real)",
        ),
        Opt("k", int, 6, "eigenvalue count for the iterative solver"),
        Opt("tol", float, 0.0, "iterative solver tolerance (0 = machine precision)"),
        Opt("seed", int, 7, "start-vector seed for the iterative solver"),
        Opt("bins", int, 64, "decay-rate histogram bins"),
        Opt("gamma-max", float, 18.0, "upper edge of the histogram window"),
        Opt("force-materialize", None, False, "override the dense size guard"),
        Opt("export-superop", None, False, "also write the dense superoperator matrix"),
        Opt("export-kraus", None, False, "also write the Kraus family as CSV triples"),
    ],
    "weyl-scan": _COMMON
    + [
        Opt("dims", _ints, None, "dimensions, comma list or start:stop:step; required"),
        Opt("eps-list", _floats, None, "noise strengths (contractive kind); required"),
        Opt("kind", str, "contractive", "map kind: contractive | open"),
        Opt("gamma-cuts", _floats, [4.0, 8.0, 12.0, 16.0, 20.0], "decay-rate cutoffs"),
        Opt("solver", str, "dense-real", "dense | dense-real"),
        Opt("jobs", int, 1, "worker processes for independent spectra"),
        Opt("force-materialize", None, False, "override the dense size guard"),
    ],
    "husimi": _COMMON
    + [
        Opt("n", int, None, "Hilbert space dimension (even); required"),
        Opt("kind", str, "contractive", "map kind: contractive | noiseless | open"),
        Opt("eps", float, None, "noise strength in (0, 1]; required for contractive"),
        Opt("solver", str, "auto", "auto | dense | iterative (auto: dense up to the guard)"),
        Opt("k", int, 8, "eigenpair count for the iterative solver"),
        Opt("seed", int, 7, "start-vector seed for the iterative solver"),
        Opt("grid", int, 256, "phase-space grid resolution"),
        Opt("modes", _ints, [0], "mode indices to render (0 = leading/invariant)"),
        Opt("lambda-cut", float, None, "modulus cutoff for the projector density"),
        Opt("force-materialize", None, False, "override the dense size guard"),
    ],
    "compare-weyl": _COMMON
    + [
        Opt("fits", str, None, "fits.json produced by weyl-scan; required"),
        Opt("eps", float, None, "only compare entries at this noise strength"),
    ],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bakerlab",
        description="dissipative quantum baker map laboratory",
    )
    parser.add_argument("--version", action="version", version=f"bakerlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for cmd, opts in _OPTIONS.items():
        p = sub.add_parser(cmd, help=f"{cmd} command")
        p.add_argument("--config", default=None, help="INI config file")
        for o in opts:
            if o.parse is None:
                p.add_argument(
                    f"--{o.name}",
                    dest=o.dest,
                    action="store_const",
                    const="true",
                    default=None,
                    help=o.help,
                )
            else:
                p.add_argument(
                    f"--{o.name}", dest=o.dest, type=str, default=None, help=o.help
                )
    return parser


def _resolve_options(cmd: str, args: argparse.Namespace) -> dict:
    """Merge CLI flags, config file, and defaults (in that precedence)."""
    cfg = None
    if args.config:
        if not Path(args.config).exists():
            raise _fail("missing-file", f"config file not found: {args.config}")
        cfg = configparser.ConfigParser()
        try:
            cfg.read(args.config)
        except configparser.Error as exc:
            raise _fail("bad-config", f"cannot parse {args.config}: {exc}")
    resolved = {}
    for o in _OPTIONS[cmd]:
        raw = getattr(args, o.dest, None)
        if raw is None and cfg is not None:
            for section in (cmd, "global"):
                if cfg.has_option(section, o.name):
                    raw = cfg.get(section, o.name)
                    break
        if raw is None:
            resolved[o.dest] = o.default
            continue
        parse = o.parse if o.parse is not None else _bool
        try:
            resolved[o.dest] = parse(raw)
        except (ValueError, TypeError) as exc:
            raise _fail("bad-config", f"option --{o.name}: {exc}")
    return resolved


def _require(p: dict, key: str, cmd: str):
    if p.get(key) is None:
        raise _fail("invalid-argument", f"{cmd}: --{key.replace('_', '-')} is required")
    return p[key]


def _out_dir(p: dict) -> Path:
    out = Path(p["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _kind_eps(p: dict, cmd: str, kinds: tuple[str, ...]) -> tuple[str, float | None]:
    kind = p["kind"]
    if kind not in kinds:
        raise _fail("invalid-argument", f"{cmd}: unknown kind {kind!r}; choose from {kinds}")
    eps = p.get("eps")
    if kind == "contractive":
        if eps is None:
            raise _fail("invalid-argument", f"{cmd}: contractive kind requires --eps")
    else:
        eps = None
    return kind, eps


# ---------------------------------------------------------------------------
# cached spectra
# ---------------------------------------------------------------------------


def _dense_cache_params(n: int, kind: str, eps: float | None, solver: str) -> dict:
    return {
        "record": "spectrum",
        "schema": 1,
        "n": n,
        "kind": kind,
        "eps": eps,
        "solver": solver,
    }


def _dense_eigenvalues(
    n: int,
    kind: str,
    eps: float | None,
    solver: str,
    cache: bio.SpectrumCache | None,
    force: bool,
) -> tuple[np.ndarray, bool]:
    """Full spectrum eigenvalues, via cache when available.  Returns
    (eigenvalues, cache_hit)."""
    params = _dense_cache_params(n, kind, eps, solver)
    if cache is not None:
        hit = cache.get(params)
        if hit is not None and "eigenvalues" in hit:
            return hit["eigenvalues"], True
    superop = build_superoperator(n, kind=kind, eps=eps)
    spectrum = full_spectrum(superop, method=solver, force_materialize=force)
    if cache is not None:
        cache.put(params, eigenvalues=spectrum.eigenvalues)
    return spectrum.eigenvalues, False


def _guard_dense(n: int, solver: str, force: bool) -> None:
    if solver in ("dense", "dense-real") and n > MATERIALIZE_MAX_DIM and not force:
        raise MaterializationGuard(
            f"dense solve at n = {n} exceeds the n <= {MATERIALIZE_MAX_DIM} guard "
            f"(n^2 x n^2 matrix); pass --force-materialize to proceed anyway"
        )


# module-level so it can cross a process boundary
def _scan_task(task: dict) -> dict:
    n = task["n"]
    cache = bio.SpectrumCache(task["cache_root"]) if task["cache_root"] else None
    t0 = time.perf_counter()
    eigenvalues, hit = _dense_eigenvalues(
        n, task["kind"], task["eps"], task["solver"], cache, task["force"]
    )
    return {
        "n": n,
        "eps": task["eps"],
        "moduli": np.abs(eigenvalues),
        "cache_hit": hit,
        "seconds": time.perf_counter() - t0,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_attractor(p: dict) -> int:
    eps = _require(p, "eps", "attractor")
    if not 0.0 < eps < 1.0:
        raise _fail(
            "invalid-argument",
            f"attractor: eps must lie strictly inside (0, 1), got {eps}"
            + (" (the area-preserving limit has no attractor)" if eps == 1.0 else ""),
        )
    out = _out_dir(p)
    t0 = time.perf_counter()
    sample = iterate_to_attractor(
        eps,
        n_seeds=p["n_seeds"],
        transient=p["transient"],
        keep=p["keep"],
        seed=p["seed"],
    )
    t_sample = time.perf_counter() - t0
    t0 = time.perf_counter()
    scales = np.asarray(p["scales"]) if p["scales"] else None
    est = box_counting_dimension(
        sample, scales=scales, n_offsets=p["offsets"], offset_seed=p["offset_seed"]
    )
    t_fit = time.perf_counter() - t0
    closed = attractor_dimension(eps)

    csv_path = bio.write_attractor_csv(out / "attractor.csv", sample)
    pgm_path = bio.write_pgm(out / "attractor.pgm", attractor_histogram(sample, p["grid"]))
    dim_doc = {
        "eps": eps,
        "closed_form_dimension": closed,
        "estimate": {
            "dimension": est.dimension,
            "intercept": est.intercept,
            "r_squared": est.r_squared,
            "scales": est.scales,
            "mean_counts": est.counts,
            "n_offsets": est.n_offsets,
        },
        "abs_difference": abs(est.dimension - closed),
    }
    dim_path = bio.write_json(out / "dimension.json", dim_doc)
    manifest = bio.write_manifest(
        out / "manifest.json",
        "attractor",
        parameters={k: bio._jsonable(v) for k, v in p.items()},
        outputs={"attractor_csv": csv_path, "attractor_pgm": pgm_path, "dimension_json": dim_path},
        timings={"sample": t_sample, "dimension_fit": t_fit},
    )
    print(
        f"attractor: {len(sample)} points at eps={eps}; box dimension "
        f"{est.dimension:.4f} (closed form {closed:.4f}, r^2 {est.r_squared:.5f})"
    )
    print(f"wrote {csv_path}, {pgm_path}, {dim_path}, {manifest}")
    return 0


def cmd_spectrum(p: dict) -> int:
    n = _require(p, "n", "spectrum")
    kind, eps = _kind_eps(p, "spectrum", ("contractive", "noiseless", "open"))
    solver = p["solver"]
    if solver == "auto":
        solver = "dense-real"
    if solver not in ("dense", "dense-real", "iterative"):
        raise _fail("invalid-argument", f"spectrum: unknown solver {solver!r}")
    out = _out_dir(p)
    cache = bio.cache_from_env(p["cache"])
    force = p["force_materialize"]
    timings: dict[str, float] = {}
    notes: list[str] = []
    outputs: dict[str, Path] = {}

    t0 = time.perf_counter()
    if solver == "iterative":
        superop = build_superoperator(n, kind=kind, eps=eps)
        pairs = leading_eigenpairs(superop, k=p["k"], seed=p["seed"], tol=p["tol"])
        eigenvalues = np.asarray([pr.eigenvalue for pr in pairs])
        spectrum = ResonanceSpectrum.from_eigenvalues(eigenvalues, n, kind, eps)
        notes.append(f"iterative solver: leading {p['k']} of {n * n} eigenvalues")
        cache_hit = False
    else:
        _guard_dense(n, solver, force)
        eigenvalues, cache_hit = _dense_eigenvalues(n, kind, eps, solver, cache, force)
        spectrum = ResonanceSpectrum.from_eigenvalues(eigenvalues, n, kind, eps)
    timings["solve"] = time.perf_counter() - t0
    if cache_hit:
        notes.append("spectrum loaded from cache")

    outputs["spectrum_csv"] = bio.write_spectrum_csv(out / "spectrum.csv", spectrum, solver)
    if spectrum.complete:
        hist = density_of_states(spectrum, n_bins=p["bins"], window=(0.0, p["gamma_max"]))
        outputs["histogram_csv"] = bio.write_histogram_csv(out / "histogram.csv", hist)
    else:
        notes.append("histogram skipped: partial spectrum")

    if p["export_kraus"]:
        if kind != "contractive":
            raise _fail("invalid-argument", "spectrum: --export-kraus needs the contractive kind")
        from .quantum import build_kraus

        outputs["kraus_csv"] = bio.write_kraus_csv(out / "kraus.csv", build_kraus(n, eps))
    if p["export_superop"]:
        superop = build_superoperator(n, kind=kind, eps=eps)
        if n > MATERIALIZE_MAX_DIM and not force:
            raise MaterializationGuard(
                f"--export-superop at n = {n} exceeds the guard; "
                "pass --force-materialize to proceed"
            )
        outputs["superop_bin"] = bio.write_superop_binary(
            out / "superop.bin", superop.matrix(force=force)
        )

    outputs["manifest"] = out / "manifest.json"
    bio.write_manifest(
        outputs.pop("manifest"),
        "spectrum",
        parameters={**{k: bio._jsonable(v) for k, v in p.items()}, "resolved_solver": solver},
        outputs=outputs,
        timings=timings,
        tolerances={"iterative_tol": p["tol"]} if solver == "iterative" else {},
        notes=notes,
    )
    lead = spectrum.moduli[0] if len(spectrum) else float("nan")
    second = spectrum.moduli[1] if len(spectrum) > 1 else float("nan")
    print(
        f"spectrum: kind={kind} n={n}"
        + (f" eps={eps}" if eps is not None else "")
        + f" solver={solver}: {len(spectrum)} eigenvalues, "
        f"|lambda_1|={lead:.6f}, |lambda_2|={second:.6f}"
        + (" [cache]" if cache_hit else "")
    )
    print(f"wrote {out / 'manifest.json'}")
    return 0


def cmd_weyl_scan(p: dict) -> int:
    dims = _require(p, "dims", "weyl-scan")
    kind = p["kind"]
    if kind not in ("contractive", "open"):
        raise _fail("invalid-argument", f"weyl-scan: kind must be contractive or open, got {kind!r}")
    if kind == "contractive":
        eps_list = _require(p, "eps_list", "weyl-scan")
    else:
        eps_list = [None]
    cuts = p["gamma_cuts"]
    solver = p["solver"]
    if solver not in ("dense", "dense-real"):
        raise _fail("invalid-argument", "weyl-scan: solver must be dense or dense-real")
    if len(set(dims)) < 4:
        raise _fail("invalid-argument", "weyl-scan: need at least 4 distinct dimensions")
    for n in dims:
        if n % 2 or (kind == "open" and n % 6):
            need = "divisible by 6" if kind == "open" else "even"
            raise _fail("invalid-argument", f"weyl-scan: dimension {n} must be {need}")
        _guard_dense(n, solver, p["force_materialize"])
    out = _out_dir(p)
    cache = bio.cache_from_env(p["cache"])
    cache_root = str(cache.root) if cache is not None else None

    tasks = [
        {
            "n": n,
            "kind": kind,
            "eps": eps,
            "solver": solver,
            "cache_root": cache_root,
            "force": p["force_materialize"],
        }
        for eps in eps_list
        for n in sorted(set(dims))
    ]
    results: dict[tuple[float | None, int], np.ndarray] = {}
    timings: dict[str, float] = {}
    failures: list[str] = []
    t0 = time.perf_counter()
    if p["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=p["jobs"]) as pool:
            futs = {pool.submit(_scan_task, t): t for t in tasks}
            for fut in as_completed(futs):
                t = futs[fut]
                try:
                    r = fut.result()
                    results[(r["eps"], r["n"])] = r["moduli"]
                    timings[f"n{r['n']}_eps{r['eps']}"] = r["seconds"]
                except Exception as exc:  # noqa: BLE001 - preserve partial scan
                    failures.append(f"n={t['n']} eps={t['eps']}: {exc}")
    else:
        for t in tasks:
            try:
                r = _scan_task(t)
                results[(r["eps"], r["n"])] = r["moduli"]
                timings[f"n{r['n']}_eps{r['eps']}"] = r["seconds"]
            except Exception as exc:  # noqa: BLE001
                failures.append(f"n={t['n']} eps={t['eps']}: {exc}")
    timings["total"] = time.perf_counter() - t0

    rows: list[dict] = []
    fits: list[dict] = []
    for eps in eps_list:
        have = sorted(n for (e, n) in results if e == eps)
        frac_by_cut: dict[float, list[float]] = {c: [] for c in cuts}
        for n in have:
            gammas = decay_rates(results[(eps, n)])
            for cut in cuts:
                count = int(np.count_nonzero(gammas < cut))
                rows.append(
                    {
                        "eps": eps if eps is not None else float("nan"),
                        "kind": kind,
                        "n": n,
                        "gamma_cut": cut,
                        "count": count,
                        "fraction": count / n**2,
                    }
                )
                frac_by_cut[cut].append(count / n**2)
        for cut in cuts:
            fr = np.asarray(frac_by_cut[cut])
            if len(have) >= 4 and np.all(fr > 0):
                fit = weyl_scaling_fit(np.asarray(have), fr, cut)
                entry = {"kind": kind, "eps": eps, **bio.fit_to_dict(fit)}
                if eps is not None:
                    entry["comparison"] = bio.comparison_to_dict(
                        weyl_law_comparison(fit, eps)
                    )
                fits.append(entry)

    outputs: dict[str, Path] = {}
    if rows:
        outputs["scan_csv"] = bio.write_scan_csv(out / "scan.csv", rows)
    if fits:
        outputs["fits_json"] = bio.write_json(out / "fits.json", fits)
    status = "partial" if failures else "ok"
    bio.write_manifest(
        out / "manifest.json",
        "weyl-scan",
        parameters={k: bio._jsonable(v) for k, v in p.items()},
        outputs=outputs,
        timings=timings,
        status=status,
        notes=[f"failed: {f}" for f in failures] or None,
    )
    for f in fits:
        tag = f"eps={f['eps']}" if f["eps"] is not None else "open"
        print(
            f"weyl-scan {tag} gamma_cut={f['gamma_cut']}: beta={f['beta']:.4f} "
            f"r^2={f['r_squared']:.5f}"
        )
    print(f"wrote {out / 'manifest.json'}")
    if failures:
        raise _fail(
            "partial-failure",
            f"{len(failures)} of {len(tasks)} spectra failed "
            f"(partial results preserved in {out}): {failures[0]}",
            exit_code=3,
        )
    return 0


def cmd_husimi(p: dict) -> int:
    n = _require(p, "n", "husimi")
    kind, eps = _kind_eps(p, "husimi", ("contractive", "noiseless", "open"))
    solver = p["solver"]
    if solver == "auto":
        solver = "dense" if n <= MATERIALIZE_MAX_DIM else "iterative"
    if solver not in ("dense", "iterative"):
        raise _fail("invalid-argument", f"husimi: unknown solver {solver!r}")
    modes = p["modes"]
    if any(m < 0 for m in modes):
        raise _fail("invalid-argument", "husimi: mode indices must be non-negative")
    out = _out_dir(p)
    timings: dict[str, float] = {}
    notes: list[str] = []

    superop = build_superoperator(n, kind=kind, eps=eps)
    t0 = time.perf_counter()
    if solver == "dense":
        _guard_dense(n, "dense", p["force_materialize"])
        _, pairs = full_spectrum(
            superop, want_vectors=True, force_materialize=p["force_materialize"]
        )
    else:
        k = max(p["k"], max(modes) + 1)
        pairs = leading_eigenpairs(
            superop, k=k, want_left=p["lambda_cut"] is not None, seed=p["seed"]
        )
        notes.append(f"iterative solver: leading {k} eigenpairs only")
    timings["eigenpairs"] = time.perf_counter() - t0
    if max(modes) >= len(pairs):
        raise _fail(
            "invalid-argument",
            f"husimi: mode index {max(modes)} out of range ({len(pairs)} pairs computed)",
        )

    outputs: dict[str, Path] = {}
    t0 = time.perf_counter()
    for m in modes:
        grid = husimi_of_operator(pairs[m].right, resolution=p["grid"])
        stem = f"mode_{m:03d}"
        outputs[f"{stem}_csv"] = bio.write_husimi_csv(out / f"{stem}.csv", grid)
        outputs[f"{stem}_pgm"] = bio.write_pgm(out / f"{stem}.pgm", np.abs(grid.values))
    timings["husimi_modes"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    records = [overlap_with_invariant(pr, pairs[0]) for pr in pairs]
    outputs["overlaps_csv"] = bio.write_overlaps_csv(out / "overlaps.csv", records)
    timings["overlaps"] = time.perf_counter() - t0

    if p["lambda_cut"] is not None:
        t0 = time.perf_counter()
        density = long_lived_projector_density(
            pairs, lambda_cut=p["lambda_cut"], resolution=p["grid"]
        )
        outputs["projector_csv"] = bio.write_husimi_csv(out / "projector_density.csv", density)
        outputs["projector_pgm"] = bio.write_pgm(
            out / "projector_density.pgm", np.abs(density.values)
        )
        timings["projector_density"] = time.perf_counter() - t0
        kept = sum(1 for pr in pairs if abs(pr.eigenvalue) >= p["lambda_cut"])
        notes.append(f"projector density over {kept} modes with |lambda| >= {p['lambda_cut']}")

    bio.write_manifest(
        out / "manifest.json",
        "husimi",
        parameters={**{k2: bio._jsonable(v) for k2, v in p.items()}, "resolved_solver": solver},
        outputs=outputs,
        timings=timings,
        notes=notes or None,
    )
    print(
        f"husimi: kind={kind} n={n}"
        + (f" eps={eps}" if eps is not None else "")
        + f": rendered modes {modes} on a {p['grid']}^2 grid"
    )
    print(f"wrote {out / 'manifest.json'}")
    return 0


def cmd_compare_weyl(p: dict) -> int:
    fits_path = _require(p, "fits", "compare-weyl")
    if not Path(fits_path).exists():
        raise _fail("missing-file", f"compare-weyl: no such file: {fits_path}")
    fits = bio.read_json(fits_path)
    if not isinstance(fits, list):
        raise _fail("bad-config", f"compare-weyl: {fits_path} is not a fits.json list")
    out = _out_dir(p)
    eps_filter = p.get("eps")
    reports = []
    for entry in fits:
        eps = entry.get("eps")
        if eps is None:
            continue  # open-map fits have no classical attractor to compare against
        if eps_filter is not None and abs(eps - eps_filter) > 1e-12:
            continue
        fit = weyl_scaling_fit(
            np.asarray(entry["dims"], dtype=int),
            np.asarray(entry["fractions"], dtype=float),
            entry["gamma_cut"],
        )
        cmp = weyl_law_comparison(fit, eps)
        reports.append(bio.comparison_to_dict(cmp))
        print(
            f"compare-weyl eps={eps} gamma_cut={cmp.gamma_cut}: beta={cmp.beta:.4f} "
            f"naive_exponent={cmp.naive_exponent:.4f} gap={cmp.gap:+.4f}"
        )
    if not reports:
        raise _fail("invalid-argument", "compare-weyl: no matching fit entries")
    outputs = {
        "comparison_json": bio.write_json(out / "comparison.json", reports),
    }
    bio.write_manifest(
        out / "manifest.json",
        "compare-weyl",
        parameters={
            **{k: bio._jsonable(v) for k, v in p.items()},
            "fits_sha256": bio.sha256_file(fits_path),
        },
        outputs=outputs,
    )
    print(f"wrote {out / 'manifest.json'}")
    return 0


_HANDLERS = {
    "attractor": cmd_attractor,
    "spectrum": cmd_spectrum,
    "weyl-scan": cmd_weyl_scan,
    "husimi": cmd_husimi,
    "compare-weyl": cmd_compare_weyl,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 2
    try:
        p = _resolve_options(args.command, args)
        return _HANDLERS[args.command](p)
    except CliError as exc:
        _print_error(exc.code, str(exc))
        return exc.exit_code
    except MaterializationGuard as exc:
        _print_error("materialization-guard", str(exc))
        return 2
    except FileNotFoundError as exc:
        _print_error("missing-file", str(exc))
        return 2
    except (ValueError, RuntimeError) as exc:
        _print_error("invalid-argument", str(exc))
        return 2
    except OSError as exc:
        _print_error("io-error", str(exc))
        return 2


def _print_error(code: str, message: str) -> None:
    one_line = " ".join(str(message).split())
    print(f"bakerlab: error [{code}]: {one_line}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
