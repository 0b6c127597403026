"""Tests for file formats, manifests, the spectrum cache, and the CLI."""

from __future__ import annotations

import hashlib
import json
import os
import struct

import numpy as np
import pytest

import bakerlab.cli as cli
import bakerlab.io as bio
from bakerlab.quantum import build_kraus, build_superoperator
from bakerlab.spectral import decay_rates, density_of_states, full_spectrum


# ---------------------------------------------------------------------------
# low-level formats
# ---------------------------------------------------------------------------


class TestCsv:
    def test_roundtrip_with_comments(self, tmp_path):
        path = tmp_path / "t.csv"
        cols = [
            ("idx", np.arange(4)),
            ("val", np.array([0.1, 0.25, 1e-17, 3.14159265358979])),
        ]
        bio.write_csv(path, cols, comments=["alpha", "beta"])
        comments, data = bio.read_csv(path)
        assert comments == ["alpha", "beta"]
        assert np.array_equal(data["idx"], np.arange(4))
        assert np.array_equal(data["val"], cols[1][1])  # %.17g is lossless

    def test_no_temp_files_left(self, tmp_path):
        bio.write_csv(tmp_path / "t.csv", [("x", np.arange(3))])
        assert sorted(p.name for p in tmp_path.iterdir()) == ["t.csv"]

    def test_column_length_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            bio.write_csv(
                tmp_path / "t.csv", [("a", np.arange(3)), ("b", np.arange(4))]
            )


class TestPgm:
    def test_roundtrip(self, tmp_path):
        values = np.arange(12, dtype=float).reshape(3, 4)
        path = bio.write_pgm(tmp_path / "t.pgm", values)
        img = bio.read_pgm(path)
        assert img.shape == (3, 4)
        # rows flipped for display; max-normalized to 255
        expected = np.round(values[::-1] / values.max() * 255).astype(np.uint8)
        assert np.array_equal(img, expected)

    def test_header(self, tmp_path):
        path = bio.write_pgm(tmp_path / "t.pgm", np.ones((2, 5)))
        head = path.read_bytes()[:20]
        assert head.startswith(b"P5\n5 2\n255\n")

    def test_zero_field(self, tmp_path):
        path = bio.write_pgm(tmp_path / "t.pgm", np.zeros((4, 4)))
        assert np.array_equal(bio.read_pgm(path), np.zeros((4, 4), dtype=np.uint8))

    def test_validation(self, tmp_path):
        with pytest.raises(ValueError):
            bio.write_pgm(tmp_path / "t.pgm", np.zeros(5))
        (tmp_path / "bad.pgm").write_bytes(b"P6 whatever")
        with pytest.raises(ValueError):
            bio.read_pgm(tmp_path / "bad.pgm")


class TestJson:
    def test_complex_values_encoded(self, tmp_path):
        path = bio.write_json(tmp_path / "t.json", {"z": 1 + 2j, "a": np.float64(0.5)})
        doc = bio.read_json(path)
        assert doc == {"z": {"re": 1.0, "im": 2.0}, "a": 0.5}

    def test_numpy_arrays_become_lists(self, tmp_path):
        path = bio.write_json(tmp_path / "t.json", {"v": np.arange(3)})
        assert bio.read_json(path) == {"v": [0, 1, 2]}


class TestDomainWriters:
    def test_spectrum_csv_roundtrip(self, tmp_path):
        sup = build_superoperator(6, eps=0.7)
        spectrum = full_spectrum(sup)
        path = bio.write_spectrum_csv(tmp_path / "s.csv", spectrum, "dense-real")
        back = bio.read_spectrum_csv(path)
        assert np.allclose(back, spectrum.eigenvalues, atol=1e-16)
        comments, data = bio.read_csv(path)
        assert np.allclose(data["gamma"], decay_rates(spectrum.eigenvalues))
        assert np.allclose(data["modulus"], spectrum.moduli)

    def test_histogram_csv(self, tmp_path):
        hist = density_of_states(np.array([0.5, 1.0, 2.0, 3.0]), n_bins=12, window=(0, 6))
        path = bio.write_histogram_csv(tmp_path / "h.csv", hist)
        _, data = bio.read_csv(path)
        widths = data["gamma_hi"] - data["gamma_lo"]
        assert np.sum(data["density"] * widths) == pytest.approx(1.0, abs=1e-12)

    def test_kraus_csv_triples(self, tmp_path):
        ks = build_kraus(8, 0.6)
        path = bio.write_kraus_csv(tmp_path / "k.csv", ks)
        _, data = bio.read_csv(path)
        assert set(data) == {"mu", "row", "value"}
        # reconstruct the weights and compare
        for mu, w in enumerate(ks.weights):
            sel = data["mu"] == mu
            rows = data["row"][sel].astype(int)
            assert np.array_equal(np.sort(rows), np.arange(w.size))
            got = data["value"][sel][np.argsort(rows)]
            assert np.array_equal(got, w)  # %.17g is lossless

    def test_superop_binary_roundtrip(self, tmp_path):
        sup = build_superoperator(4, eps=0.6)
        mat = sup.matrix()
        path = bio.write_superop_binary(tmp_path / "s.bin", mat)
        raw = path.read_bytes()
        assert struct.unpack("<Q", raw[:8])[0] == 16
        assert len(raw) == 8 + 16 * 16 * 16
        back = bio.read_superop_binary(path)
        assert np.array_equal(back, mat)

    def test_attractor_csv_columns(self, tmp_path):
        from bakerlab.classical import iterate_to_attractor

        sample = iterate_to_attractor(0.8, n_seeds=50, transient=10, keep=2, seed=0)
        path = bio.write_attractor_csv(tmp_path / "a.csv", sample)
        comments, data = bio.read_csv(path)
        assert set(data) == {"q", "p"}
        assert data["q"].size == 100
        assert any("eps" in c for c in comments)


class TestManifest:
    def test_records_hashes_and_sizes(self, tmp_path):
        artifact = tmp_path / "data.csv"
        bio.write_csv(artifact, [("x", np.arange(5))])
        path = bio.write_manifest(
            tmp_path / "manifest.json",
            "spectrum",
            parameters={"n": 8},
            outputs={"data": artifact},
            timings={"solve": 0.25},
        )
        doc = bio.read_json(path)
        assert doc["tool"] == "bakerlab"
        assert doc["command"] == "spectrum"
        assert doc["status"] == "ok"
        assert doc["parameters"] == {"n": 8}
        entry = doc["outputs"]["data"]
        assert entry["path"] == "data.csv"
        assert entry["bytes"] == artifact.stat().st_size
        assert entry["sha256"] == hashlib.sha256(artifact.read_bytes()).hexdigest()
        assert "created_utc" in doc


class TestSpectrumCache:
    def test_put_get_roundtrip(self, tmp_path):
        cache = bio.SpectrumCache(tmp_path / "c")
        params = {"record": "spectrum", "n": 8, "eps": 0.8}
        assert cache.get(params) is None
        w = np.array([1.0, 0.5 + 0.1j])
        cache.put(params, eigenvalues=w)
        hit = cache.get(params)
        assert hit is not None
        assert np.array_equal(hit["eigenvalues"], w)

    def test_distinct_params_distinct_entries(self, tmp_path):
        cache = bio.SpectrumCache(tmp_path / "c")
        a = {"n": 8, "eps": 0.8}
        b = {"n": 8, "eps": 0.6}
        assert cache.key(a) != cache.key(b)
        cache.put(a, x=np.zeros(1))
        assert cache.get(b) is None

    def test_float_precision_in_key(self, tmp_path):
        cache = bio.SpectrumCache(tmp_path / "c")
        assert cache.key({"eps": 0.1 + 0.2}) != cache.key({"eps": 0.3})

    def test_corrupt_entry_is_a_miss(self, tmp_path):
        cache = bio.SpectrumCache(tmp_path / "c")
        params = {"n": 4}
        cache.put(params, x=np.zeros(2))
        cache.path_for(params).write_bytes(b"garbage")
        assert cache.get(params) is None

    def test_cache_from_env(self, tmp_path, monkeypatch):
        monkeypatch.delenv("BAKERLAB_CACHE", raising=False)
        assert bio.cache_from_env(None) is None
        monkeypatch.setenv("BAKERLAB_CACHE", str(tmp_path / "envcache"))
        cache = bio.cache_from_env(None)
        assert cache is not None and cache.root == tmp_path / "envcache"
        explicit = bio.cache_from_env(str(tmp_path / "explicit"))
        assert explicit.root == tmp_path / "explicit"


# ---------------------------------------------------------------------------
# CLI subcommands
# ---------------------------------------------------------------------------


def run_cli(*args: str) -> int:
    return cli.main(list(args))


class TestCliAttractor:
    def test_outputs_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "run"
        rc = run_cli(
            "attractor", "--eps", "0.8", "--n-seeds", "4000", "--transient", "30",
            "--keep", "5", "--grid", "64", "--out", str(out),
        )
        assert rc == 0
        for name in ("attractor.csv", "attractor.pgm", "dimension.json", "manifest.json"):
            assert (out / name).exists()
        doc = bio.read_json(out / "dimension.json")
        assert doc["closed_form_dimension"] == pytest.approx(1.7565, abs=1e-3)
        # accuracy is pinned elsewhere on full-size samples; this is a small one
        assert abs(doc["estimate"]["dimension"] - doc["closed_form_dimension"]) < 0.25
        manifest = bio.read_json(out / "manifest.json")
        entry = manifest["outputs"]["attractor_csv"]
        assert entry["sha256"] == hashlib.sha256((out / "attractor.csv").read_bytes()).hexdigest()
        assert "box dimension" in capsys.readouterr().out

    def test_rejects_closed_limit(self, tmp_path, capsys):
        rc = run_cli("attractor", "--eps", "1.0", "--out", str(tmp_path))
        assert rc == 2
        err = capsys.readouterr().err
        assert err.startswith("bakerlab: error [invalid-argument]:")
        assert "\n" not in err.strip()

    def test_requires_eps(self, tmp_path, capsys):
        rc = run_cli("attractor", "--out", str(tmp_path))
        assert rc == 2
        assert "--eps is required" in capsys.readouterr().err


class TestCliSpectrum:
    def test_dense_run_outputs(self, tmp_path):
        out = tmp_path / "run"
        rc = run_cli(
            "spectrum", "--n", "8", "--eps", "0.8", "--out", str(out),
            "--export-kraus", "--export-superop",
        )
        assert rc == 0
        _, data = bio.read_csv(out / "spectrum.csv")
        assert data["re"].size == 64
        mods = np.hypot(data["re"], data["im"])
        assert mods[0] == pytest.approx(1.0, abs=1e-10)
        assert (out / "histogram.csv").exists()
        assert (out / "kraus.csv").exists()
        back = bio.read_superop_binary(out / "superop.bin")
        assert back.shape == (64, 64)

    def test_iterative_solver_skips_histogram(self, tmp_path):
        out = tmp_path / "run"
        rc = run_cli(
            "spectrum", "--n", "8", "--eps", "0.8", "--solver", "iterative",
            "--k", "4", "--out", str(out),
        )
        assert rc == 0
        _, data = bio.read_csv(out / "spectrum.csv")
        assert data["re"].size == 4
        assert not (out / "histogram.csv").exists()
        manifest = bio.read_json(out / "manifest.json")
        assert any("partial spectrum" in n for n in manifest.get("notes", []))

    def test_cache_hit_on_second_run(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        cache = tmp_path / "cache"
        for out in (out1, out2):
            rc = run_cli(
                "spectrum", "--n", "8", "--eps", "0.8",
                "--cache", str(cache), "--out", str(out),
            )
            assert rc == 0
        assert len(list(cache.glob("*.npz"))) == 1
        m2 = bio.read_json(out2 / "manifest.json")
        assert any("cache" in n for n in m2.get("notes", []))
        a = bio.read_spectrum_csv(out1 / "spectrum.csv")
        b = bio.read_spectrum_csv(out2 / "spectrum.csv")
        assert np.array_equal(a, b)

    def test_dense_guard(self, tmp_path, capsys):
        rc = run_cli("spectrum", "--n", "102", "--eps", "0.8", "--out", str(tmp_path))
        assert rc == 2
        assert "force-materialize" in capsys.readouterr().err

    def test_odd_dimension_rejected(self, tmp_path, capsys):
        rc = run_cli("spectrum", "--n", "7", "--eps", "0.8", "--out", str(tmp_path))
        assert rc == 2
        assert "[invalid-argument]" in capsys.readouterr().err

    def test_unknown_solver_rejected(self, tmp_path, capsys):
        rc = run_cli(
            "spectrum", "--n", "8", "--eps", "0.8", "--solver", "magic",
            "--out", str(tmp_path),
        )
        assert rc == 2

    def test_open_kind_needs_no_eps(self, tmp_path):
        rc = run_cli("spectrum", "--n", "12", "--kind", "open", "--out", str(tmp_path))
        assert rc == 0
        _, data = bio.read_csv(tmp_path / "spectrum.csv")
        assert data["re"].size == 144


class TestCliWeylScan:
    def test_scan_and_fit(self, tmp_path):
        out = tmp_path / "run"
        rc = run_cli(
            "weyl-scan", "--dims", "8:14:2", "--eps-list", "0.8",
            "--gamma-cuts", "4,8", "--out", str(out),
        )
        assert rc == 0
        _, data = bio.read_csv(out / "scan.csv")
        assert set(np.unique(data["n"]).astype(int)) == {8, 10, 12, 14}
        fits = bio.read_json(out / "fits.json")
        assert len(fits) == 2
        for entry in fits:
            assert entry["eps"] == 0.8
            assert "beta" in entry and "r_squared" in entry
            assert entry["comparison"]["naive_exponent"] == pytest.approx(0.2435, abs=1e-3)

    def test_too_few_dims_rejected(self, tmp_path, capsys):
        rc = run_cli(
            "weyl-scan", "--dims", "8,10", "--eps-list", "0.8", "--out", str(tmp_path)
        )
        assert rc == 2
        assert "4 distinct" in capsys.readouterr().err

    def test_parallel_jobs_smoke(self, tmp_path):
        out = tmp_path / "run"
        rc = run_cli(
            "weyl-scan", "--dims", "8,10,12,14", "--eps-list", "0.6",
            "--gamma-cuts", "4", "--jobs", "2", "--out", str(out),
        )
        assert rc == 0
        assert (out / "fits.json").exists()

    def test_partial_failure_preserves_results(self, tmp_path, capsys, monkeypatch):
        real_task = cli._scan_task

        def flaky(task):
            if task["n"] == 12:
                raise RuntimeError("synthetic failure")
            return real_task(task)

        monkeypatch.setattr(cli, "_scan_task", flaky)
        out = tmp_path / "run"
        rc = run_cli(
            "weyl-scan", "--dims", "8,10,12,14", "--eps-list", "0.8",
            "--gamma-cuts", "4", "--out", str(out),
        )
        assert rc == 3
        assert "[partial-failure]" in capsys.readouterr().err
        manifest = bio.read_json(out / "manifest.json")
        assert manifest["status"] == "partial"
        _, data = bio.read_csv(out / "scan.csv")
        assert set(np.unique(data["n"]).astype(int)) == {8, 10, 14}


class TestCliHusimi:
    def test_modes_overlaps_and_density(self, tmp_path):
        out = tmp_path / "run"
        rc = run_cli(
            "husimi", "--n", "8", "--eps", "0.8", "--grid", "32",
            "--modes", "0,1", "--lambda-cut", "0.3", "--out", str(out),
        )
        assert rc == 0
        for name in (
            "mode_000.csv", "mode_000.pgm", "mode_001.csv", "mode_001.pgm",
            "overlaps.csv", "projector_density.csv", "projector_density.pgm",
            "manifest.json",
        ):
            assert (out / name).exists()
        _, ovl = bio.read_csv(out / "overlaps.csv")
        assert ovl["overlap"][0] == pytest.approx(1.0, abs=1e-8)
        assert ovl["gamma"][0] == pytest.approx(0.0, abs=1e-8)
        _, hus = bio.read_csv(out / "mode_000.csv")
        assert hus["q"].size == 32 * 32

    def test_iterative_solver(self, tmp_path):
        out = tmp_path / "run"
        rc = run_cli(
            "husimi", "--n", "8", "--eps", "0.8", "--solver", "iterative",
            "--k", "3", "--grid", "16", "--out", str(out),
        )
        assert rc == 0
        manifest = bio.read_json(out / "manifest.json")
        assert any("iterative" in n for n in manifest.get("notes", []))

    def test_mode_out_of_range(self, tmp_path, capsys):
        rc = run_cli(
            "husimi", "--n", "8", "--eps", "0.8", "--grid", "16",
            "--modes", "70", "--out", str(tmp_path),
        )
        assert rc == 2
        assert "out of range" in capsys.readouterr().err


class TestCliCompareWeyl:
    def test_reports_gap(self, tmp_path, capsys):
        scan_out = tmp_path / "scan"
        rc = run_cli(
            "weyl-scan", "--dims", "8:14:2", "--eps-list", "0.8",
            "--gamma-cuts", "4", "--out", str(scan_out),
        )
        assert rc == 0
        cmp_out = tmp_path / "cmp"
        rc = run_cli(
            "compare-weyl", "--fits", str(scan_out / "fits.json"), "--out", str(cmp_out)
        )
        assert rc == 0
        reports = bio.read_json(cmp_out / "comparison.json")
        assert len(reports) == 1
        rep = reports[0]
        assert rep["naive_exponent"] == pytest.approx(2.0 - rep["attractor_dim"], rel=1e-12)
        assert rep["gap"] == pytest.approx(rep["beta"] - rep["naive_exponent"], rel=1e-12)
        assert "gap=" in capsys.readouterr().out

    def test_missing_fits_file(self, tmp_path, capsys):
        rc = run_cli("compare-weyl", "--fits", str(tmp_path / "nope.json"), "--out", str(tmp_path))
        assert rc == 2
        assert "[missing-file]" in capsys.readouterr().err


class TestCliConfig:
    def test_config_sections_and_precedence(self, tmp_path):
        ini = tmp_path / "lab.ini"
        ini.write_text(
            "[global]\neps = 0.6\n\n[spectrum]\nn = 8\nbins = 16\n"
        )
        out1 = tmp_path / "a"
        rc = run_cli("spectrum", "--config", str(ini), "--out", str(out1))
        assert rc == 0
        m1 = bio.read_json(out1 / "manifest.json")
        assert m1["parameters"]["n"] == 8
        assert m1["parameters"]["eps"] == 0.6
        assert m1["parameters"]["bins"] == 16
        # explicit flags outrank both config sections
        out2 = tmp_path / "b"
        rc = run_cli("spectrum", "--config", str(ini), "--eps", "0.8", "--out", str(out2))
        assert rc == 0
        m2 = bio.read_json(out2 / "manifest.json")
        assert m2["parameters"]["eps"] == 0.8

    def test_missing_config_rejected(self, tmp_path, capsys):
        rc = run_cli(
            "spectrum", "--config", str(tmp_path / "nope.ini"),
            "--n", "8", "--eps", "0.8", "--out", str(tmp_path),
        )
        assert rc == 2
        assert "[missing-file]" in capsys.readouterr().err

    def test_bad_option_value(self, tmp_path, capsys):
        rc = run_cli("spectrum", "--n", "eight", "--eps", "0.8", "--out", str(tmp_path))
        assert rc == 2
        assert "[bad-config]" in capsys.readouterr().err


class TestCliTopLevel:
    def test_no_command_prints_help(self, capsys):
        assert cli.main([]) == 2
        assert "attractor" in capsys.readouterr().out

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert "bakerlab" in capsys.readouterr().out

    def test_environment_cache_used(self, tmp_path, monkeypatch):
        cache_dir = tmp_path / "envcache"
        monkeypatch.setenv("BAKERLAB_CACHE", str(cache_dir))
        rc = run_cli("spectrum", "--n", "8", "--eps", "0.8", "--out", str(tmp_path / "o"))
        assert rc == 0
        assert len(list(cache_dir.glob("*.npz"))) == 1
