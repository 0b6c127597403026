"""Shared fixtures: slow-test gating and a session-wide spectrum cache.

Dense full spectra at n = 96 take minutes each, and several test modules
need the same ones.  The ``dense_moduli`` fixture funnels every request
through one :class:`bakerlab.io.SpectrumCache` (honoring ``BAKERLAB_CACHE``
when set, so repeated suite runs skip the solves entirely) plus an
in-process memo for the current session.

Tests marked ``slow`` (the large-dimension spot checks) are skipped unless
``BAKERLAB_RUN_SLOW`` is set to a non-empty value.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from bakerlab.cli import _dense_eigenvalues
from bakerlab.io import SpectrumCache


def pytest_collection_modifyitems(config, items):
    if os.environ.get("BAKERLAB_RUN_SLOW"):
        return
    skip = pytest.mark.skip(reason="slow; set BAKERLAB_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def spectral_cache(tmp_path_factory) -> SpectrumCache:
    root = os.environ.get("BAKERLAB_CACHE")
    if not root:
        root = str(tmp_path_factory.mktemp("spectra-cache"))
    return SpectrumCache(root)


@pytest.fixture(scope="session")
def dense_moduli(spectral_cache):
    """Factory returning eigenvalue moduli of a full dense spectrum.

    ``get(n, kind, eps)`` computes (or loads) the complete spectrum via the
    real-basis dense route and returns ``|eigenvalues|`` sorted descending.
    """
    memo: dict[tuple, np.ndarray] = {}

    def get(n: int, kind: str = "contractive", eps: float | None = None) -> np.ndarray:
        key = (n, kind, eps)
        if key not in memo:
            eigenvalues, _ = _dense_eigenvalues(
                n, kind, eps, "dense-real", spectral_cache, False
            )
            mods = np.abs(eigenvalues)
            memo[key] = np.sort(mods)[::-1]
        return memo[key]

    return get
