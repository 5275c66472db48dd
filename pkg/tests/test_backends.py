import importlib.util
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rgscalelab import BACKEND, _fallback

try:
    from rgscalelab import _core
except ImportError:  # pragma: no cover
    _core = None

ROOT = Path(__file__).resolve().parent.parent
needs_core = pytest.mark.skipif(_core is None, reason="compiled core not built")


@needs_core
class TestAgreement:
    def test_selected_backend(self):
        expected = "python" if os.environ.get("RGSCALELAB_PURE_PYTHON") else "cython"
        assert BACKEND == expected

    def test_profile(self):
        s = np.linspace(-2.5, 2.5, 10_001)
        for lam in (0.5, 1.0, 3.0):
            assert np.allclose(_core.smooth_profile(s, lam), _fallback.smooth_profile(s, lam), rtol=1e-14, atol=0)
            a = _core.smooth_profile_derivative(s, lam)
            b = _fallback.smooth_profile_derivative(s, lam)
            assert np.allclose(a, b, rtol=1e-13, atol=1e-300)

    def test_ball(self):
        k = np.concatenate([[0.0, 1e-150, 1e-8], np.geomspace(1e-3, 1e3, 400)])
        assert np.allclose(_core.ball3(k), _fallback.ball3(k), rtol=1e-14, atol=0)
        assert _core.ball3(0.0) == pytest.approx(1.0 / 3.0, rel=1e-16)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_smooth_fourier(self, n):
        k = np.concatenate([[0.0], np.geomspace(1e-6, 200.0, 300)])
        a = _core.smooth_fourier(k, n, 1.0)
        b = _fallback.smooth_fourier(k, n, 1.0)
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(b))

    def test_branch_sum(self, rng):
        m = 500
        base = rng.random(m)
        x = rng.random(m) * 20.0
        jp = rng.normal(size=m) + 1j * rng.normal(size=m)
        jm = rng.normal(size=m) + 1j * rng.normal(size=m)
        t = np.linspace(-4.0, 4.0, 77)
        a = _core.branch_sum(base, x, jp, jm, t)
        b = _fallback.branch_sum(base, x, jp, jm, t)
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_pure_python_switch():
    env = dict(os.environ, RGSCALELAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import rgscalelab; print(rgscalelab.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_benchmark_runs(tmp_path, capsys):
    spec = importlib.util.spec_from_file_location("bench_core", ROOT / "benchmarks" / "bench_core.py")
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    target = tmp_path / "bench.json"
    bench.main(["--repeat", "1", "--json", str(target)])
    doc = json.loads(target.read_text())
    assert doc["schema_version"] == "1.0"
    assert len(doc["results"]) == 4
    for row in doc["results"]:
        if "max_rel_diff" in row:
            assert row["max_rel_diff"] <= 1e-12
    assert "speed-up" in capsys.readouterr().out
