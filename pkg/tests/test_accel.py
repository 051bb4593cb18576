import os
import runpy
import subprocess
import sys
from pathlib import Path

from seedabsa import _accel

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def backend_under(flag):
    env = dict(os.environ, SEEDABSA_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c",
                          "from seedabsa import _accel; print(_accel.backend())"],
                         capture_output=True, text=True, env=env, check=True)
    return out.stdout.strip()


def test_env_flag_selects_backend():
    assert backend_under("1") == "numpy"
    assert backend_under("") == ("numba" if _accel.HAVE_NUMBA else "numpy")


def test_per_call_override():
    assert _accel.pick(False) is False
    assert _accel.pick(None) == _accel.USE_NUMBA
    if _accel.HAVE_NUMBA:
        assert _accel.pick(True) is True


def test_benchmark_runs(capsys):
    bench = runpy.run_path(str(BENCH))
    bench["main"](["--sentences", "60", "--repeat", "1", "--clusters", "5"])
    out = capsys.readouterr().out
    assert "gibbs sweep" in out and "speedup" in out
