import subprocess
import sys
from pathlib import Path

SCRIPT = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs():
    proc = subprocess.run([sys.executable, str(SCRIPT), "--rows", "200", "--repeat", "1"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert lines[0].startswith("default backend:")
    assert sum("posterior_moments" in line for line in lines) == 3
