"""Compare the compiled and numpy likelihood kernels.

Usage::

    python benchmarks/bench_kernels.py [--rows 100000] [--repeat 3] [--threads 1]

Each case times ``posterior_moments`` (the EAP/marginal workhorse) and
``loglik_rows`` on random admissible patterns, checks that both backends
agree, and prints milliseconds per call and the speed ratio.
"""

from __future__ import annotations

import argparse
import os
import timeit

import numpy as np


def _cases(rows: int):
    from lvprecision import load_fixture
    from lvprecision.models import GradedItem, GradedResponseModel, LatentDistribution
    from lvprecision.quadrature import build_grid
    from lvprecision.simulation import simulate

    twopl = load_fixture("twopl")
    items = tuple(GradedItem([1.0 + 0.1 * j], [-1.0, 0.0, 1.0]) for j in range(10))
    grm = GradedResponseModel(items, LatentDistribution.standard())
    hurdle = load_fixture("mhgrm_synthetic")
    out = []
    for name, model, n in (
        ("2pl m=3, 61 nodes", twopl, rows),
        ("graded m=10 K=4, 61 nodes", grm, rows),
        ("hurdle 14 pairs, 61x61 nodes", hurdle, max(1, rows // 50)),
    ):
        grid = build_grid(model.latent)
        patterns = simulate(model, max(n, 1000), 0).responses[:n].astype(np.int32)
        table = model.log_category_probs(grid.nodes)
        out.append((name, patterns, table, grid.log_weights, grid.nodes[:, :1].copy()))
    return out


def _max_diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    return float(np.abs(a - b).max())


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat)) * 1e3


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=100_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--threads", type=int, default=1, help="PRECISION_THREADS for the run")
    args = parser.parse_args(argv)
    os.environ["PRECISION_THREADS"] = str(args.threads)

    from lvprecision import kernels

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; only the numpy backend is available")
    print(f"default backend: {kernels.BACKEND}, threads: {kernels.n_threads()}")
    header = f"{'case':32} {'kernel':18} {'rows':>7} " + " ".join(f"{b + ' ms':>11}" for b in backends)
    print(header + ("  ratio  max|diff|" if len(backends) == 2 else ""))
    for name, patterns, table, log_w, values in _cases(args.rows):
        for kernel in ("posterior_moments", "loglik_rows"):
            if kernel == "posterior_moments":
                call = {b: (lambda b=b: kernels.posterior_moments(patterns, table, log_w, values, backend=b))
                        for b in backends}
            else:
                call = {b: (lambda b=b: kernels.loglik_rows(patterns, table, backend=b)) for b in backends}
            times = {b: _best(fn, args.repeat) for b, fn in call.items()}
            line = f"{name:32} {kernel:18} {patterns.shape[0]:7d} " + " ".join(
                f"{times[b]:11.1f}" for b in backends)
            if len(backends) == 2:
                diff = _max_diff(call["python"](), call["cython"]())
                line += f"  {times['python'] / times['cython']:5.2f}  {diff:.1e}"
            print(line)


if __name__ == "__main__":
    main()
