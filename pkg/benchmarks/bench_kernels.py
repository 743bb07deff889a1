"""Time the numba and numpy kernel backends on pipeline-sized inputs.

    python benchmarks/bench_kernels.py [--repeat N] [--channels C]

Each kernel is run once per backend to warm up (numba compiles on first
call), then timed over ``--repeat`` runs; the median is reported. Outputs of
the two backends are compared before timing.
"""
import argparse
import statistics
import time

import numpy as np

from hodgefast import kernels
from hodgefast.connectivity import FilterMatrix, percentile_mask
from hodgefast.hodge import HodgeSolver, SolverOptions
from hodgefast.signal_model import partition_windows
from hodgefast.simplicial import build_clique_complex, hodge_laplacian


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _inputs(n_channels, n_epochs, n_samples, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_epochs, n_channels, n_samples))
    # low-rank filter so the mask has plenty of triangles
    f = rng.standard_normal((n_channels, 3))
    c = np.triu(np.minimum(np.abs(np.corrcoef(f)), 1.0), 1)
    c = c + c.T
    filt = FilterMatrix(c)
    mask = percentile_mask(filt, 10.0)
    return x, filt, mask


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--channels", type=int, default=60)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--samples", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    x, filt, mask = _inputs(args.channels, args.epochs, args.samples, args.seed)
    ei, ej = mask.edges[:, 0].copy(), mask.edges[:, 1].copy()
    w = filt.values[ei, ej].copy()
    win = partition_windows(args.samples, 10)
    cx = build_clique_complex(mask)
    lap = hodge_laplacian(cx, 0)
    inv_diag = np.where(lap.diagonal() > 0, 1.0 / np.maximum(lap.diagonal(), 1e-300), 0.0)
    rng = np.random.default_rng(args.seed + 1)
    rhs = lap @ rng.standard_normal((cx.n_nodes, 10))
    solver_inputs = (lap.indptr, lap.indices, lap.data, inv_diag, rhs, np.zeros(rhs.shape[1]),
                     1e-10, 10 * cx.n_nodes)

    cases = {
        "windowed_flows": lambda k: k.windowed_flows(x, ei, ej, w, win.starts, win.ends,
                                                     kernels.DIRICHLET),
        "pcg_batch": lambda k: k.pcg_batch(*solver_inputs)[0],
        "triangles": lambda k: k.triangles(cx.n_nodes, mask.edges),
    }
    backends = {name: kernels.get_backend(name) for name in ("numba", "numpy")}
    print(f"{args.channels} channels, {len(mask)} edges, {len(cx.triangles)} triangles, "
          f"{args.epochs} epochs x {args.samples} samples")
    print(f"{'kernel':<16}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}  agree")
    for name, fn in cases.items():
        outs = {b: fn(k) for b, k in backends.items()}
        agree = np.allclose(outs["numba"], outs["numpy"], rtol=1e-9, atol=1e-9)
        t = {b: _median_time(lambda k=k: fn(k), args.repeat) for b, k in backends.items()}
        print(f"{name:<16}{1e3 * t['numba']:>12.2f}{1e3 * t['numpy']:>12.2f}"
              f"{t['numpy'] / t['numba']:>10.2f}  {agree}")

    flows = rng.standard_normal((10, len(mask)))
    solvers = {b: HodgeSolver(cx, SolverOptions(), backend=b) for b in backends}
    outs = {b: s.decompose(flows) for b, s in solvers.items()}
    agree = all(np.allclose(outs["numba"][c], outs["numpy"][c], rtol=1e-8, atol=1e-8)
                for c in ("gradient", "curl", "harmonic"))
    t = {b: _median_time(lambda s=s: s.decompose(flows), args.repeat)
         for b, s in solvers.items()}
    print(f"{'decompose':<16}{1e3 * t['numba']:>12.2f}{1e3 * t['numpy']:>12.2f}"
          f"{t['numpy'] / t['numba']:>10.2f}  {agree}")


if __name__ == "__main__":
    main()
