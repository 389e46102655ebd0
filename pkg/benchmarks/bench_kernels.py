"""Time each kernel's numba and numpy variants on pipeline-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both variants are imported from the same module, so the environment flag
that picks the default does not matter here.  The first numba call
(compilation) is excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from sheafnn import _kernels as K


def cases(rng):
    n, d = 224, 4
    m = rng.normal(size=(50, 50))
    gram = m @ m.T
    blocks = rng.normal(size=(n, d, d))
    blocks = blocks @ blocks.transpose(0, 2, 1)
    # a dense-ish similarity-style edge list
    us, vs = np.triu_indices(n, 1)
    keep = rng.random(len(us)) < 0.3
    us, vs = us[keep].astype(np.int64), vs[keep].astype(np.int64)
    order = rng.permutation(len(us))
    e = len(us)
    fu, fv = rng.normal(size=(e, d, d)), rng.normal(size=(e, d, d))
    G = rng.normal(size=(n * d, n * d))
    vals = rng.normal(size=(e, 8))
    a3, b3 = rng.normal(size=(e, d, d)), rng.normal(size=(e, d, 8))
    return {
        "jacobi_eigh (50x50)": ("jacobi_eigh", (gram, K.JACOBI_TOL, K.JACOBI_MAX_SWEEPS)),
        f"batched_jacobi_eigh ({n}x{d}x{d})": ("batched_jacobi_eigh", (blocks, K.JACOBI_TOL, K.JACOBI_MAX_SWEEPS)),
        f"edges_until_connected ({e} pairs)": ("edges_until_connected", (n, us[order], vs[order])),
        f"assemble_laplacian (E={e}, d={d})": ("assemble_laplacian", (n, us, vs, fu, fv)),
        f"laplacian_map_grads (E={e}, d={d})": ("laplacian_map_grads", (G, us, vs, fu, fv)),
        f"segment_sum ({e}x8)": ("segment_sum", (vals, us, n)),
        f"batched_matmul ({e}x{d}x{d} @ {d}x8)": ("batched_matmul", (a3, b3)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba is not installed; only the numpy path can be timed")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':46s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for label, (name, inputs) in cases(rng).items():
        nb, np_ = getattr(K, name + "_nb"), getattr(K, name + "_np")
        times = {}
        for tag, fn in (("nb", nb), ("np", np_)):
            fn(*inputs)  # warm-up / compile
            number = 3
            best = min(timeit.repeat(lambda: fn(*inputs), number=number, repeat=args.repeat))
            times[tag] = 1000.0 * best / number
        print(f"{label:46s} {times['nb']:10.3f} {times['np']:10.3f} {times['np'] / times['nb']:8.1f}x")


if __name__ == "__main__":
    main()
