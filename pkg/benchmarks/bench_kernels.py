"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--iterations N] [--repeat R]

Each kernel is run once before timing so numba compilation is excluded.
The MH chain is also checked to give identical output on both backends.
"""
import argparse
import time

import numpy as np

from causal_mcmc import _accel, kernels
from causal_mcmc.gbn import standin_dag
from causal_mcmc.simulator import design_by_name, sample_parameters, simulate


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--iterations", type=int, default=2000, help="MH iterations per chain")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    truth = sample_parameters(standin_dag(), 0.1, seed=0)
    data = simulate(truth.params, truth.dag, design_by_name("mixed", 10), seed=0)
    S, counts, _ = kernels.gram_stack(data.values, data.intervened)
    p = data.p
    rng = np.random.default_rng(0)
    orders = np.array([rng.permutation(p) for _ in range(500)])
    u_rim = rng.random((500, p))
    perms = orders.copy()
    u_prop = rng.random((args.iterations, p))
    u_acc = rng.random(args.iterations)
    init = np.arange(p)

    cases = {
        "order_loglik x500": lambda impl: [impl.order_loglik(S, counts, o) for o in orders],
        "batch_loglik (500)": lambda impl: impl.batch_loglik(S, counts, orders),
        "rim x500": lambda impl: [impl.rim(init, u, -1 / 0.6) for u in u_rim],
        "inversions x500": lambda impl: [impl.inversions(q) for q in perms],
        f"mh_chain ({args.iterations} it)": lambda impl: impl.mh_chain(S, counts, init, u_prop, u_acc, -1 / 0.6),
    }

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
    backends = [kernels.numpy_impl] + ([kernels.numba_impl] if _accel.HAVE_NUMBA else [])

    print(f"{'kernel':<24}" + "".join(f"{b.name:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, case in cases.items():
        times = [best_of(lambda: case(b), args.repeat) for b in backends]
        row = f"{name:<24}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)

    if len(backends) == 2:
        a = kernels.numpy_impl.mh_chain(S, counts, init, u_prop, u_acc, -1 / 0.6)
        b = kernels.numba_impl.mh_chain(S, counts, init, u_prop, u_acc, -1 / 0.6)
        same = np.array_equal(a[0], b[0]) and np.allclose(a[1], b[1], atol=1e-9)
        print(f"chains identical across backends: {same}")


if __name__ == "__main__":
    main()
