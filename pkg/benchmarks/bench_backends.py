"""Compare the numba and pure-numpy backends on the hot kernels.

Each backend runs in its own interpreter (the backend is fixed at import
time by ``PCPNOMA_DISABLE_NUMBA``).  Timings are best-of-``--repeat`` after
one warm-up call, so numba compile time is reported separately.

    python3 benchmarks/bench_backends.py [--repeat 5] [--trials 2000]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _best(func, repeat):
    t0 = time.perf_counter()
    func()
    first = time.perf_counter() - t0
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        times.append(time.perf_counter() - t0)
    return first, min(times)


def worker(repeat, trials):
    from pcpnoma import _jit
    from pcpnoma import coverage as cv
    from pcpnoma import laplace as lp
    from pcpnoma import montecarlo as mc
    from pcpnoma.params import NetworkParams

    params = NetworkParams(bs_intensity=0.08)
    L = params.region_side
    opts = mc.SimOptions(seed=1)
    sample = mc._sample_chunk(params, opts, 0, trials)
    args = sample + (0.5 * L, 0.5 * L, L, True, params.pathloss_exponent, params.tx_power,
                     params.noise_power, False, params.detection_threshold)
    small = NetworkParams(bs_intensity=0.02, users_per_cluster=4)
    jensen = cv.CoverageOptions(use_inter_bound=True)

    def coverage_call():
        cv._rank_integrals.cache_clear()
        cv.coverage_perfect(2, 3.0, small, jensen)

    cases = {
        f"MC batch kernel ({trials} trials)": lambda: mc._batch(*args),
        "intra transform, quadrature (100 s)": lambda: [
            lp.laplace_intra_perfect(0.01 * k, 1, 0.4, params, closed_form=False)
            for k in range(1, 101)],
        "inter transform, exact (5 s)": lambda: lp.laplace_inter_exact(
            [0.005, 0.01, 0.02, 0.05, 0.1], params),
        "coverage integral, c=4 rank 2": coverage_call,
    }
    out = {"backend": _jit.BACKEND, "cases": {}}
    for name, func in cases.items():
        first, best = _best(func, repeat)
        out["cases"][name] = {"first": first, "best": best}
    print(json.dumps(out))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    if args.worker:
        worker(args.repeat, args.trials)
        return 0
    results = {}
    for label, flag in (("numba", None), ("numpy", "1")):
        env = dict(os.environ)
        env.pop("PCPNOMA_DISABLE_NUMBA", None)
        if flag:
            env["PCPNOMA_DISABLE_NUMBA"] = flag
        proc = subprocess.run([sys.executable, __file__, "--worker", "--repeat",
                               str(args.repeat), "--trials", str(args.trials)],
                              env=env, capture_output=True, text=True, check=True)
        results[label] = json.loads(proc.stdout)
    if results["numba"]["backend"] != "numba":
        print("numba is not installed; both runs used the numpy backend")
    names = list(results["numpy"]["cases"])
    width = max(len(n) for n in names)
    print(f"{'case':<{width}}  {'numba ms':>10}  {'numpy ms':>10}  {'speedup':>8}  "
          f"{'numba first-call s':>18}")
    for name in names:
        fast = results["numba"]["cases"][name]
        slow = results["numpy"]["cases"][name]
        print(f"{name:<{width}}  {1e3 * fast['best']:10.2f}  {1e3 * slow['best']:10.2f}  "
              f"{slow['best'] / fast['best']:8.1f}  {fast['first']:18.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
