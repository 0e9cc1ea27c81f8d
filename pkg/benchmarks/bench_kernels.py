"""Compare the compiled and NumPy kernel backends.

Run with ``python benchmarks/bench_kernels.py [--N 4096] [--repeat 20]``.
Inputs are taken from a real GAMP iteration on a clipped 4-QAM block so the
branch mix matches what the detector sees.
"""

import argparse
import time

import numpy as np

from clipgamp import gamp, kernels
from clipgamp.channel import calibrate_noise
from clipgamp.transform import TransformPlan
from clipgamp.transmitter import ClipModel, Constellation, generate_block


def gamp_inputs(N, T=0.7, ebno_db=7.0, seed=0):
    rng = np.random.default_rng(seed)
    const = Constellation(4)
    plan = TransformPlan(N)
    clip = ClipModel(T)
    block = generate_block(rng, N, const, plan, clip)
    s2 = calibrate_noise(ebno_db, N, const, clip)
    y = block.s + np.sqrt(s2) * rng.standard_normal(N)
    cfg = gamp.GampConfig(noise_variance=s2, threshold=T, constellation=const)
    state = gamp.init_state(N)
    for _ in range(3):
        gamp.output_step(state, y, plan, cfg)
        gamp.input_step(state, plan, cfg)
    gamp.output_step(state, y, plan, cfg)
    return dict(y=y, p=state.phat, vp=state.vp, s2=s2, T=T,
                r=state.rhat, vr=state.vr, d=const.points)


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(backend, inp, repeat):
    k = kernels.get_backend(backend)
    out = best_of(lambda: k.output_moments(inp["y"], inp["p"], inp["vp"], inp["s2"], inp["T"]), repeat)
    inn = best_of(lambda: k.input_moments(inp["r"], inp["vr"], inp["d"]), repeat)
    return out, inn


def bench_detector(backend, N, repeat):
    saved = kernels._impl
    kernels._impl = kernels.get_backend(backend)
    try:
        rng = np.random.default_rng(1)
        const = Constellation(4)
        plan = TransformPlan(N)
        clip = ClipModel(0.7)
        block = generate_block(rng, N, const, plan, clip)
        s2 = calibrate_noise(7.0, N, const, clip)
        y = block.s + np.sqrt(s2) * rng.standard_normal(N)
        cfg = gamp.GampConfig(noise_variance=s2, threshold=0.7, constellation=const, t_max=10)
        return best_of(lambda: gamp.run(y, cfg, plan), max(1, repeat // 4))
    finally:
        kernels._impl = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    inp = gamp_inputs(args.N)
    backends = ["python"]
    try:
        kernels.get_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled backend not built; timing NumPy only")

    rows = {}
    for b in backends:
        out, inn = bench_backend(b, inp, args.repeat)
        det = bench_detector(b, args.N, args.repeat)
        rows[b] = (out, inn, det)

    print(f"N = {args.N}, best of {args.repeat}")
    print(f"{'backend':>8s} {'output (ms)':>12s} {'input (ms)':>11s} {'10 GAMP iters (ms)':>19s}")
    for b, (out, inn, det) in rows.items():
        print(f"{b:>8s} {out * 1e3:12.3f} {inn * 1e3:11.3f} {det * 1e3:19.2f}")
    if len(rows) == 2:
        c, p = rows["cython"], rows["python"]
        print(f"{'speedup':>8s} {p[0] / c[0]:11.1f}x {p[1] / c[1]:10.1f}x {p[2] / c[2]:18.1f}x")


if __name__ == "__main__":
    main()
