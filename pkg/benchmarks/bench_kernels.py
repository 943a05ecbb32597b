"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--N 128] [--repeat 20]

Each pair is checked for agreement before timing.  The last line times one
scattering energy + gradient evaluation with each backend.
"""
import argparse
import time

import numpy as np

from scatden import _kernels as K
from scatden.energies import EnergyParams, EnergyPlan
from scatden.ortho_dwt import get_filter
from scatden.wavelet_bank import build_bank


def best_of(f, repeat):
    f()  # warm up (and compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(label, f, repeat):
    K.use_numba(False)
    ref = f()
    t_np = best_of(f, repeat)
    K.use_numba(True)
    out = f()
    t_nb = best_of(f, repeat)
    ref = ref if isinstance(ref, tuple) else (ref,)
    out = out if isinstance(out, tuple) else (out,)
    err = max(float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) for a, b in zip(ref, out))
    print(f"{label:<28} numpy {t_np * 1e3:9.3f} ms   numba {t_nb * 1e3:9.3f} ms   "
          f"x{t_np / t_nb:6.2f}   max diff {err:.1e}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    N, r = args.N, args.repeat
    z = rng.standard_normal((24, N, N)) + 1j * rng.standard_normal((24, N, N))
    x = rng.standard_normal((N, N))
    spec = get_filter("sym4")
    h, g = np.asarray(spec.lowpass), np.asarray(spec.highpass)

    run("smooth_modulus + grad", lambda: K.smooth_modulus(z, 1e-3, want_grad=True), r)
    run("smooth_relu + grad", lambda: K.smooth_relu(z, 1e-3, want_grad=True), r)
    run("soft_threshold", lambda: K.soft_threshold(x, 0.5), r)
    run("periodic_analysis", lambda: K.periodic_analysis(x, h, g), r)
    lo, hi = K.periodic_analysis(x, h, g)
    run("periodic_synthesis", lambda: K.periodic_synthesis(lo, hi, h, g), r)

    plan = EnergyPlan(build_bank(N), EnergyParams(epsilon=1e-3))
    run("scattering value_and_grad", lambda: plan.value_and_grad(x), max(1, r // 10))


if __name__ == "__main__":
    main()
