"""Compare the numba kernels against the pure-numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``.  Imports both
implementation modules directly, so the ``FOCALSTYLE_NUMBA`` flag does not
matter here; the numba column is skipped if numba is unavailable.
"""

from __future__ import annotations

import time

import numpy as np

from focalstyle.kernels import numpy_impl

try:
    from focalstyle.kernels import numba_impl
except ImportError:
    numba_impl = None

REPEATS = 5


def best_of(fn, *args) -> float:
    """Best wall time in seconds over a few repeats (first call warms JIT)."""
    fn(*args)
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def make_cases() -> list[tuple[str, str, tuple]]:
    rng = np.random.default_rng(0)

    conv_x = rng.random((16, 256, 256), dtype=np.float32)
    conv_w = rng.standard_normal((32, 16, 3, 3)).astype(np.float32)
    conv_b = rng.standard_normal(32).astype(np.float32)

    pool_x = np.ascontiguousarray(rng.random((64, 256, 256), dtype=np.float32))
    pooled, pool_idx = numpy_impl.maxpool2(pool_x)
    pool_g = rng.random(pooled.shape).astype(np.float32)

    h = w = 256
    k = 200
    lab = rng.random((h, w, 3)) * 100.0
    spacing = np.sqrt(h * w / k)
    ys = rng.uniform(0, h, k)
    xs = rng.uniform(0, w, k)
    centers = np.stack([ys, xs, *[rng.random(k) * 100 for _ in range(3)]], axis=1)
    window = max(int(round(2 * spacing)), 1)
    labels, _ = numpy_impl.slic_assign(lab, centers, 10.0 / spacing, window)

    return [
        ("conv3x3 (16->32 ch, 256x256)", "conv3x3", (conv_x, conv_w, conv_b)),
        ("maxpool2 (64 ch, 256x256)", "maxpool2", (pool_x,)),
        ("maxpool2_vjp (64 ch)", "maxpool2_vjp", (pool_g, pool_idx, pool_x.shape)),
        ("slic_assign (256x256, K=200)", "slic_assign", (lab, centers, 10.0 / spacing, window)),
        ("slic_accumulate (256x256)", "slic_accumulate", (lab, labels, k)),
        ("label_components (256x256)", "label_components", (labels,)),
    ]


def main() -> None:
    rows = []
    for title, name, args in make_cases():
        t_np = best_of(getattr(numpy_impl, name), *args)
        if numba_impl is not None:
            t_nb = best_of(getattr(numba_impl, name), *args)
            rows.append((title, t_np * 1e3, t_nb * 1e3, t_np / t_nb))
        else:
            rows.append((title, t_np * 1e3, None, None))

    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  {'numpy (ms)':>11}  {'numba (ms)':>11}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for title, t_np, t_nb, ratio in rows:
        if t_nb is None:
            print(f"{title:<{width}}  {t_np:>11.3f}  {'n/a':>11}  {'n/a':>8}")
        else:
            print(f"{title:<{width}}  {t_np:>11.3f}  {t_nb:>11.3f}  {ratio:>7.2f}x")


if __name__ == "__main__":
    main()
