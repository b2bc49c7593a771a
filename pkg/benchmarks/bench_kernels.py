#!/usr/bin/env python3
"""Times the compiled kernels against the numpy fallback on identical inputs.

Usage: python3 benchmarks/bench_kernels.py [--size 1024] [--repeats 5]

Both paths are imported directly (no env tricks needed) and checked for
bit-identical outputs while timing.
"""

import argparse
import time

import numpy as np

import spice.kernels as kernels
from spice.kernels import fallback

try:
    from spice.kernels import _native as native
except ImportError:
    native = None


def timeit(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=1024)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if native is None:
        print("compiled kernels are not built; nothing to compare")
        return

    n = args.size
    rng = np.random.default_rng(0)
    mask = (rng.random((n, n)) < 0.4).astype(np.float64)
    taps = kernels.gaussian_taps(0.02 * n)
    luma = rng.integers(0, 255001, (n, n)).astype(np.int64)
    taps8 = kernels.gaussian_taps(1.4, scale_bits=8)
    img = rng.random((n, n, 3))
    orig = rng.integers(0, 256, (n, n, 3), dtype=np.uint8)
    edit = rng.integers(0, 256, (n, n, 3), dtype=np.uint8)
    soft = np.round(rng.random((n, n)) * 255) / 255

    half = n // 2
    cases = [
        ("gaussian blur (mask)", lambda m: m.blur_sep_f64(mask, taps)),
        ("edge smoothing (int)", lambda m: m.blur_sep_i64(luma, taps8)),
        ("sobel", lambda m: m.sobel_i64(luma)),
        ("bilinear upscale x2", lambda m: m.resize_bilinear_f64(img, n * 2, n * 2)),
        ("area downscale /2", lambda m: m.resize_area_f64(img, half, half)),
        ("blend", lambda m: m.blend_u8(orig, edit, soft)),
        ("noise field", lambda m: m.noise_field(12345, 1, n, n, 3)),
        ("quantize", lambda m: m.quantize_u8(img)),
    ]

    print(f"size {n}x{n}, best of {args.repeats}\n")
    print(f"{'kernel':<24}{'fallback':>12}{'native':>12}{'speedup':>10}   identical")
    for name, fn in cases:
        t_fb, out_fb = timeit(lambda: fn(fallback), args.repeats)
        t_nat, out_nat = timeit(lambda: fn(native), args.repeats)
        if isinstance(out_fb, tuple):
            same = all(np.array_equal(a, b) for a, b in zip(out_fb, out_nat))
        else:
            same = np.array_equal(out_fb, out_nat)
        print(
            f"{name:<24}{t_fb * 1e3:>10.2f}ms{t_nat * 1e3:>10.2f}ms"
            f"{t_fb / t_nat:>9.2f}x   {'yes' if same else 'NO'}"
        )


if __name__ == "__main__":
    main()
