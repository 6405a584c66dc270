"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Each row reports the best wall time over ``repeat`` calls for both backends
and the largest absolute difference between their outputs.
"""

import argparse
import timeit

import numpy as np

from truncnoise import kernels


def cases(rng):
    x = np.linspace(-5.0, 5.0, 2000)
    f = np.sort(rng.uniform(-5.0, 0.0, 500))
    b = rng.uniform(0.5, 1.5, 500)
    gs = rng.standard_normal(x.size)
    u = rng.random(3000)
    v = rng.random(3000)
    return {
        "stack_forward (2000 x 500)": lambda: kernels.stack_forward(x, 0.7, b, f, 500.0),
        "stack_backward (2000 x 500)": lambda: kernels.stack_backward(x, 0.7, b, f, 500.0, gs),
        "conv_full (3000 * 3000)": lambda: kernels.conv_full(u, v),
    }


def flatten(out):
    if isinstance(out, tuple):
        return np.concatenate([np.atleast_1d(np.asarray(o, dtype=float)) for o in out])
    return np.asarray(out, dtype=float)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled kernels are not built; only the numpy fallback is available")
        return 1
    work = cases(np.random.default_rng(0))
    print(f"{'kernel':32s} {'cython ms':>10s} {'numpy ms':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, call in work.items():
        timings, outputs = {}, {}
        for backend in ("cython", "numpy"):
            previous = kernels.use_backend(backend)
            try:
                outputs[backend] = flatten(call())
                timings[backend] = min(timeit.repeat(call, number=1, repeat=args.repeat))
            finally:
                kernels.use_backend(previous)
        diff = float(np.max(np.abs(outputs["cython"] - outputs["numpy"])))
        print(f"{name:32s} {1e3 * timings['cython']:10.3f} {1e3 * timings['numpy']:10.3f} "
              f"{timings['numpy'] / timings['cython']:8.2f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
