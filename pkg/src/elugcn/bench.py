"""Runtime scaling checks for the low-rank update and the final assembly.

The update step should scale close to linearly in the node count at a
fixed class count; the one-off assembly is quadratic. ``run_bench`` times
both on synthetic inputs and reports per-size medians plus consecutive
doubling ratios.
"""

import time

import numpy as np

from .elugraph import assemble_s_star, q_update


def _best_time(fn, repeats, min_sample_s=0.02):
    """Minimum per-call time; calls are batched so samples are measurable.

    The minimum over repetitions is the least noisy scaling estimator, and
    batching fast calls keeps timer resolution out of the ratios.
    """
    t0 = time.perf_counter()
    fn()
    probe = time.perf_counter() - t0
    inner = int(min(50, max(1, np.ceil(min_sample_s / max(probe, 1e-9)))))
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        times.append((time.perf_counter() - t0) / inner)
    return float(np.min(times))


def bench_size(n, c, beta, repeats, rng):
    """Best-of-repeats step and assembly seconds for one problem size."""
    h = rng.random((n, c))
    h /= h.sum(axis=1, keepdims=True)
    q = np.zeros((n, c))
    labeled = rng.choice(n, size=max(c * 20, 1), replace=False)
    q[labeled, rng.integers(0, c, size=len(labeled))] = 1.0
    clamp = np.sort(labeled)
    y = q.copy()

    def step():
        q_update(h, q, beta, clamp, y)

    sink = np.zeros(1)

    def consume(start, block):
        # touch the block so the product cannot be elided, store nothing
        sink[0] += float(block[0, 0])

    def assembly():
        assemble_s_star(h, q, beta, consume=consume)

    step()  # warm-up
    t_step = _best_time(step, repeats)
    assembly()
    t_assembly = _best_time(assembly, repeats)
    return {"n": n, "t_step_s": t_step, "t_assembly_s": t_assembly}


def run_bench(sizes, c, beta, repeats, seed):
    """Time every size and derive doubling ratios between consecutive sizes."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows = [bench_size(n, c, beta, repeats, rng) for n in sizes]
    ratios = []
    for prev, cur in zip(rows, rows[1:]):
        scale = cur["n"] / prev["n"]
        ratios.append(
            {
                "n_from": prev["n"],
                "n_to": cur["n"],
                "size_ratio": scale,
                "step_time_ratio": cur["t_step_s"] / max(prev["t_step_s"], 1e-12),
                "assembly_time_ratio": cur["t_assembly_s"] / max(prev["t_assembly_s"], 1e-12),
            }
        )
    return rows, ratios
