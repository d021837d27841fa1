"""Monte Carlo oracle: sample BS fields around the typical user and form the SINR directly.

Trials are generated in fixed-size blocks. Block ``b`` draws from its own
generator seeded by ``(seed, b)``, so a run is bit-identical for any worker
count or scheduling order. Interference from beyond the simulation window is
replaced by its Campbell mean (see :func:`estimate_truncation_bias`) unless
``compensate=False``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

BLOCK_TRIALS = 2048
MIN_RADIUS_FACTOR = 5.0
DEFAULT_RADIUS_FACTOR = 10.0
CSV_COLUMNS = ("sinr", "P", "J_C", "J_Cbar", "active_count")


@dataclass
class SampleSet:
    sinr: np.ndarray
    useful: np.ndarray
    intra: np.ndarray
    outer: np.ndarray
    csi: np.ndarray
    active_count: np.ndarray
    cluster_count: np.ndarray
    seed: int
    scenario_digest: str
    sim_radius: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.sinr)

    @property
    def denominator(self):
        return self.intra + self.outer + self.csi + self.meta["noise"]


def estimate_truncation_bias(scn, sim_radius):
    """Campbell mean of the interference from BSs beyond ``sim_radius``."""
    return 2.0 * math.pi * scn.density / (scn.alpha - 2.0) * sim_radius ** (2.0 - scn.alpha)


def default_sim_radius(scn, *, compensate=True, rel_bias=1e-3):
    """10 D when the far field is compensated; otherwise also large enough for the bias budget."""
    base = DEFAULT_RADIUS_FACTOR * scn.radius
    if compensate:
        return base
    from .gamma_fit import interference_moments

    budget = rel_bias * (interference_moments(scn, include_csi=False)[0] - 1.0 / scn.snr)
    # solve (2 pi lambda / (alpha - 2)) R^(2 - alpha) = budget
    needed = (budget * (scn.alpha - 2.0) / (2.0 * math.pi * scn.density)) ** (1.0 / (2.0 - scn.alpha))
    return max(base, needed)


def worker_count(requested=None):
    cap = os.environ.get("NCJT_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _block_rng(seed, block):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(block,))))


def _ring_powers(rng, fading, alpha, counts, r_in, r_out):
    """Received powers of uniform points in the ring r_in < r < r_out and their trial index."""
    total = int(counts.sum())
    idx = np.repeat(np.arange(len(counts)), counts)
    u = rng.random(total)
    r2 = r_in * r_in + u * (r_out * r_out - r_in * r_in)
    gain = fading.sample(rng, total) if total else np.empty(0)
    power = gain * np.exp(-0.5 * alpha * np.log(r2)) if total else np.empty(0)
    return idx, power, r2


def _per_trial(idx, weights, n):
    # bincount returns integers when there is nothing to add
    return np.bincount(idx, weights=weights, minlength=n).astype(float, copy=False)


def _simulate_block(args):
    scn, seed, block, n, sim_radius, compensate, sizes, csi_noise = args
    rng = _block_rng(seed, block)
    D = scn.radius
    if sizes is not None:
        in_counts = np.asarray(sizes, dtype=np.int64)
    elif scn.conditional:
        in_counts = np.full(n, scn.cluster_size, dtype=np.int64)
    else:
        in_counts = rng.poisson(scn.density * math.pi * D * D, n)
    out_counts = rng.poisson(scn.density * math.pi * (sim_radius**2 - D * D), n)

    idx, power, r2 = _ring_powers(rng, scn.fading, scn.alpha, in_counts, 0.0, D)
    active = power >= scn.threshold
    out_idx, out_power, _ = _ring_powers(rng, scn.fading, scn.alpha, out_counts, D, sim_radius)

    outer = _per_trial(out_idx, out_power, n)
    if compensate:
        outer += estimate_truncation_bias(scn, sim_radius)
    if scn.scheduling == "FR":
        intra = _per_trial(idx, np.where(active, 0.0, power), n)
    else:
        intra = np.zeros(n)
    noise = 1.0 / scn.snr
    if scn.pilots is None:
        useful = _per_trial(idx, np.where(active, power, 0.0), n)
        csi = np.zeros(n)
    else:
        if csi_noise == "exact":
            # per-link estimation error with this trial's own out-of-cluster interference
            per_link = scn.pilots / np.maximum(in_counts[idx], 1) / (outer[idx] + noise)
        else:
            from .csi import mean_out_cluster_interference

            per_link = scn.pilots / np.maximum(in_counts[idx], 1) / (mean_out_cluster_interference(scn) + noise)
        mse = 1.0 / (1.0 + np.exp(-0.5 * scn.alpha * np.log(r2)) * per_link)
        served = np.where(active, power, 0.0)
        useful = _per_trial(idx, (1.0 - mse) * served, n)
        csi = _per_trial(idx, mse * served, n)
    active_count = np.bincount(idx, weights=active, minlength=n).astype(np.int64)
    sinr = useful / (intra + outer + csi + noise)
    return sinr, useful, intra, outer, csi, active_count, in_counts


def run(scn, trials, seed, sim_radius=None, *, workers=None, compensate=True, cluster_sizes=None, csi_noise="exact"):
    """Simulate ``trials`` independent snapshots; see the module docstring for reproducibility.

    ``csi_noise`` selects the estimation noise inside the MMSE factor in pilot
    mode: ``"exact"`` uses each trial's own out-of-cluster interference,
    ``"mean"`` its expectation (the approximation made by the analysis).
    """
    if csi_noise not in ("exact", "mean"):
        raise DomainError("csi_noise must be 'exact' or 'mean'")
    if trials < 1:
        raise DomainError("trials must be positive")
    if trials > 2**40:
        raise DomainError("trial count too large")
    if sim_radius is None:
        sim_radius = default_sim_radius(scn, compensate=compensate)
    if sim_radius < MIN_RADIUS_FACTOR * scn.radius:
        raise DomainError(f"simulation radius must be at least {MIN_RADIUS_FACTOR:g} D")
    if cluster_sizes is not None:
        cluster_sizes = np.asarray(cluster_sizes, dtype=np.int64)
        if cluster_sizes.shape != (trials,) or np.any(cluster_sizes < 0):
            raise DomainError("cluster_sizes must hold one nonnegative count per trial")
    seed = int(seed) & (2**64 - 1)
    n_blocks = -(-trials // BLOCK_TRIALS)
    jobs = []
    for b in range(n_blocks):
        lo = b * BLOCK_TRIALS
        hi = min(trials, lo + BLOCK_TRIALS)
        sizes = None if cluster_sizes is None else cluster_sizes[lo:hi]
        jobs.append((scn, seed, b, hi - lo, sim_radius, compensate, sizes, csi_noise))
    n_workers = min(worker_count(workers), n_blocks)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(_simulate_block, jobs, chunksize=max(1, n_blocks // (4 * n_workers))))
    else:
        parts = [_simulate_block(job) for job in jobs]
    cols = [np.concatenate(c) for c in zip(*parts)]
    return SampleSet(
        *cols,
        seed=seed,
        scenario_digest=scn.digest(),
        sim_radius=float(sim_radius),
        meta={"noise": 1.0 / scn.snr, "compensated": compensate, "trials": trials, "csi_noise": csi_noise},
    )


def dkw_epsilon(n, level=0.99):
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band."""
    return math.sqrt(math.log(2.0 / (1.0 - level)) / (2.0 * n))


def ecdf(values, grid):
    values = np.sort(np.asarray(values))
    return np.searchsorted(values, np.asarray(grid, dtype=float), side="right") / len(values)


def empirical_cdf(samples, grid, *, column="sinr"):
    from .sinr import CdfCurve

    if len(samples) == 0:
        raise DomainError("empty sample set")
    grid = np.asarray(grid, dtype=float)
    p = ecdf(getattr(samples, column), grid)
    meta = {
        "kind": "empirical",
        "scenario": samples.scenario_digest,
        "trials": len(samples),
        "seed": samples.seed,
        "sim_radius": samples.sim_radius,
        "dkw_99": dkw_epsilon(len(samples)),
    }
    return CdfCurve(grid, p, p.copy(), p.copy(), None, meta).check()


def kolmogorov_distance(values, cdf):
    """sup |F_n - F| for a continuous model CDF ``cdf`` (vectorized callable)."""
    x = np.sort(np.asarray(values))
    n = len(x)
    f = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def write_csv(samples, path):
    table = np.column_stack([samples.sinr, samples.useful, samples.intra, samples.outer])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row, act in zip(table, samples.active_count):
            fh.write(",".join(f"{v:.17g}" for v in row) + f",{act}\n")
