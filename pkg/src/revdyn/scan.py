"""Parameter sweeps and trajectory exports for external plotting.

Bifurcation scans follow the standard protocol: for each step size on an
inclusive uniform grid, iterate each seed through a transient (default
20000 steps) and record the next ``keep`` states (default 100).  Step
sizes whose map fails the range check are skipped and logged as gaps, not
failures.  Grid points are independent work items executed concurrently;
rows are assembled in (delta, seed, iteration) order regardless of
execution order, and numbers are written in shortest round-trip decimal
form, so identical configs produce byte-identical CSV.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .dynamics import UpdateMap, build_update_map, default_probes, range_check
from .protocols import RevisionProtocol

DEFAULT_TRANSIENT = 20_000
DEFAULT_KEEP = 100
DEFAULT_DELTA_STEPS = 500


@dataclass(frozen=True)
class BifurcationScanConfig:
    """Sweep layout: delta grid, transient/keep lengths, seeds."""

    delta_min: float
    delta_max: float
    delta_steps: int = DEFAULT_DELTA_STEPS
    transient: int = DEFAULT_TRANSIENT
    keep: int = DEFAULT_KEEP
    seeds: Optional[Sequence[float]] = None  # default: the family's critical points
    seed_order: Optional[Sequence[int]] = None
    max_workers: Optional[int] = None

    def __post_init__(self):
        if not self.delta_min < self.delta_max:
            raise ValueError("need delta_min < delta_max")
        if self.delta_steps < 2 or self.transient < 1 or self.keep < 1:
            raise ValueError("delta_steps >= 2 and transient, keep >= 1 required")
        if self.seeds is not None:
            seeds = tuple(float(s) for s in self.seeds)
            if any(not 0.0 <= s <= 1.0 for s in seeds):
                raise ValueError(f"seeds must lie in [0, 1], got {seeds}")
            object.__setattr__(self, "seeds", seeds)
        if self.seed_order is not None:
            object.__setattr__(self, "seed_order", tuple(int(i) for i in self.seed_order))

    def deltas(self) -> np.ndarray:
        return np.linspace(self.delta_min, self.delta_max, self.delta_steps)


@dataclass
class ScanResult:
    """States per (delta, seed) plus the skipped grid points."""

    deltas: np.ndarray
    seeds: tuple
    seed_order: tuple
    keep: int
    states: np.ndarray  # (n_delta, n_seeds, keep); NaN rows for skipped deltas
    skipped: list = field(default_factory=list)

    @property
    def admissible(self) -> np.ndarray:
        return ~np.any(np.isnan(self.states), axis=(1, 2))

    def rows(self):
        """(delta, seed_index, iteration_index, x) in deterministic order."""
        for i, delta in enumerate(self.deltas):
            if not self.admissible[i]:
                continue
            for j in self.seed_order:
                for k in range(self.keep):
                    yield float(delta), j, k, float(self.states[i, j, k])

    def tail(self, delta_index: int, seed_index: int) -> np.ndarray:
        return self.states[delta_index, seed_index]

    def to_csv(self) -> str:
        lines = ["delta,seed_index,iteration_index,x"]
        lines.extend(
            f"{d!r},{j},{k},{x!r}" for d, j, k, x in self.rows()
        )
        return "\n".join(lines) + "\n"


def scan_seeds(protocol: RevisionProtocol, config: BifurcationScanConfig) -> tuple:
    """The seeds actually used: config override or family critical points.

    Defaults to the family's reference critical points, held fixed across
    the delta grid (the maps at small delta may have no interior extrema).
    """
    if config.seeds is not None:
        return tuple(config.seeds)
    delta_ref = min(config.delta_max, 1.0)
    try:
        m = build_update_map(protocol, delta_ref, enforce_delta_cap=False)
    except Exception:
        m = build_update_map(protocol, config.delta_min)
    return tuple(default_probes(m))


def bifurcation_scan(protocol: RevisionProtocol,
                     config: BifurcationScanConfig) -> ScanResult:
    """Sweep the delta grid, recording post-transient states per seed."""
    deltas = config.deltas()
    seeds = scan_seeds(protocol, config)
    seed_order = config.seed_order or tuple(range(len(seeds)))
    if sorted(seed_order) != list(range(len(seeds))):
        raise ValueError(f"seed_order must permute the seeds, got {seed_order}")

    states = np.full((len(deltas), len(seeds), config.keep), np.nan)
    skipped = []
    admissible_idx = []
    for i, delta in enumerate(deltas):
        try:
            m = build_update_map(protocol, float(delta))
        except Exception as exc:
            skipped.append((float(delta), str(exc)))
            continue
        if not m.is_interval_map:
            skipped.append(
                (float(delta), f"range check failed: {m.range_report.to_json()}")
            )
            continue
        admissible_idx.append(i)

    if protocol.displacement is not None and admissible_idx:
        disp = protocol.displacement
        idx = np.asarray(admissible_idx)
        workers = config.max_workers or min(4, os.cpu_count() or 1)
        chunks = np.array_split(idx, max(1, min(workers * 4, len(idx))))

        def run(chunk):
            block, dead = kernels.sweep(
                disp.breakpoints,
                disp.coeffs,
                np.asarray(deltas[chunk], dtype=float),
                np.asarray(seeds, dtype=float),
                config.transient,
                config.keep,
            )
            return chunk, block, dead

        if workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run, chunks))
        else:
            results = [run(chunk) for chunk in chunks]
        for chunk, block, dead in results:
            states[chunk] = block
            for local, i in enumerate(chunk):
                for j in range(len(seeds)):
                    if dead[local, j]:
                        skipped.append(
                            (float(deltas[i]), f"orbit from seed {j} escaped [0, 1]")
                        )
    else:
        from .dynamics import iterate

        for i in admissible_idx:
            m = build_update_map(protocol, float(deltas[i]))
            for j, seed in enumerate(seeds):
                try:
                    orbit = iterate(m, seed, config.transient + config.keep)
                    states[i, j] = orbit.samples[config.transient + 1:]
                except RuntimeError as exc:
                    skipped.append((float(deltas[i]), str(exc)))

    return ScanResult(
        deltas=deltas,
        seeds=seeds,
        seed_order=tuple(seed_order),
        keep=config.keep,
        states=states,
        skipped=skipped,
    )


def cobweb_export(m: UpdateMap, x0: float, n: int, graph_points: int = 1025) -> str:
    """CSV of the cobweb staircase plus a dense sampling of the map graph.

    Staircase rows alternate (x_k, x_{k+1}) and (x_{k+1}, x_{k+1}) for n
    steps; graph rows sample (x, f(x)) uniformly.
    """
    if not m.is_interval_map:
        report = range_check(m)
        raise RuntimeError(f"map fails range check: {report.to_json()}")
    lines = ["kind,x,y"]
    xs = np.linspace(0.0, 1.0, graph_points)
    ys = np.asarray(m(xs), dtype=float)
    lines.extend(f"graph,{float(a)!r},{float(b)!r}" for a, b in zip(xs, ys))
    x = float(x0)
    for _ in range(n):
        fx = float(m(x))
        lines.append(f"staircase,{x!r},{fx!r}")
        lines.append(f"staircase,{fx!r},{fx!r}")
        x = fx
    return "\n".join(lines) + "\n"
