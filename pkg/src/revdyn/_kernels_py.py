"""Pure-Python/numpy iteration kernels (fallback backend).

Same contracts as the compiled extension ``_speedups``:

* ``iterate_map(breaks, coeffs, x0, n, clamp_tol)`` -> (samples, status)
  where samples holds x0..x_n and status is -1 on success or the index of
  the first state escaping [0 - clamp_tol, 1 + clamp_tol].  Sub-tolerance
  round-off excursions are snapped back to the boundary.

* ``sweep(breaks, disp_coeffs, deltas, seeds, transient, keep, clamp_tol)``
  -> (states, dead) iterating x + delta * d(x) for every (delta, seed)
  pair in lockstep; states has shape (len(deltas), len(seeds), keep) and
  dead marks pairs that escaped (their states are NaN).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def eval_poly(breaks, coeffs, x):
    """Vectorized piecewise-polynomial evaluation (half-open pieces)."""
    x = np.asarray(x, dtype=float)
    n_pieces = len(breaks) - 1
    if n_pieces == 1:
        out = np.full_like(x, coeffs[0, -1])
        for k in range(coeffs.shape[1] - 2, -1, -1):
            out *= x
            out += coeffs[0, k]
        return out
    idx = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, n_pieces - 1)
    out = np.empty_like(x)
    for i in range(n_pieces):
        mask = idx == i
        if not np.any(mask):
            continue
        xs = x[mask]
        vals = np.full_like(xs, coeffs[i, -1])
        for k in range(coeffs.shape[1] - 2, -1, -1):
            vals *= xs
            vals += coeffs[i, k]
        out[mask] = vals
    return out


def _eval_scalar(breaks, coeffs, x):
    i = int(np.searchsorted(breaks, x, side="right")) - 1
    i = min(max(i, 0), len(breaks) - 2)
    out = 0.0
    for k in range(coeffs.shape[1] - 1, -1, -1):
        out = out * x + coeffs[i, k]
    return out


def iterate_map(breaks, coeffs, x0, n, clamp_tol=1e-12):
    samples = np.empty(n + 1)
    samples[0] = x = float(x0)
    for step in range(1, n + 1):
        x = _eval_scalar(breaks, coeffs, x)
        if not 0.0 <= x <= 1.0:
            if -clamp_tol <= x < 0.0:
                x = 0.0
            elif 1.0 < x <= 1.0 + clamp_tol:
                x = 1.0
            else:
                samples[step] = x
                return samples[: step + 1], step
        samples[step] = x
    return samples, -1


def sweep(breaks, disp_coeffs, deltas, seeds, transient, keep, clamp_tol=1e-12):
    deltas = np.asarray(deltas, dtype=float)
    seeds = np.asarray(seeds, dtype=float)
    n_d, n_s = len(deltas), len(seeds)
    x = np.repeat(seeds[np.newaxis, :], n_d, axis=0).reshape(-1)
    dvec = np.repeat(deltas, n_s)
    alive = np.ones(x.size, dtype=bool)
    states = np.full((x.size, keep), np.nan)

    def advance(xs):
        disp = eval_poly(breaks, disp_coeffs, xs)
        return xs + dvec * disp

    for _ in range(transient):
        nxt = advance(x)
        np.copyto(nxt, 0.0, where=(nxt < 0.0) & (nxt >= -clamp_tol))
        np.copyto(nxt, 1.0, where=(nxt > 1.0) & (nxt <= 1.0 + clamp_tol))
        escaped = alive & ((nxt < 0.0) | (nxt > 1.0))
        alive &= ~escaped
        x = np.where(alive, nxt, x)
    for j in range(keep):
        nxt = advance(x)
        np.copyto(nxt, 0.0, where=(nxt < 0.0) & (nxt >= -clamp_tol))
        np.copyto(nxt, 1.0, where=(nxt > 1.0) & (nxt <= 1.0 + clamp_tol))
        escaped = alive & ((nxt < 0.0) | (nxt > 1.0))
        alive &= ~escaped
        x = np.where(alive, nxt, x)
        states[alive, j] = x[alive]
    dead = ~alive
    states[dead, :] = np.nan
    return states.reshape(n_d, n_s, keep), dead.reshape(n_d, n_s)
