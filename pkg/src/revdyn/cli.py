"""Command-line driver.

Subcommands: certify, simulate, bifurcate, cobweb, thresholds, periods.
Every run is configured by a JSON document (--config, or inline flags for
thresholds).  Exit codes: 0 success / certificate found, 3 no certificate,
4 invalid configuration, 5 range-check failure.

Config keys (shared): either "game": {"a","b","c","d"} or "p" (plus
optional "b_minus_d"); "protocol": {"kind": ppi|pc|perturbed_ppi|
truncated_ppi|innovative_constructed|imitative_constructed, parameters,
"reflect": bool} or "map" for direct piecewise-linear maps; "delta".
Numeric parameters of the perturbed/truncated families accept the string
"max" for the largest admissible value, and "gamma" accepts "lemma" for
p + p^2/2.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .chaos import (
    ChaosCertificate,
    basin_probe,
    check_chaos_conditions,
    delta_threshold_perturbed,
    delta_threshold_truncated,
    find_period3,
    find_periodic_orbits,
    one_sided_derivatives,
)
from .dynamics import (
    MapRangeError,
    OrbitError,
    build_update_map,
    default_probes,
    iterate,
    orbit_to_csv,
    pl_bimodal_imitative,
    pl_bimodal_innovative,
    pl_map_from_values,
    range_check,
)
from .games import GameError, game_from_json, game_with_equilibrium
from .protocols import (
    ProtocolError,
    eta_max_perturbed,
    eta_max_truncated,
    imitative_chaotic_protocol,
    innovative_chaotic_protocol,
    pairwise_comparison_protocol,
    perturbed_ppi_protocol,
    ppi_protocol,
    reflect_protocol,
    truncated_ppi_protocol,
    xi_max_perturbed,
)
from .scan import BifurcationScanConfig, bifurcation_scan, cobweb_export

EXIT_OK = 0
EXIT_NO_CERTIFICATE = 3
EXIT_INVALID_CONFIG = 4
EXIT_RANGE_CHECK = 5


class ConfigError(ValueError):
    pass


def _load_config(path: str) -> dict:
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc


def _resolve_game(cfg: dict):
    if "game" in cfg:
        return game_from_json(cfg["game"])
    if "p" in cfg:
        return game_with_equilibrium(float(cfg["p"]), float(cfg.get("b_minus_d", 1.0)))
    raise ConfigError('config needs "game" or "p"')


def _resolve_number(value, maximum, name):
    if value == "max":
        return maximum
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid {name}: {value!r}") from None


def _resolve_protocol(cfg: dict):
    game = _resolve_game(cfg)
    spec = cfg.get("protocol")
    if spec is None:
        raise ConfigError('config needs a "protocol" section')
    kind = spec.get("kind")
    if kind == "ppi":
        protocol = ppi_protocol(game)
    elif kind == "pc":
        protocol = pairwise_comparison_protocol(game)
    elif kind == "perturbed_ppi":
        eta = _resolve_number(spec.get("eta", 1.0), eta_max_perturbed(game), "eta")
        xi = _resolve_number(spec.get("xi", 1.0), xi_max_perturbed(game), "xi")
        protocol = perturbed_ppi_protocol(game, eta, xi)
    elif kind == "truncated_ppi":
        eta = _resolve_number(spec.get("eta", 1.0), eta_max_truncated(game), "eta")
        xi = _resolve_number(spec.get("xi", 1.0), xi_max_perturbed(game), "xi")
        p = game.equilibrium
        gamma = spec.get("gamma", "lemma")
        gamma = p + p * p / 2.0 if gamma == "lemma" else float(gamma)
        protocol = truncated_ppi_protocol(game, eta, xi, gamma)
    elif kind == "innovative_constructed":
        protocol = innovative_chaotic_protocol(
            game, float(spec["beta2"]), float(spec["beta3"])
        )
    elif kind == "imitative_constructed":
        protocol = imitative_chaotic_protocol(game)
    else:
        raise ConfigError(f"unknown protocol kind: {kind!r}")
    if spec.get("reflect"):
        protocol = reflect_protocol(protocol)
    return protocol


def _resolve_map(cfg: dict):
    """An update map from either a "map" section or protocol + delta."""
    spec = cfg.get("map")
    if spec is not None:
        kind = spec.get("kind")
        if kind == "pl_innovative":
            return pl_bimodal_innovative(
                spec["c_l"], spec["c_r"], spec["beta1"], spec["beta2"], spec["beta3"]
            )
        if kind == "pl_imitative":
            return pl_bimodal_imitative(spec["c_l"], spec["c_r"], spec["beta2"])
        if kind == "pl_values":
            return pl_map_from_values(spec["xs"], spec["ys"])
        raise ConfigError(f"unknown map kind: {kind!r}")
    protocol = _resolve_protocol(cfg)
    delta = cfg.get("delta")
    if delta is None:
        raise ConfigError('config needs "delta"')
    return build_update_map(protocol, float(delta))


def _write(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, default=_json_default) + "\n"


# ---------------------------------------------------------------------------
# Subcommands


def cmd_certify(args) -> int:
    cfg = _load_config(args.config)
    m = _resolve_map(cfg)
    doc: dict = {"tool_version": __version__, "map": m.describe()}
    report = range_check(m, grid_size=args.grid, tolerance=args.tolerance)
    doc["range_check"] = report.to_json()
    if not report.ok:
        doc["certificate"] = None
        doc["error"] = "map is not an interval self-map"
        _write(_dump(doc), args.out)
        return EXIT_RANGE_CHECK

    if m.equilibrium is not None and 0.0 < m.equilibrium < 1.0:
        stability = one_sided_derivatives(m, m.equilibrium)
        doc["stability_at_equilibrium"] = stability.to_json()
        if stability.classification == "inconclusive":
            doc["stability_at_equilibrium"]["basin_probe"] = basin_probe(
                m, m.equilibrium
            )

    probes = cfg.get("probes")
    z_l, z_r = (float(probes[0]), float(probes[1])) if probes else default_probes(m)
    doc["probes"] = [z_l, z_r]
    result = check_chaos_conditions(m, z_l, z_r)
    period3 = result.period3 if isinstance(result, ChaosCertificate) else find_period3(m)
    doc["period3"] = list(period3) if period3 else None
    if isinstance(result, ChaosCertificate):
        doc["certificate"] = result.to_json()
        doc["certificate"]["verified"] = result.verify(m)
        _write(_dump(doc), args.out)
        return EXIT_OK
    doc["certificate"] = None
    doc["conditions"] = result.to_json()
    if "~reflected" in m.family or "~conjugate" in m.family:
        doc["note"] = (
            "the condition pair is orientation-asymmetric and need not "
            "transfer through a reflection; the unreflected twin's chaos "
            "carries over by conjugacy, so certify that twin directly"
        )
    _write(_dump(doc), args.out)
    return EXIT_NO_CERTIFICATE


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    m = _resolve_map(cfg)
    if not m.is_interval_map:
        _write(_dump({"error": m.range_report.to_json()}), args.out)
        return EXIT_RANGE_CHECK
    x0 = float(cfg.get("x0", m.equilibrium if m.equilibrium is not None else 0.5))
    n = int(cfg.get("n", 1000))
    orbit = iterate(m, x0, n)
    if args.format == "json":
        _write(
            _dump({"x0": x0, "delta": m.delta, "samples": list(map(float, orbit.samples))}),
            args.out,
        )
    else:
        _write(orbit_to_csv(orbit), args.out)
    return EXIT_OK


def cmd_bifurcate(args) -> int:
    cfg = _load_config(args.config)
    protocol = _resolve_protocol(cfg)
    config = BifurcationScanConfig(
        delta_min=float(cfg["delta_min"]),
        delta_max=float(cfg["delta_max"]),
        delta_steps=int(cfg.get("delta_steps", 500)),
        transient=int(cfg.get("transient", 20000)),
        keep=int(cfg.get("keep", 100)),
        seeds=cfg.get("seeds"),
        seed_order=cfg.get("seed_order"),
    )
    result = bifurcation_scan(protocol, config)
    for delta, reason in result.skipped:
        print(f"skipped delta={delta!r}: {reason}", file=sys.stderr)
    if args.format == "json":
        doc = {
            "seeds": list(result.seeds),
            "seed_order": list(result.seed_order),
            "rows": [list(row) for row in result.rows()],
            "skipped": result.skipped,
        }
        _write(_dump(doc), args.out)
    else:
        _write(result.to_csv(), args.out)
    return EXIT_OK


def cmd_cobweb(args) -> int:
    cfg = _load_config(args.config)
    m = _resolve_map(cfg)
    if not m.is_interval_map:
        _write(_dump({"error": m.range_report.to_json()}), args.out)
        return EXIT_RANGE_CHECK
    x0 = float(cfg.get("x0", 0.3))
    n = int(cfg.get("n", 50))
    _write(cobweb_export(m, x0, n), args.out)
    return EXIT_OK


def cmd_thresholds(args) -> int:
    if args.config:
        cfg = _load_config(args.config)
        p_values = cfg.get("p_grid", [])
    else:
        p_values = args.p or []
    if not p_values:
        raise ConfigError("thresholds needs a p grid (--p or config p_grid)")
    header = (
        "p,reflected,delta_1,delta_2,delta_3,delta_p,"
        "delta_star_1,delta_star_2,delta_star_3,delta_star_4,delta_star_5,delta_star_p"
    )
    lines = [header]
    for raw in p_values:
        p = float(raw)
        if p <= 0.0 or p >= 1.0 or p == 0.5:
            raise ConfigError(
                f"threshold formulas are defined for p in (0,1) minus 1/2, got {p}"
            )
        reflected = p > 0.5
        q = 1.0 - p if reflected else p
        pert = delta_threshold_perturbed(q)
        trunc = delta_threshold_truncated(q)
        cells = [repr(p), "1" if reflected else "0"]
        cells += [repr(pert.components[k]) for k in ("delta_1", "delta_2", "delta_3")]
        cells.append(repr(pert.threshold))
        cells += [
            repr(trunc.components[k])
            for k in ("delta_star_1", "delta_star_2", "delta_star_3",
                      "delta_star_4", "delta_star_5")
        ]
        cells.append(repr(trunc.threshold))
        lines.append(",".join(cells))
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_periods(args) -> int:
    cfg = _load_config(args.config)
    m = _resolve_map(cfg)
    if not m.is_interval_map:
        _write(_dump({"error": m.range_report.to_json()}), args.out)
        return EXIT_RANGE_CHECK
    n_max = int(cfg.get("n_max", 7))
    orbits = find_periodic_orbits(m, n_max, tol=max(args.tolerance, 1e-9))
    if args.format == "csv":
        lines = ["period,orbit_index,point_index,x"]
        for idx, (period, points) in enumerate(orbits):
            for k, x in enumerate(points):
                lines.append(f"{period},{idx},{k},{x!r}")
        _write("\n".join(lines) + "\n", args.out)
    else:
        doc = {
            "n_max": n_max,
            "orbits": [
                {"period": period, "points": list(points)} for period, points in orbits
            ],
        }
        _write(_dump(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revdyn",
        description="Discrete-time revision-protocol dynamics: certification, "
        "simulation, and parameter sweeps for 2x2 anti-coordination games.",
    )
    parser.add_argument("--version", action="version", version=f"revdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler, needs_config in (
        ("certify", cmd_certify, True),
        ("simulate", cmd_simulate, True),
        ("bifurcate", cmd_bifurcate, True),
        ("cobweb", cmd_cobweb, True),
        ("thresholds", cmd_thresholds, False),
        ("periods", cmd_periods, True),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=needs_config,
                        help="path to a JSON config ('-' for stdin)")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"),
                        default="json" if name in ("certify", "periods") else "csv")
        sp.add_argument("--grid", type=int, default=100_001,
                        help="grid size for range checks")
        sp.add_argument("--tolerance", type=float, default=1e-12)
        if name == "thresholds":
            sp.add_argument("--p", action="append", type=float,
                            help="equilibrium value (repeatable)")
        sp.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, GameError, ProtocolError, KeyError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except (MapRangeError, OrbitError) as exc:
        print(f"range-check failure: {exc}", file=sys.stderr)
        return EXIT_RANGE_CHECK


if __name__ == "__main__":
    sys.exit(main())
