import json

import numpy as np
import pytest

from revdyn import (
    ChaosCertificate,
    check_chaos_conditions,
    eta_max_perturbed,
    game_with_equilibrium,
    iterate,
    perturbed_ppi_protocol,
    pl_map_from_values,
    reflect_protocol,
    xi_max_perturbed,
)
from revdyn.cli import main
from revdyn.scan import BifurcationScanConfig, bifurcation_scan, cobweb_export


def perturbed_maximal_protocol(p):
    g = game_with_equilibrium(p)
    return perturbed_ppi_protocol(g, eta_max_perturbed(g), xi_max_perturbed(g))


def short_config(**overrides):
    params = dict(delta_min=0.1, delta_max=1.0, delta_steps=7, transient=300, keep=20)
    params.update(overrides)
    return BifurcationScanConfig(**params)


def test_scan_row_count_and_default_seeds():
    prot = perturbed_maximal_protocol(0.4)
    config = short_config()
    result = bifurcation_scan(prot, config)
    assert result.seeds == (0.2, 0.7)
    rows = list(result.rows())
    assert len(rows) == config.delta_steps * len(result.seeds) * config.keep
    assert not result.skipped


def test_scan_deterministic_csv():
    prot = perturbed_maximal_protocol(0.4)
    config = short_config(max_workers=4)
    first = bifurcation_scan(prot, config).to_csv()
    second = bifurcation_scan(prot, config).to_csv()
    assert first == second
    assert first.splitlines()[0] == "delta,seed_index,iteration_index,x"


def test_scan_seed_order_changes_row_order_not_values():
    prot = perturbed_maximal_protocol(0.4)
    base = bifurcation_scan(prot, short_config())
    swapped = bifurcation_scan(prot, short_config(seed_order=(1, 0)))
    rows_base = list(base.rows())
    rows_swapped = list(swapped.rows())
    assert rows_base != rows_swapped
    assert sorted(rows_base) == sorted(rows_swapped)


def test_scan_skips_inadmissible_deltas():
    prot = perturbed_maximal_protocol(0.4)
    config = short_config(delta_min=0.5, delta_max=1.25, delta_steps=4)
    result = bifurcation_scan(prot, config)
    assert result.skipped  # deltas beyond the family cap are gaps, not errors
    skipped_deltas = {d for d, _ in result.skipped}
    assert all(d > 1.0 for d in skipped_deltas)
    rows = list(result.rows())
    kept = int(np.sum(result.admissible))
    assert len(rows) == kept * len(result.seeds) * config.keep


def test_scan_reflection_symmetry():
    # attracting regime: tails of the scan at p and its reflection mirror
    prot = perturbed_maximal_protocol(0.4)
    refl = reflect_protocol(prot)
    config = short_config(delta_min=0.05, delta_max=0.30, delta_steps=5,
                          transient=4000, keep=10, seeds=(0.2, 0.7))
    mirror = short_config(delta_min=0.05, delta_max=0.30, delta_steps=5,
                          transient=4000, keep=10, seeds=(0.8, 0.3))
    a = bifurcation_scan(prot, config)
    b = bifurcation_scan(refl, mirror)
    assert np.all(np.abs(a.states - (1.0 - b.states)) <= 1e-9)


def test_scan_fallback_without_displacement():
    # routed through map-level iteration when no exact displacement exists;
    # compared in the contracting regime, where the one-ulp arithmetic gap
    # between the rate-based and polynomial paths cannot amplify
    prot = perturbed_maximal_protocol(0.4)
    stripped = type(prot)(
        kind=prot.kind,
        game=prot.game,
        rho_ab=prot.rho_ab,
        rho_ba=prot.rho_ba,
        r_ab=prot.r_ab,
        r_ba=prot.r_ba,
        displacement=None,
        family="custom",
        params={},
    )
    config = short_config(delta_min=0.05, delta_max=0.3, delta_steps=3,
                          transient=50, keep=5, seeds=(0.2, 0.7))
    fast = bifurcation_scan(prot, config)
    slow = bifurcation_scan(stripped, config)
    assert np.allclose(fast.states, slow.states, atol=1e-9)


def test_cobweb_identity_degenerates():
    ident = pl_map_from_values([0.0, 1.0], [0.0, 1.0])
    csv = cobweb_export(ident, 0.42, 10, graph_points=11)
    stair = [line for line in csv.splitlines() if line.startswith("staircase")]
    assert len(stair) == 20
    assert len(set(stair)) == 1  # a single repeated point


FIG1B = dict(xs=[0.0, 0.2, 0.6, 1.0], ys=[0.0, 0.99, 0.01, 1.0])
FIG1A = dict(xs=[0.0, 0.2, 0.6, 1.0], ys=[0.0, 0.55, 0.35, 1.0])


def test_cobweb_chaotic_vs_settling_configs():
    chaotic = pl_map_from_values(**FIG1B)
    cert = check_chaos_conditions(chaotic, 0.2, 0.6)
    assert isinstance(cert, ChaosCertificate)
    orbit = iterate(chaotic, 0.3, 50)
    assert len(np.unique(np.round(orbit.samples, 6))) > 40  # no short cycle

    settling = pl_map_from_values(**FIG1A)
    report = check_chaos_conditions(settling, 0.2, 0.6)
    assert not isinstance(report, ChaosCertificate)
    tail = iterate(settling, 0.3, 200).samples[-5:]
    assert np.max(np.abs(tail - 13.0 / 30.0)) < 1e-6  # attracting fixed point


def test_cobweb_csv_shape():
    m = pl_map_from_values(**FIG1B)
    csv = cobweb_export(m, 0.3, 5, graph_points=21)
    lines = csv.splitlines()
    assert lines[0] == "kind,x,y"
    assert sum(1 for l in lines if l.startswith("graph")) == 21
    assert sum(1 for l in lines if l.startswith("staircase")) == 10


# ---------------------------------------------------------------------------
# CLI


def write_config(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


INNOV_CONFIG = {
    "p": 0.2,
    "protocol": {"kind": "innovative_constructed", "beta2": 2.0, "beta3": -1.0 / 3.0},
    "delta": 1.0,
}


def test_cli_certify_success(tmp_path, capsys):
    cfg = write_config(tmp_path, "c.json", INNOV_CONFIG)
    out = tmp_path / "cert.json"
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["certificate"]["branch"] == "(1',2')"
    assert doc["certificate"]["verified"] is True
    assert doc["stability_at_equilibrium"]["classification"] == "repelling"
    assert doc["certificate"]["period3"]


def test_cli_certify_no_certificate(tmp_path):
    cfg = write_config(
        tmp_path,
        "c.json",
        {"p": 0.4, "protocol": {"kind": "perturbed_ppi", "eta": "max", "xi": "max"},
         "delta": 0.5},
    )
    assert main(["certify", "--config", cfg, "--out", str(tmp_path / "o.json")]) == 3


def test_cli_certify_invalid_config(tmp_path, capsys):
    cfg = write_config(
        tmp_path, "bad.json",
        {"game": {"a": 2, "b": 1, "c": 1, "d": 0},
         "protocol": {"kind": "ppi"}, "delta": 1.0},
    )
    assert main(["certify", "--config", cfg]) == 4
    cfg2 = write_config(
        tmp_path, "bad2.json",
        {"p": 0.3, "protocol": {"kind": "nonsense"}, "delta": 1.0},
    )
    assert main(["certify", "--config", cfg2]) == 4
    capsys.readouterr()


def test_cli_certify_range_failure(tmp_path):
    g = game_with_equilibrium(0.4)
    cfg = write_config(
        tmp_path, "over.json",
        {"p": 0.4,
         "protocol": {"kind": "perturbed_ppi", "eta": 2 * eta_max_perturbed(g), "xi": 1.0},
         "delta": 1.0},
    )
    out = tmp_path / "o.json"
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 5
    doc = json.loads(out.read_text())
    assert doc["certificate"] is None
    assert not doc["range_check"]["ok"]


def test_cli_certify_truncated_maximal(tmp_path):
    cfg = write_config(
        tmp_path, "t.json",
        {"p": 0.25,
         "protocol": {"kind": "truncated_ppi", "eta": "max", "xi": "max",
                      "gamma": "lemma"},
         "delta": 1.0},
    )
    out = tmp_path / "t_out.json"
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["stability_at_equilibrium"]["classification"] == "repelling"
    assert doc["certificate"]["period3"]


def test_cli_simulate_csv(tmp_path):
    cfg = write_config(tmp_path, "s.json", {**INNOV_CONFIG, "x0": 0.25, "n": 2})
    out = tmp_path / "orbit.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert out.read_text().splitlines() == ["iteration,x", "0,0.25", "1,0.0", "2,1.0"]


def test_cli_bifurcate_deterministic(tmp_path):
    cfg = write_config(
        tmp_path, "b.json",
        {"p": 0.4, "protocol": {"kind": "perturbed_ppi", "eta": "max", "xi": "max"},
         "delta_min": 0.1, "delta_max": 1.0, "delta_steps": 5,
         "transient": 200, "keep": 10},
    )
    out1, out2 = tmp_path / "b1.csv", tmp_path / "b2.csv"
    assert main(["bifurcate", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["bifurcate", "--config", cfg, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0] == "delta,seed_index,iteration_index,x"
    assert len(lines) == 1 + 5 * 2 * 10


def test_cli_cobweb(tmp_path):
    cfg = write_config(
        tmp_path, "cw.json",
        {"map": {"kind": "pl_values", **FIG1B}, "x0": 0.3, "n": 50},
    )
    out = tmp_path / "cw.csv"
    assert main(["cobweb", "--config", cfg, "--out", str(out)]) == 0
    assert out.read_text().startswith("kind,x,y")


def test_cli_thresholds(tmp_path, capsys):
    out = tmp_path / "thr.csv"
    assert main(["thresholds", "--p", "0.4", "--p", "0.6", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("p,reflected,delta_1")
    row_04 = lines[1].split(",")
    row_06 = lines[2].split(",")
    assert float(row_04[5]) == pytest.approx(0.948808, abs=1e-5)
    assert row_06[1] == "1"  # reflected
    assert row_04[2:] == row_06[2:]  # p = 0.6 row equals the reflected p = 0.4 row
    assert main(["thresholds", "--p", "0.5"]) == 4
    capsys.readouterr()


def test_cli_periods(tmp_path):
    cfg = write_config(tmp_path, "p.json", {**INNOV_CONFIG, "n_max": 3})
    out = tmp_path / "p.json.out"
    assert main(["periods", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    periods = {o["period"] for o in doc["orbits"]}
    assert periods == {1, 2, 3}


def test_cli_reflected_truncated(tmp_path):
    # the reflected truncated family at maximal parameters certifies
    # directly: the mirrored map is onto and imitative, so f(z_l) = 1 and
    # f^2(z_l) = f(1) = 1 carry the conditions through the reflection
    cfg = write_config(
        tmp_path, "rt.json",
        {"p": 0.25,
         "protocol": {"kind": "truncated_ppi", "eta": "max", "xi": "max",
                      "gamma": "lemma", "reflect": True},
         "delta": 1.0},
    )
    out = tmp_path / "rt.json.out"
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["map"]["equilibrium"] == pytest.approx(0.75, abs=1e-12)
    assert doc["stability_at_equilibrium"]["classification"] == "repelling"
    assert doc["certificate"]["branch"] == "(1,2)"
    assert doc["certificate"]["verified"] is True


def test_cli_reflect_flag(tmp_path):
    # the condition pair does not transfer through reflection (it is
    # orientation-asymmetric), so no direct certificate: chaos is inherited
    # by conjugacy, visible here as a period-3 orbit plus repelling p
    cfg = write_config(
        tmp_path, "r.json",
        {"p": 0.2,
         "protocol": {"kind": "innovative_constructed", "beta2": 2.0,
                      "beta3": -1.0 / 3.0, "reflect": True},
         "delta": 1.0},
    )
    out = tmp_path / "r.json.out"
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 3
    doc = json.loads(out.read_text())
    assert doc["map"]["equilibrium"] == pytest.approx(0.8, abs=1e-12)
    assert doc["stability_at_equilibrium"]["classification"] == "repelling"
    assert doc["period3"] is not None
    assert "conjugacy" in doc["note"]
