import numpy as np
import pytest

from revdyn import (
    ATTRACTING,
    INCONCLUSIVE,
    REPELLING,
    AntiCoordinationGame,
    ChaosCertificate,
    ChaosSearchError,
    ConditionReport,
    ProtocolError,
    build_update_map,
    check_chaos_conditions,
    conjugate_map,
    delta_star_symmetric,
    delta_threshold_perturbed,
    delta_threshold_truncated,
    eta_max_perturbed,
    eta_max_truncated,
    find_period3,
    find_periodic_orbits,
    find_witness,
    game_with_equilibrium,
    imitative_chaotic_protocol,
    innovative_chaotic_protocol,
    one_sided_derivatives,
    perturbed_ppi_protocol,
    pl_map_from_values,
    ppi_protocol,
    scrambled_pair_stat,
    truncated_ppi_protocol,
    xi_max_perturbed,
)

# Period-3 orbits computed with an exact rational brute-force oracle
# (compose the paper maps' affine branches over Fraction grids, solve the
# affine fixed-point equations, keep consistent non-fixed solutions).
INNOV_P3_ORBITS = [
    (9 / 95, 59 / 95, 43 / 190),
    (5 / 31, 11 / 31, 13 / 62),
]
IMIT_P3_ORBITS = [
    (542 / 1865, 1358 / 1865, 1046 / 1865),
    (7 / 22, 71 / 110, 47 / 110),
]


def innovative_map(delta=1.0):
    g = game_with_equilibrium(0.2)
    return build_update_map(innovative_chaotic_protocol(g, 2.0, -1.0 / 3.0), delta)


def imitative_map():
    return build_update_map(imitative_chaotic_protocol(game_with_equilibrium(0.4)), 1.0)


def perturbed_maximal(p, delta):
    g = game_with_equilibrium(p)
    prot = perturbed_ppi_protocol(g, eta_max_perturbed(g), xi_max_perturbed(g))
    return build_update_map(prot, delta)


def test_certificate_innovative_branch_prime():
    cert = check_chaos_conditions(innovative_map(), 0.25, 0.4)
    assert isinstance(cert, ChaosCertificate)
    assert cert.branch == "(1',2')"
    assert cert.f_zr == pytest.approx(0.3, abs=1e-12)
    assert cert.f_zl == pytest.approx(0.0, abs=1e-12)
    assert cert.f2_zl == pytest.approx(1.0, abs=1e-12)
    assert cert.witness == pytest.approx(0.375, abs=1e-9)
    assert cert.verify(innovative_map())


def test_certificate_perturbed_branch_main():
    cert = check_chaos_conditions(perturbed_maximal(0.4, 1.0), 0.2, 0.7)
    assert isinstance(cert, ChaosCertificate)
    assert cert.branch == "(1,2)"
    assert cert.f_zl == pytest.approx(1.0, abs=1e-12)
    assert cert.f_zr == pytest.approx(0.0, abs=1e-12)
    assert cert.f2_zl == pytest.approx(1.0, abs=1e-12)


def test_identity_map_yields_failure_report():
    ident = pl_map_from_values([0.0, 1.0], [0.0, 1.0])
    report = check_chaos_conditions(ident, 0.3, 0.6)
    assert isinstance(report, ConditionReport)
    assert "f2(z_l) > z_r" in report.failures
    assert not report.ok


def test_certificate_self_verification_roundtrip():
    m = imitative_map()
    cert = check_chaos_conditions(m, 0.2, 0.48)
    assert isinstance(cert, ChaosCertificate)
    assert cert.branch == "(1,2)"
    assert cert.verify(m)
    for margin in cert.inequalities().values():
        assert margin >= 1e-9
    doc = cert.to_json()
    assert doc["tool_version"] and doc["period3"]


def test_find_witness_values():
    # middle lap of the innovative map: 2 (x - 0.25) = 0.25 at x = 0.375
    assert find_witness(innovative_map(), 0.25, 0.4) == pytest.approx(0.375, abs=1e-9)
    m = perturbed_maximal(0.4, 1.0)
    w = find_witness(m, 0.2, 0.7)
    assert 0.2 < w < 0.7
    assert float(m(w)) == pytest.approx(0.2, abs=1e-9)
    flipped = pl_map_from_values([0.0, 1.0], [1.0, 0.0])  # single decreasing lap
    with pytest.raises(ChaosSearchError):
        find_witness(flipped, 0.2, 0.6)


def test_period3_matches_rational_oracle():
    orbit = find_period3(innovative_map())
    assert orbit is not None
    expected = min(min(o) for o in INNOV_P3_ORBITS)
    assert min(orbit) == pytest.approx(expected, abs=1e-10)
    orbit_imit = find_period3(imitative_map())
    assert orbit_imit is not None
    all_imit_points = sorted(x for o in IMIT_P3_ORBITS for x in o)
    assert any(abs(min(orbit_imit) - e) <= 1e-10 for e in all_imit_points)


def test_period3_none_for_identity():
    assert find_period3(pl_map_from_values([0.0, 1.0], [0.0, 1.0])) is None


def test_periodic_orbits_exact_contains_oracle_orbits():
    orbits = find_periodic_orbits(innovative_map(), 3)
    period3 = [o for n, o in orbits if n == 3]
    assert len(period3) == len(INNOV_P3_ORBITS)
    found_keys = {tuple(sorted(np.round(o, 9))) for o in period3}
    oracle_keys = {tuple(sorted(np.round(o, 9))) for o in INNOV_P3_ORBITS}
    assert found_keys == oracle_keys


def test_periodic_orbits_all_periods_to_seven():
    for m in (innovative_map(), imitative_map()):
        orbits = find_periodic_orbits(m, 7)
        periods = {n for n, _ in orbits}
        assert periods == {1, 2, 3, 4, 5, 6, 7}
        for n, orbit in orbits:
            for x in orbit:
                y = x
                for _ in range(n):
                    y = float(m(y))
                assert abs(y - x) <= 1e-8


def test_periodic_orbits_fixed_points_only():
    orbits = find_periodic_orbits(innovative_map(), 1)
    assert len(orbits) == 1 and orbits[0][0] == 1
    assert orbits[0][1][0] == pytest.approx(0.2, abs=1e-9)
    imit = find_periodic_orbits(imitative_map(), 1)
    assert [o[1][0] for o in imit] == pytest.approx([0.0, 0.4, 1.0], abs=1e-9)


def test_periodic_orbits_exact_vs_numeric_agreement():
    m = innovative_map()
    exact = find_periodic_orbits(m, 5, mode="exact")
    numeric = find_periodic_orbits(m, 5, mode="numeric")
    exact_pts = sorted(x for _, o in exact for x in o)
    for n, orbit in numeric:
        for x in orbit:
            assert min(abs(x - e) for e in exact_pts) <= 1e-8
    assert {n for n, _ in exact} == {n for n, _ in numeric}


def test_periodic_orbits_attracting_regime_only_fixed_point():
    m = perturbed_maximal(0.4, 0.1)
    orbits = find_periodic_orbits(m, 3, mode="numeric", grid_size=20001)
    assert {n for n, _ in orbits} == {1}


def test_exact_mode_requires_linear():
    with pytest.raises(ValueError, match="piecewise-linear"):
        find_periodic_orbits(perturbed_maximal(0.4, 1.0), 3, mode="exact")
    with pytest.warns(UserWarning, match="budget"):
        find_periodic_orbits(innovative_map(), 13, mode="exact", grid_size=51)


def test_conjugacy_transports_periodic_orbits():
    m = innovative_map()
    conj = conjugate_map(m)
    orbits = find_periodic_orbits(m, 4)
    mirrored = find_periodic_orbits(conj, 4)
    keys = {(n, tuple(sorted(np.round([1.0 - x for x in o], 9)))) for n, o in orbits}
    keys_mirror = {(n, tuple(sorted(np.round(o, 9)))) for n, o in mirrored}
    assert keys == keys_mirror


def test_one_sided_derivatives_analytic():
    st = one_sided_derivatives(perturbed_maximal(0.4, 1.0), 0.4)
    assert st.left_derivative == pytest.approx(-5.0, abs=1e-12)
    assert st.right_derivative == pytest.approx(-5.0 / 3.0, abs=1e-12)
    assert st.classification == REPELLING
    st2 = one_sided_derivatives(perturbed_maximal(0.25, 1.0), 0.25)
    assert st2.right_derivative == pytest.approx(-1.0 / 3.0, abs=1e-12)
    assert st2.classification == INCONCLUSIVE
    st3 = one_sided_derivatives(innovative_map(), 0.2)
    assert st3.left_derivative == st3.right_derivative == pytest.approx(-4.0, abs=1e-12)
    assert st3.classification == REPELLING


def test_one_sided_derivatives_numeric_agreement():
    rng = np.random.default_rng(3)
    for _ in range(10):
        p = rng.uniform(0.15, 0.45)
        delta = rng.uniform(0.2, 1.0)
        m = perturbed_maximal(p, delta)
        ana = one_sided_derivatives(m, p, mode="analytic")
        num = one_sided_derivatives(m, p, mode="numeric")
        assert num.left_derivative == pytest.approx(ana.left_derivative, abs=1e-6)
        assert num.right_derivative == pytest.approx(ana.right_derivative, abs=1e-6)


def test_attracting_classification_small_delta():
    st = one_sided_derivatives(perturbed_maximal(0.4, 0.1), 0.4)
    assert st.classification == ATTRACTING


def test_delta_threshold_perturbed_values():
    r = delta_threshold_perturbed(0.4)
    assert r.components["delta_1"] == pytest.approx(0.7142857142857143, abs=1e-12)
    assert r.components["delta_3"] == pytest.approx(0.9488081709939241, abs=1e-12)
    assert r.threshold == pytest.approx(0.948808, abs=1e-5)
    assert r.valid
    # limit p -> 0: delta_3 -> (3 + sqrt(17))/8
    r0 = delta_threshold_perturbed(1e-12)
    assert r0.components["delta_3"] == pytest.approx(0.8903882032022076, abs=1e-9)
    with pytest.raises(ProtocolError):
        delta_threshold_perturbed(0.6)


def test_delta_threshold_truncated_values():
    r = delta_threshold_truncated(0.25)
    assert r.components["delta_star_1"] == pytest.approx(0.5555555555555556, abs=1e-12)
    assert r.components["delta_star_2"] == pytest.approx(0.17857142857142858, abs=1e-12)
    assert r.components["delta_star_3"] == pytest.approx(0.5254932955385053, abs=1e-12)
    assert r.components["delta_star_4"] == pytest.approx(1.0 / 6.0, abs=1e-12)
    assert r.components["delta_star_5"] == pytest.approx(0.23958333333333334, abs=1e-12)
    assert r.threshold == max(
        r.components["delta_star_1"], r.components["delta_star_3"]
    )
    assert r.valid


def test_truncated_minor_components_below_first():
    for p in np.linspace(0.01, 0.49, 25):
        r = delta_threshold_truncated(float(p))
        d1 = r.components["delta_star_1"]
        for key in ("delta_star_2", "delta_star_4", "delta_star_5"):
            assert r.components[key] < d1


def test_threshold_sufficiency_produces_certificates():
    for p in (0.35, 0.4, 0.45):
        thr = delta_threshold_perturbed(p).threshold
        delta = min(1.0, thr + 0.01)
        m = perturbed_maximal(p, delta)
        cert = check_chaos_conditions(m, p / 2.0, (p + 1.0) / 2.0)
        assert isinstance(cert, ChaosCertificate), p
        assert cert.f_zr == pytest.approx((p + 1.0) * (1.0 - delta) / 2.0, abs=1e-12)


def test_below_threshold_no_certificate_at_probes():
    m = perturbed_maximal(0.4, 0.5)
    report = check_chaos_conditions(m, 0.2, 0.7)
    assert isinstance(report, ConditionReport)


def test_delta_star_symmetric_ppi():
    prot = ppi_protocol(AntiCoordinationGame(0, 1, 1, 0))
    ds = delta_star_symmetric(prot)
    # exact solution: the left maximum is 1/4 and f(1/4) = 1/4 + 3 delta/32
    assert ds == pytest.approx(8.0, abs=1e-7)
    m = build_update_map(prot, ds)
    from revdyn.chaos import _left_max

    z_l, peak = _left_max(m)
    assert abs(peak - 1.0) <= 1e-10
    cert = check_chaos_conditions(m, z_l, 1.0 - z_l)
    assert isinstance(cert, ChaosCertificate)


def test_delta_star_symmetric_just_below_threshold():
    from revdyn.chaos import _left_max

    prot = ppi_protocol(AntiCoordinationGame(0, 1, 1, 0))
    ds = delta_star_symmetric(prot)
    m = build_update_map(prot, ds - 0.01)
    assert m.is_interval_map
    _, peak = _left_max(m)
    assert peak < 1.0


def test_delta_star_symmetric_guards():
    with pytest.raises(ProtocolError, match="equilibrium 1/2"):
        delta_star_symmetric(ppi_protocol(game_with_equilibrium(0.4)))
    g = AntiCoordinationGame(0, 1, 1, 0)
    with pytest.raises(ProtocolError, match="symmetry"):
        delta_star_symmetric(perturbed_ppi_protocol(g, 1.0, 3.0))
    with pytest.raises(ProtocolError, match="imitative"):
        from revdyn import pairwise_comparison_protocol

        delta_star_symmetric(pairwise_comparison_protocol(g))


def test_scrambled_pair_stat():
    m = perturbed_maximal(0.4, 1.0)
    assert scrambled_pair_stat(m, 0.3, 0.3, 100) == (0.0, 0.0)
    attracting = perturbed_maximal(0.4, 0.1)
    _, tail = scrambled_pair_stat(attracting, 0.3, 0.32, 2000)
    assert tail < 1e-6
    chaotic = innovative_map()
    _, tail = scrambled_pair_stat(chaotic, 0.3, 0.3001, 10_000)
    assert tail > 0.1


def test_truncated_repelling_at_max_parameters():
    g = game_with_equilibrium(0.25)
    gamma = 0.25 + 0.25 ** 2 / 2.0
    prot = truncated_ppi_protocol(g, eta_max_truncated(g), xi_max_perturbed(g), gamma)
    st = one_sided_derivatives(build_update_map(prot, 1.0), 0.25)
    assert abs(st.left_derivative) > 1.0 and abs(st.right_derivative) > 1.0
    assert st.classification == REPELLING
