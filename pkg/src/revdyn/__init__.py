"""Discrete-time revision-protocol dynamics in 2x2 anti-coordination games.

Build revision protocols (imitative or innovative), derive the induced
interval update map for a chosen step size, certify chaotic behaviour via
the period-three condition pair, locate periodic orbits exactly for
piecewise-linear maps, classify fixed-point stability from one-sided
derivatives, evaluate the analytic step-size thresholds, and run
bifurcation sweeps.  A compiled iteration kernel is used when available;
a pure-Python fallback is selected at import otherwise (see
``revdyn.kernels.BACKEND``).
"""

__version__ = "0.1.0"

from .chaos import (
    ATTRACTING,
    INCONCLUSIVE,
    REPELLING,
    ChaosCertificate,
    ChaosSearchError,
    ConditionReport,
    StabilityReport,
    ThresholdReport,
    basin_probe,
    check_chaos_conditions,
    delta_star_symmetric,
    delta_threshold_perturbed,
    delta_threshold_truncated,
    find_period3,
    find_periodic_orbits,
    find_witness,
    one_sided_derivatives,
    scrambled_pair_stat,
)
from .dynamics import (
    MapRangeError,
    Orbit,
    OrbitError,
    RangeReport,
    UpdateMap,
    build_update_map,
    conjugate_map,
    critical_points,
    default_probes,
    find_fixed_points,
    iterate,
    map_to_json,
    orbit_to_csv,
    pl_bimodal_imitative,
    pl_bimodal_innovative,
    pl_map_from_values,
    range_check,
)
from .games import (
    AntiCoordinationGame,
    GameError,
    game_from_json,
    game_with_equilibrium,
    nash_equilibrium,
    reflected_game,
)
from .protocols import (
    IMITATIVE,
    INNOVATIVE,
    ProtocolError,
    ProtocolValidation,
    RevisionProtocol,
    eta_max_perturbed,
    eta_max_truncated,
    imitative_chaotic_protocol,
    in_delta_p,
    in_delta_star_p,
    in_gamma_star_p,
    innovative_chaotic_protocol,
    pairwise_comparison_protocol,
    perturbed_ppi_protocol,
    ppi_protocol,
    reflect_protocol,
    truncated_ppi_protocol,
    validate_protocol,
    xi_max_perturbed,
)
from .scan import BifurcationScanConfig, ScanResult, bifurcation_scan, cobweb_export

__all__ = [name for name in dir() if not name.startswith("_")]
