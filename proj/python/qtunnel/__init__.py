"""Thermally assisted tunneling in mean-field spin models: WKB instantons,
worldline quantum Monte Carlo and exact small-N spectra."""

from ._core import (
    EscapeRecord,
    InstantonSolution,
    ModelSpec,
    QtunnelError,
    SpikeShape,
    SpikeSpec,
    action,
    critical_ell,
    delta_f,
    effective_potential,
    entropic_factor,
    equilibrium_mz_distribution,
    equilibrium_sample,
    escape_run,
    evolve_trace,
    fit_alpha,
    free_energy_exact,
    multiplicity,
    period,
    run_cli,
    sector_eigenvalues,
    solve_instanton,
    spike_report,
    static_extrema,
    static_free_energy,
    total_variation,
    turning_points,
    verify_identities,
    wkb_alpha,
)

__all__ = [name for name in dir() if not name.startswith("_")]
