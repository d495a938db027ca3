"""Metropolis simulation of a buyer/seller spin market on an FCC network,
with thermal observables, field-pulse experiments and a two-group
mean-field map."""
__version__ = "0.1.0"

from .lattice import NeighborGraph, build_custom, build_fcc
from .model import (
    FieldSchedule,
    MarketState,
    ModelParams,
    SpinSpace,
    UndefinedReturnError,
    agent_energy,
    count_sides,
    gross_return,
    price,
    total_energy,
)
from .dynamics import RunConfig, SweepRNG, TimeSeries, init_state, metropolis_sweep, run_market
from .observables import (
    BoundaryPeakError,
    BracketError,
    PersistenceReport,
    ThermalStats,
    autocorrelation,
    estimate_tc,
    find_critical_h,
    persistence_score,
    pulse_verdict,
    rolling_volatility,
    temperature_scan,
    thermal_stats,
)
from .meanfield import (
    MeanFieldParams,
    MeanFieldTrajectory,
    RegimeOrderError,
    RegimeReport,
    TransientError,
    brillouin,
    brillouin_sum,
    classify_regime,
    mf_run,
    mf_step,
    origin_is_stable,
    regime_boundaries,
)
