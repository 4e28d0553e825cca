"""Transport-capacity maximization for multi-device THz networks."""

__version__ = "0.1.0"

from .channel import (
    AbsorptionTable,
    BandPlan,
    Link,
    LinkParams,
    Subwindow,
    absorption_loss,
    bundled_absorption_table,
    channel_gain,
    path_loss_db,
    rate,
    rate_distance_product,
    snr,
    spreading_loss,
)
from .assignment import exhaustive_assign, hungarian_assign
from .waterfill import waterfill
from .distance_power import (
    InfeasibleError,
    Regime,
    RegimeResult,
    SolverConfig,
    classify_regime,
    iterate_power_distance,
    max_distance,
    optimal_distance_pair,
    solve_stationarity_snr,
)
from .strategies import (
    Allocation,
    DeviceSpec,
    Scenario,
    distance_max_benchmark,
    exhaustive_tc_max,
    fixed_distance_tc_max,
    non_adaptive_benchmark,
    proposed_tc_max,
    sum_rate_max,
)
from .scenario import ExperimentSpec, load_scenario, save_scenario, uniform_band
