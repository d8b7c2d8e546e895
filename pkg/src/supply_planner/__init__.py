"""Energy-aware placement and trajectory planning for UAV access points."""

from supply_planner.energy import (
    STRAIGHT,
    EnergyParams,
    SpeedPoint,
    circular_power,
    default_energy_params,
    hover_energy_per_hour,
    hover_power,
    loop_energy_per_hour,
    optimal_speed,
)
from supply_planner.errors import (
    DomainError,
    EmptyRegionError,
    InfeasibleDemandError,
    InfeasibleError,
    InputError,
    PlannerError,
    QosViolationError,
)
from supply_planner.geometry import (
    FarthestPair,
    Region,
    centroid_and_perimeter,
    farthest_pair,
    intersection_region,
    remove_overlap,
)
from supply_planner.grouping import (
    CandidateGrid,
    GroundUser,
    Group,
    Grouping,
    minimize_faps,
    verify_grouping,
)
from supply_planner.rf_link import (
    LinkBudget,
    McsEntry,
    McsTable,
    default_mcs_table,
    load_mcs_table,
    max_distance_for_rate,
    rate_for_snr,
    received_power,
    snr,
    target_entry_for_rate,
)
from supply_planner.scenario import (
    BatchResult,
    BatchRow,
    PlanResult,
    Scenario,
    energy_ratio_stats,
    generate_scenario,
    read_batch_csv,
    run_batch,
    run_pipeline,
    write_batch_csv,
)
from supply_planner.trajectory import (
    FapPlan,
    QosReport,
    Trajectory,
    select_trajectory,
    verify_plan_qos,
)

__version__ = "0.1.0"
