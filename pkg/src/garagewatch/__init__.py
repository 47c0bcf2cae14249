"""Garage patrol monitoring: beacon localization, plate consensus and stall occupancy audits."""

from .garage import (DriveCommand, GarageMap, PatrolEvent, Stall, decode_drive_command, default_map,
                     encode_drive_command, load_scenario, simulate_patrol, simulate_rssi, stall_for_position)
from .localization import (Beacon, PathLossModel, PositionEstimate, RssiReading, build_trilateration_system,
                           estimate_from_readings, estimate_position, rssi_to_distance)
from .plates import ConsensusResult, PlateCandidate, consensus, filter_valid, normalize_plate
from .registry import (LookupConfig, OwnerLookupClient, OwnerRecord, Registry, TenantRecord, find_by_plate,
                       find_by_stall, load_registry, query_owner, save_registry)
from .report import LocalizationConfig, MonitoringReport, OccupancyStatus, Status, build_report, classify_stall
from .solvers import (BenchConfig, LinearSystem, SolveResult, TimingReport, bench_solve, gauss_eliminate,
                      gauss_seidel, is_diagonally_dominant, jacobi)

__version__ = "0.1.0"

__all__ = [
    "Beacon",
    "BenchConfig",
    "ConsensusResult",
    "DriveCommand",
    "GarageMap",
    "LinearSystem",
    "LocalizationConfig",
    "LookupConfig",
    "MonitoringReport",
    "OccupancyStatus",
    "OwnerLookupClient",
    "OwnerRecord",
    "PathLossModel",
    "PatrolEvent",
    "PlateCandidate",
    "PositionEstimate",
    "Registry",
    "RssiReading",
    "SolveResult",
    "Stall",
    "Status",
    "TenantRecord",
    "TimingReport",
    "bench_solve",
    "build_report",
    "build_trilateration_system",
    "classify_stall",
    "consensus",
    "decode_drive_command",
    "default_map",
    "encode_drive_command",
    "estimate_from_readings",
    "estimate_position",
    "filter_valid",
    "find_by_plate",
    "find_by_stall",
    "gauss_eliminate",
    "gauss_seidel",
    "is_diagonally_dominant",
    "jacobi",
    "load_registry",
    "load_scenario",
    "normalize_plate",
    "query_owner",
    "rssi_to_distance",
    "save_registry",
    "simulate_patrol",
    "simulate_rssi",
    "stall_for_position",
]
