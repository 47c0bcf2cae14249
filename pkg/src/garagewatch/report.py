"""Per-stall occupancy verdicts from a patrol's event stream."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .errors import GarageWatchError, LookupTimeoutError, MapError, ProtocolError
from .garage import STALL_THRESHOLD_M, stall_for_position
from .localization import PathLossModel, estimate_from_readings
from .plates import DEFAULT_K, consensus


class Status(str, enum.Enum):
    EMPTY = "Empty"
    OWNER = "OccupiedByOwner"
    OTHER_TENANT = "OccupiedByOtherTenant"
    UNKNOWN = "OccupiedByUnknown"


@dataclass(frozen=True)
class OccupancyStatus:
    status: Status
    plate: str = None

    def __str__(self):
        return f"{self.status.value}({self.plate})" if self.plate else self.status.value


@dataclass(frozen=True)
class LocalizationConfig:
    method: str = "least-squares"
    path_loss: PathLossModel = field(default_factory=PathLossModel)
    max_beacons: int = 3
    stall_threshold: float = STALL_THRESHOLD_M
    k: int = DEFAULT_K


@dataclass
class StallReport:
    stall_id: str
    status: OccupancyStatus
    ticks: list = field(default_factory=list)
    vehicle_ticks: list = field(default_factory=list)
    ranked: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    owner_lookup: object = None
    lookup_outcome: str = None

    @property
    def zero_evidence(self):
        return not self.ticks

    def as_dict(self):
        return {
            "stall_id": self.stall_id,
            "status": self.status.status.value,
            "plate": self.status.plate,
            "zero_evidence": self.zero_evidence,
            "evidence": {
                "ticks": self.ticks,
                "vehicle_ticks": self.vehicle_ticks,
                "ranked": [{"plate": p, "score": s} for p, s in self.ranked],
                "positions": [list(p) for p in self.positions],
            },
            "owner_lookup": self.owner_lookup.as_dict() if self.owner_lookup else None,
            "lookup_outcome": self.lookup_outcome,
        }


@dataclass
class MonitoringReport:
    stalls: list
    skipped_events: list = field(default_factory=list)
    unbound_detections: int = 0
    events_total: int = 0
    # (tick, true_pose, estimated position) per localized event; used for figures, not serialized
    track: list = field(default_factory=list, repr=False)

    def __getitem__(self, stall_id):
        for s in self.stalls:
            if s.stall_id == stall_id:
                return s
        raise KeyError(stall_id)

    def statuses(self):
        return {s.stall_id: s.status for s in self.stalls}

    def as_dict(self):
        return {
            "stalls": [s.as_dict() for s in self.stalls],
            "diagnostics": {
                "events_total": self.events_total,
                "skipped_events": self.skipped_events,
                "unbound_detections": self.unbound_detections,
            },
        }

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2) + "\n"

    def to_table(self):
        header = f"{'stall':<8}{'status':<24}{'plate':<8}{'ticks':>7}  {'owner lookup'}"
        lines = [header, "-" * 64]
        for s in self.stalls:
            owner = s.owner_lookup.owner_name if s.owner_lookup else (s.lookup_outcome or "")
            flag = " *" if s.zero_evidence else ""
            lines.append(f"{s.stall_id:<8}{s.status.status.value:<24}{s.status.plate or '-':<8}"
                         f"{len(s.ticks):>7}  {owner}{flag}")
        lines.append("-" * 64)
        lines.append(f"events: {self.events_total}  skipped: {len(self.skipped_events)}  "
                     f"unbound detections: {self.unbound_detections}")
        if any(s.zero_evidence for s in self.stalls):
            lines.append("* stall never observed")
        return "\n".join(lines) + "\n"


def classify_stall(stall_id, vehicle_present, winner, registry, garage) -> OccupancyStatus:
    """Map one stall's observation onto an occupancy verdict.

    ``winner`` is the consensus plate, or ``None`` when no plate was readable.
    """
    if garage.stall(stall_id) is None:
        raise MapError(f"unknown stall {stall_id!r}")
    if not vehicle_present:
        return OccupancyStatus(Status.EMPTY)
    if winner is None:
        return OccupancyStatus(Status.UNKNOWN)
    tenant = registry.find_by_plate(winner)
    if tenant is None:
        return OccupancyStatus(Status.UNKNOWN, winner)
    if tenant.stall_id == stall_id:
        return OccupancyStatus(Status.OWNER, winner)
    return OccupancyStatus(Status.OTHER_TENANT, winner)


def build_report(events, registry, garage, config=LocalizationConfig(), lookup=None) -> MonitoringReport:
    """Localize every event, bind its detections to a stall and classify each stall.

    Detections bind through the *estimated* position. Events whose readings
    cannot be localized are skipped and listed in the diagnostics. `lookup`
    is an :class:`~garagewatch.registry.OwnerLookupClient` consulted for
    readable plates that are not in the registry.
    """
    deployment = garage.deployment
    bound = {sid: [] for sid in garage.stall_ids}
    positions = {sid: [] for sid in garage.stall_ids}
    report = MonitoringReport(stalls=[], events_total=len(events))

    for ev in events:
        try:
            est = estimate_from_readings(ev.rssi_readings, deployment, config.path_loss, config.method,
                                         config.max_beacons)
        except GarageWatchError as exc:
            report.skipped_events.append({"tick": ev.tick, "reason": str(exc)})
            continue
        report.track.append((ev.tick, tuple(ev.true_pose), est.position))
        if not ev.detections:
            continue
        sid = stall_for_position(garage, est.position, config.stall_threshold)
        if sid is None:
            report.unbound_detections += len(ev.detections)
            continue
        positions[sid].append(est.position)
        for det in ev.detections:
            bound[sid].append((ev.tick, det))

    for stall in garage.stalls:
        sid = stall.stall_id
        dets = bound[sid]
        ticks = sorted({t for t, _ in dets})
        vehicle_ticks = sorted({t for t, d in dets if d.vehicle_present})
        candidates = [c for _, d in dets if d.vehicle_present for c in d.plate_candidates]
        result = consensus(candidates, config.k)
        status = classify_stall(sid, bool(vehicle_ticks), result.winner, registry, garage)
        entry = StallReport(sid, status, ticks, vehicle_ticks, list(result.ranked), positions[sid])
        if status.status is Status.UNKNOWN and status.plate and lookup is not None:
            try:
                entry.owner_lookup = lookup.query(status.plate)
                entry.lookup_outcome = "found" if entry.owner_lookup else "not-found"
            except (LookupTimeoutError, ProtocolError) as exc:
                entry.lookup_outcome = f"error: {exc}"
        report.stalls.append(entry)
    return report
