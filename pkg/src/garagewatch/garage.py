"""Garage map model, patrol simulator and the serial drive-command codec.

The simulator stands in for the robot's sensors. It walks the route at a
fixed step and, at every tick, emits one RSSI reading per beacon plus a
detection for each stall the side-looking camera can see.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FrameError, InputError, ScenarioError
from .localization import Beacon, PathLossModel, RssiReading, beacons_from_json, beacons_to_json
from .plates import PlateCandidate, is_valid_plate, normalize_plate

STALL_PITCH_M = 2.45
LANE_WIDTH_M = 8.0
STALL_THRESHOLD_M = 1.5
CAMERA_RANGE_M = 3.0
CAMERA_HALFWIDTH_M = 0.5
STEP_M = 0.05
MIN_RANGE_M = 0.1

CONFUSIONS = {"0": "O", "O": "0", "1": "I", "I": "1", "8": "B", "B": "8", "5": "S", "S": "5"}
ALPHANUMERIC = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"


@dataclass(frozen=True)
class Stall:
    stall_id: str
    center: tuple
    width: float = STALL_PITCH_M

    def __post_init__(self):
        if not self.width > 0:
            raise InputError(f"stall {self.stall_id!r}: width must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


@dataclass(frozen=True)
class GarageMap:
    width: float
    height: float
    stalls: tuple
    beacons: tuple
    route: tuple

    def __post_init__(self):
        object.__setattr__(self, "stalls", tuple(self.stalls))
        object.__setattr__(self, "beacons", tuple(self.beacons))
        object.__setattr__(self, "route", tuple((float(x), float(y)) for x, y in self.route))
        ids = [s.stall_id for s in self.stalls]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ScenarioError(f"duplicate stall id {dup!r}")
        bids = [b.id for b in self.beacons]
        if len(set(bids)) != len(bids):
            raise ScenarioError("duplicate beacon id")
        for s in self.stalls:
            if not self.contains(s.center):
                raise ScenarioError(f"stall {s.stall_id!r} lies outside the {self.width} x {self.height} m map")
        for i, p in enumerate(self.route):
            if not self.contains(p):
                raise ScenarioError(f"route waypoint #{i} {p} lies outside the map")

    def contains(self, p):
        return 0.0 <= p[0] <= self.width and 0.0 <= p[1] <= self.height

    @property
    def stall_ids(self):
        return [s.stall_id for s in self.stalls]

    @property
    def deployment(self):
        return {b.id: b for b in self.beacons}

    def stall(self, stall_id):
        for s in self.stalls:
            if s.stall_id == stall_id:
                return s
        return None

    def to_json(self):
        return {
            "width_m": self.width,
            "height_m": self.height,
            "stalls": [{"id": s.stall_id, "x_m": s.center[0], "y_m": s.center[1], "width_m": s.width}
                       for s in self.stalls],
            "beacons": beacons_to_json(self.deployment),
            "route": [list(p) for p in self.route],
        }


def default_map(stalls_per_row=6, margin=1.0, tx_power=-59.0) -> GarageMap:
    """Two stall rows on opposite walls of an 8 m lane, 2.45 m pitch.

    Stalls ``E-01..`` run along the lower wall, the rest along the upper wall.
    Beacons sit on stall-column boundaries, alternating between the two walls
    (even boundaries) and the lane centerline (odd boundaries). The route goes
    down the lower side of the lane, turns, and comes back up the upper side.
    """
    width = round(2 * margin + stalls_per_row * STALL_PITCH_M, 3)
    height = LANE_WIDTH_M
    row_y = (1.25, height - 1.25)
    stalls = []
    for r, y in enumerate(row_y):
        for i in range(stalls_per_row):
            sid = f"E-{r * stalls_per_row + i + 1:02d}"
            stalls.append(Stall(sid, (round(margin + STALL_PITCH_M * (i + 0.5), 3), y)))
    columns = [round(margin + STALL_PITCH_M * k, 3) for k in range(stalls_per_row + 1)]
    positions = [(x, 0.0) for x in columns[::2]] + [(x, height) for x in columns[::2]]
    positions += [(x, height / 2) for x in columns[1::2]]
    beacons = [Beacon(f"B{i + 1:02d}", p, tx_power) for i, p in enumerate(positions)]
    lo, hi = row_y[0] + 1.0, row_y[1] - 1.0
    route = [(0.5, lo), (round(width - 0.5, 3), lo), (round(width - 0.5, 3), hi), (0.5, hi)]
    return GarageMap(width, height, stalls, beacons, route)


def stall_for_position(garage: GarageMap, pos, threshold: float = STALL_THRESHOLD_M):
    """Id of the stall whose center is nearest `pos`, if within `threshold`; ties go to the smaller id."""
    best = None
    for s in garage.stalls:
        d = math.hypot(pos[0] - s.center[0], pos[1] - s.center[1])
        if d <= threshold and (best is None or (d, s.stall_id) < best):
            best = (d, s.stall_id)
    return best[1] if best else None


def simulate_rssi(garage: GarageMap, pose, model: PathLossModel, noise_sigma_db: float, seed=None,
                  tick: int = 0, rng=None):
    """One noisy reading per beacon from the log-distance model.

    Pass either `seed` (a fresh generator is made) or a shared `rng`.
    """
    if noise_sigma_db < 0:
        raise InputError("noise_sigma_db must be >= 0")
    if rng is None:
        rng = np.random.default_rng(seed)
    out = []
    for b in garage.beacons:
        d = max(math.hypot(pose[0] - b.position[0], pose[1] - b.position[1]), MIN_RANGE_M)
        rssi = b.tx_power - 10.0 * model.exponent * math.log10(d)
        if noise_sigma_db > 0:
            rssi += float(rng.normal(0.0, noise_sigma_db))
        out.append(RssiReading(b.id, rssi, tick))
    return out


# -- scenarios and patrol -------------------------------------------------------

@dataclass(frozen=True)
class Detection:
    vehicle_present: bool
    plate_candidates: tuple = ()

    def as_dict(self):
        return {
            "vehicle_present": self.vehicle_present,
            "plate_candidates": [{"raw": c.raw, "confidence": c.confidence, "tick": c.tick}
                                 for c in self.plate_candidates],
        }


@dataclass(frozen=True)
class PatrolEvent:
    tick: int
    true_pose: tuple
    rssi_readings: tuple
    detections: tuple = ()

    def as_dict(self):
        return {
            "tick": self.tick,
            "true_pose": list(self.true_pose),
            "rssi_readings": [{"beacon_id": r.beacon_id, "rssi_dbm": r.rssi} for r in self.rssi_readings],
            "detections": [d.as_dict() for d in self.detections],
        }


@dataclass(frozen=True)
class Scenario:
    garage: GarageMap
    truth: dict
    rssi_sigma_db: float = 0.0
    ocr_char_p: float = 0.0
    seed: int = 0
    step_m: float = STEP_M
    camera_range_m: float = CAMERA_RANGE_M
    camera_halfwidth_m: float = CAMERA_HALFWIDTH_M
    readings_per_tick: int = 1
    path_loss: PathLossModel = field(default_factory=PathLossModel)

    def __post_init__(self):
        if self.rssi_sigma_db < 0:
            raise ScenarioError("noise.rssi_sigma_db must be >= 0")
        if not 0.0 <= self.ocr_char_p <= 1.0:
            raise ScenarioError("noise.ocr_char_p must lie in [0, 1]")
        if not self.step_m > 0:
            raise ScenarioError("patrol.step_m must be positive")
        if self.readings_per_tick < 1:
            raise ScenarioError("patrol.readings_per_tick must be >= 1")
        known = set(self.garage.stall_ids)
        for sid, plate in self.truth.items():
            if sid not in known:
                raise ScenarioError(f"truth: unknown stall {sid!r}")
            if plate is not None and not is_valid_plate(plate):
                raise ScenarioError(f"truth[{sid!r}]: invalid plate {plate!r}")

    def to_json(self):
        return {
            "map": self.garage.to_json(),
            "truth": {sid: self.truth.get(sid) for sid in self.garage.stall_ids},
            "noise": {"rssi_sigma_db": self.rssi_sigma_db, "ocr_char_p": self.ocr_char_p},
            "patrol": {
                "step_m": self.step_m,
                "camera_range_m": self.camera_range_m,
                "camera_halfwidth_m": self.camera_halfwidth_m,
                "readings_per_tick": self.readings_per_tick,
                "path_loss_exponent": self.path_loss.exponent,
            },
            "seed": self.seed,
        }


def _section(data, key, required=True):
    value = data.get(key)
    if value is None:
        if required:
            raise ScenarioError(f"missing section {key!r}")
        return {}
    if not isinstance(value, dict):
        raise ScenarioError(f"section {key!r} must be an object")
    return value


def scenario_from_json(data) -> Scenario:
    """Build a :class:`Scenario` from its JSON document.

    Required: ``map``, ``truth``, ``noise``. Optional: ``seed`` (0) and a
    ``patrol`` object overriding step size, camera geometry, readings per
    tick and path-loss exponent.
    """
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    m = _section(data, "map")
    try:
        stalls = [Stall(str(s["id"]), (s["x_m"], s["y_m"]), s.get("width_m", STALL_PITCH_M))
                  for s in m.get("stalls", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"map.stalls: {exc!r}") from exc
    try:
        beacons = list(beacons_from_json(m.get("beacons", []), source="map.beacons").values())
        route = [(float(x), float(y)) for x, y in m.get("route", [])]
        width, height = float(m["width_m"]), float(m["height_m"])
    except InputError as exc:
        raise ScenarioError(str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"map: {exc!r}") from exc
    if len(route) < 2:
        raise ScenarioError("map.route needs at least two waypoints")
    garage = GarageMap(width, height, stalls, beacons, route)

    truth_raw = _section(data, "truth")
    truth = {str(k): (normalize_plate(v) if v is not None else None) for k, v in truth_raw.items()}
    noise = _section(data, "noise")
    patrol = _section(data, "patrol", required=False)
    try:
        return Scenario(
            garage=garage,
            truth=truth,
            rssi_sigma_db=float(noise.get("rssi_sigma_db", 0.0)),
            ocr_char_p=float(noise.get("ocr_char_p", 0.0)),
            seed=int(data.get("seed", 0)),
            step_m=float(patrol.get("step_m", STEP_M)),
            camera_range_m=float(patrol.get("camera_range_m", CAMERA_RANGE_M)),
            camera_halfwidth_m=float(patrol.get("camera_halfwidth_m", CAMERA_HALFWIDTH_M)),
            readings_per_tick=int(patrol.get("readings_per_tick", 1)),
            path_loss=PathLossModel(float(patrol.get("path_loss_exponent", 2.0))),
        )
    except InputError as exc:
        raise ScenarioError(str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"noise/patrol: {exc!r}") from exc


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return scenario_from_json(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def walk_route(route, step):
    """Points every `step` meters of arc length along a polyline, with their unit heading."""
    poses = []
    carry = 0.0
    for (x0, y0), (x1, y1) in zip(route, route[1:]):
        seg = math.hypot(x1 - x0, y1 - y0)
        if seg == 0:
            continue
        ux, uy = (x1 - x0) / seg, (y1 - y0) / seg
        s = carry
        while s < seg - 1e-12:
            poses.append(((x0 + ux * s, y0 + uy * s), (ux, uy)))
            s += step
        carry = s - seg
    if poses:
        poses.append((tuple(route[-1]), poses[-1][1]))
    return poses


def visible_stalls(garage, pose, heading, camera_range=CAMERA_RANGE_M, halfwidth=CAMERA_HALFWIDTH_M):
    """Stalls abeam of the robot: within `halfwidth` along the heading and `camera_range` across it."""
    out = []
    for s in garage.stalls:
        dx, dy = s.center[0] - pose[0], s.center[1] - pose[1]
        along = dx * heading[0] + dy * heading[1]
        across = abs(dx * heading[1] - dy * heading[0])
        if abs(along) <= halfwidth and across <= camera_range:
            out.append(s)
    return out


def corrupt_plate(plate, p, rng):
    """OCR noise: each character flips with probability `p` (to its confusion partner if it has one)."""
    chars = list(plate)
    flips = 0
    for i, ch in enumerate(chars):
        if rng.random() < p:
            if ch in CONFUSIONS:
                chars[i] = CONFUSIONS[ch]
            else:
                choices = ALPHANUMERIC.replace(ch, "")
                chars[i] = choices[int(rng.integers(len(choices)))]
            flips += 1
    return "".join(chars), flips


def ocr_confidence(flips):
    return float(max(20, 90 - 15 * flips))


def simulate_patrol(scenario) -> list:
    """Deterministic event stream for one patrol of `scenario` (a :class:`Scenario` or a file path)."""
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    garage = scenario.garage
    rng = np.random.default_rng(scenario.seed)
    events = []
    for tick, (pose, heading) in enumerate(walk_route(garage.route, scenario.step_m)):
        readings = []
        for _ in range(scenario.readings_per_tick):
            readings.extend(simulate_rssi(garage, pose, scenario.path_loss, scenario.rssi_sigma_db,
                                          tick=tick, rng=rng))
        detections = []
        for stall in visible_stalls(garage, pose, heading, scenario.camera_range_m, scenario.camera_halfwidth_m):
            plate = scenario.truth.get(stall.stall_id)
            if plate is None:
                detections.append(Detection(False))
                continue
            raw, flips = corrupt_plate(plate, scenario.ocr_char_p, rng)
            detections.append(Detection(True, (PlateCandidate(raw, ocr_confidence(flips), tick),)))
        events.append(PatrolEvent(tick, pose, tuple(readings), tuple(detections)))
    return events


def events_to_jsonl(events) -> str:
    return "".join(json.dumps(e.as_dict(), sort_keys=True) + "\n" for e in events)


# -- drive-command codec --------------------------------------------------------

MOTIONS = {"forward": "F", "stop": "S", "rewind": "R"}
_LETTERS = {v: k for k, v in MOTIONS.items()}


@dataclass(frozen=True)
class DriveCommand:
    motion: str
    angle: int = 90

    def __post_init__(self):
        if self.motion not in MOTIONS:
            raise InputError(f"motion must be one of {', '.join(MOTIONS)}, got {self.motion!r}")
        if isinstance(self.angle, bool) or not isinstance(self.angle, int) or not 0 <= self.angle <= 180:
            raise InputError(f"angle must be an integer in [0, 180], got {self.angle!r}")


def encode_drive_command(cmd: DriveCommand) -> bytes:
    """``{forward, 90}`` -> ``b"F090\\n"``."""
    return f"{MOTIONS[cmd.motion]}{cmd.angle:03d}\n".encode("ascii")


def decode_drive_command(frame) -> DriveCommand:
    if isinstance(frame, str):
        frame = frame.encode("ascii", errors="replace")
    if len(frame) != 5 or frame[4:] != b"\n":
        raise FrameError(f"frame must be 5 bytes ending in a linefeed, got {frame!r}")
    letter, digits = chr(frame[0]), frame[1:4]
    if letter not in _LETTERS:
        raise FrameError(f"unknown motion letter {letter!r}")
    if not digits.isdigit():
        raise FrameError(f"angle field {digits!r} is not three digits")
    angle = int(digits)
    if angle > 180:
        raise FrameError(f"angle {angle} exceeds 180")
    return DriveCommand(_LETTERS[letter], angle)
