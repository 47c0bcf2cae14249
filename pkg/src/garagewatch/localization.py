"""Beacon trilateration: RSSI -> distance -> linearized circle system -> position.

Subtracting the circle equations of two beacons i, j cancels the quadratic
terms and leaves one linear equation in the robot position ``p``::

    (p_i - p_j) . p = (d_j^2 - d_i^2 + |p_i|^2 - |p_j|^2) / 2

Rows are formed for consecutive cyclic beacon pairs (1,2), (2,3), ..., (k,1),
so the rows of A always sum to zero and the system has rank 2. It is solved
through its 2x2 normal equations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (DegenerateGeometryError, DimensionError, IdentityError, InputError,
                     SingularMatrixError)
from .solvers import LinearSystem, gauss_eliminate, gauss_seidel, is_diagonally_dominant, jacobi

LOCALIZATION_METHODS = ("gauss", "jacobi", "gauss-seidel", "least-squares")
PARALLEL_TOL = 1e-9


@dataclass(frozen=True)
class Beacon:
    id: str
    position: tuple
    tx_power: float = -59.0

    def __post_init__(self):
        x, y = (float(v) for v in self.position)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError(f"beacon {self.id!r} has non-finite position")
        object.__setattr__(self, "position", (x, y))
        object.__setattr__(self, "tx_power", float(self.tx_power))


@dataclass(frozen=True)
class RssiReading:
    beacon_id: str
    rssi: float
    tick: int = 0


@dataclass(frozen=True)
class PathLossModel:
    exponent: float = 2.0

    def __post_init__(self):
        if not 1.0 <= self.exponent <= 6.0:
            raise InputError(f"path-loss exponent must lie in [1, 6], got {self.exponent}")


@dataclass(frozen=True)
class PositionEstimate:
    position: tuple
    residual: float
    beacons_used: list
    method: str = "least-squares"
    # set when an iterative method was requested but the dominance gate failed
    fell_back: bool = False
    tick: int = None

    def as_dict(self):
        out = {
            "x": self.position[0],
            "y": self.position[1],
            "residual": self.residual,
            "beacons_used": list(self.beacons_used),
            "method": self.method,
            "fell_back": self.fell_back,
        }
        if self.tick is not None:
            out["tick"] = self.tick
        return out


def rssi_to_distance(reading: RssiReading, beacon: Beacon, model: PathLossModel) -> float:
    """Invert the log-distance model: ``d = 10 ** ((tx_power - rssi) / (10 n))``."""
    if reading.beacon_id != beacon.id:
        raise IdentityError(f"reading for {reading.beacon_id!r} paired with beacon {beacon.id!r}")
    if not math.isfinite(reading.rssi):
        raise InputError(f"non-finite rssi for beacon {beacon.id!r}")
    return 10.0 ** ((beacon.tx_power - reading.rssi) / (10.0 * model.exponent))


def build_trilateration_system(beacons, distances) -> LinearSystem:
    beacons = list(beacons)
    distances = [float(d) for d in distances]
    if len(beacons) != len(distances):
        raise DimensionError(f"{len(beacons)} beacons but {len(distances)} distances")
    if len(beacons) < 3:
        raise DimensionError(f"at least 3 beacons required, got {len(beacons)}")
    if any(not math.isfinite(d) or d < 0 for d in distances):
        raise InputError("distances must be finite and non-negative")

    p = np.array([b.position for b in beacons])
    d = np.array(distances)
    nxt = np.roll(np.arange(len(beacons)), -1)
    a = p - p[nxt]
    sq = (p ** 2).sum(axis=1)
    y = (d[nxt] ** 2 - d ** 2 + sq - sq[nxt]) / 2.0
    assert np.allclose(a.sum(axis=0), 0.0, atol=1e-9 * max(1.0, np.abs(a).max()))

    norms = np.linalg.norm(a, axis=1)
    cross = np.abs(np.outer(a[:, 0], a[:, 1]) - np.outer(a[:, 1], a[:, 0]))
    if not (cross > PARALLEL_TOL * np.outer(norms, norms)).any():
        raise DegenerateGeometryError("beacon positions are collinear")
    return LinearSystem(a, y)


def _solve_normal(normal, method):
    """Solve the 2x2 normal equations; returns (x, fell_back)."""
    if method in ("gauss", "least-squares"):
        return gauss_eliminate(normal).x, False
    if not is_diagonally_dominant(normal):
        return gauss_eliminate(normal).x, True
    tol = 1e-13 * max(1.0, float(np.linalg.norm(normal.y)))
    solver = jacobi if method == "jacobi" else gauss_seidel
    res = solver(normal, tol=tol, max_iter=10_000)
    if not res.converged:
        return gauss_eliminate(normal).x, True
    return res.x, False


def estimate_position(beacons, distances, method: str = "least-squares") -> PositionEstimate:
    """Estimate the robot position from beacon distances.

    Iterative methods are only used when the normal matrix passes the
    diagonal-dominance gate; otherwise Gauss elimination is used and the
    estimate is flagged with ``fell_back=True``.
    """
    if method not in LOCALIZATION_METHODS:
        raise InputError(f"unknown method {method!r}; expected one of {', '.join(LOCALIZATION_METHODS)}")
    beacons = list(beacons)
    system = build_trilateration_system(beacons, distances)
    a, y = system.a, system.y
    normal = LinearSystem(a.T @ a, a.T @ y)
    try:
        x, fell_back = _solve_normal(normal, method)
    except SingularMatrixError as exc:
        raise DegenerateGeometryError(f"singular normal equations: {exc}") from exc
    return PositionEstimate(
        position=(float(x[0]), float(x[1])),
        residual=system.residual_norm(x),
        beacons_used=[b.id for b in beacons],
        method=method,
        fell_back=fell_back,
    )


def average_readings(readings):
    """Mean RSSI (in dBm) per beacon id, in order of first appearance."""
    sums = {}
    for r in readings:
        if not math.isfinite(r.rssi):
            raise InputError(f"non-finite rssi for beacon {r.beacon_id!r}")
        sums.setdefault(r.beacon_id, []).append(r.rssi)
    return {bid: math.fsum(v) / len(v) for bid, v in sums.items()}


def _strongest_noncollinear(order, deployment, count):
    """First `count` ids of `order`, extended past collinear prefixes when needed."""
    chosen = list(order[:count])
    rest = list(order[count:])
    while rest and _collinear([deployment[b].position for b in chosen]):
        chosen.append(rest.pop(0))
    return chosen


def _collinear(points):
    p = np.asarray(points, dtype=float)
    v = p[1:] - p[0]
    if len(v) == 0:
        return True
    scale = max(1.0, float(np.abs(v).max()))
    return bool(np.all(np.abs(v[:, 0, None] * v[None, :, 1] - v[:, 1, None] * v[None, :, 0])
                       <= PARALLEL_TOL * scale * scale))


def estimate_from_readings(readings, deployment, model=PathLossModel(), method="least-squares",
                           max_beacons=None) -> PositionEstimate:
    """Localize from one tick window of readings.

    `deployment` maps beacon id to :class:`Beacon`. Repeated readings of one
    beacon are averaged in dBm. With `max_beacons`, only the strongest
    averaged signals are used (ties broken by beacon id).
    """
    readings = list(readings)
    means = average_readings(readings)
    unknown = [bid for bid in means if bid not in deployment]
    if unknown:
        raise IdentityError(f"readings reference unknown beacon(s): {', '.join(sorted(unknown))}")
    order = sorted(means, key=lambda bid: (-means[bid], bid))
    if max_beacons is not None:
        order = _strongest_noncollinear(order, deployment, max(3, max_beacons))
    # keep deployment order among the selected beacons so the cyclic pairing is stable
    rank = {bid: i for i, bid in enumerate(deployment)}
    order.sort(key=rank.__getitem__)
    beacons = [deployment[bid] for bid in order]
    distances = [rssi_to_distance(RssiReading(bid, means[bid]), deployment[bid], model) for bid in order]
    est = estimate_position(beacons, distances, method)
    ticks = {r.tick for r in readings}
    if len(ticks) == 1:
        est = PositionEstimate(est.position, est.residual, est.beacons_used, est.method,
                               est.fell_back, tick=ticks.pop())
    return est


def load_beacons(path) -> dict:
    """Read a beacon deployment: JSON array of ``{id, x_m, y_m, tx_power_dbm}``."""
    try:
        rows = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not isinstance(rows, list):
        raise InputError(f"{path}: expected a JSON array of beacons")
    return beacons_from_json(rows, source=str(path))


def beacons_from_json(rows, source="beacons"):
    deployment = {}
    for i, row in enumerate(rows):
        try:
            b = Beacon(str(row["id"]), (row["x_m"], row["y_m"]), row.get("tx_power_dbm", -59.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{source}: beacon #{i}: {exc!r}") from exc
        if b.id in deployment:
            raise InputError(f"{source}: duplicate beacon id {b.id!r}")
        deployment[b.id] = b
    return deployment


def beacons_to_json(deployment):
    return [{"id": b.id, "x_m": b.position[0], "y_m": b.position[1], "tx_power_dbm": b.tx_power}
            for b in deployment.values()]


def load_readings(path) -> list:
    """Read a JSON-lines reading log of ``{tick, beacon_id, rssi_dbm}`` objects."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out.append(RssiReading(str(row["beacon_id"]), float(row["rssi_dbm"]), int(row.get("tick", 0))))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    return out


def group_by_tick(readings):
    groups = {}
    for r in readings:
        groups.setdefault(r.tick, []).append(r)
    return dict(sorted(groups.items()))
