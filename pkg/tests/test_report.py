import dataclasses

import pytest

from garagewatch.errors import MapError
from garagewatch.garage import PatrolEvent, Detection, simulate_patrol, stall_for_position
from garagewatch.localization import RssiReading
from garagewatch.plates import PlateCandidate
from garagewatch.registry import LookupConfig, OwnerLookupClient, Registry, TenantRecord
from garagewatch.report import LocalizationConfig, Status, build_report, classify_stall

EXPECTED = {
    "E-01": (Status.OWNER, "ABC123"),
    "E-04": (Status.OWNER, "KLM482"),
    "E-09": (Status.OWNER, "PQR735"),
    "E-11": (Status.OTHER_TENANT, "TUV264"),
    "E-07": (Status.UNKNOWN, "XYZ913"),
}


@pytest.fixture
def two_tenants():
    return Registry([TenantRecord("101", "A", "E-01", "sedan", "ABC123"),
                     TenantRecord("105", "B", "E-05", "sedan", "DEF456")])


def test_classify_rule_table(demo_scenario, two_tenants):
    g = demo_scenario.garage
    assert classify_stall("E-01", True, "ABC123", two_tenants, g).status is Status.OWNER
    other = classify_stall("E-01", True, "DEF456", two_tenants, g)
    assert other.status is Status.OTHER_TENANT and other.plate == "DEF456"
    assert classify_stall("E-01", True, None, two_tenants, g).status is Status.UNKNOWN
    assert classify_stall("E-01", True, "ZZZ999", two_tenants, g).plate == "ZZZ999"
    assert classify_stall("E-01", False, "ABC123", two_tenants, g).status is Status.EMPTY
    with pytest.raises(MapError):
        classify_stall("X-1", False, None, two_tenants, g)


def expected_status(sid):
    return EXPECTED.get(sid, (Status.EMPTY, None))


def test_demo_noiseless_matches_truth(demo_scenario, demo_registry):
    sc = dataclasses.replace(demo_scenario, rssi_sigma_db=0.0, ocr_char_p=0.0)
    report = build_report(simulate_patrol(sc), demo_registry, sc.garage)
    for entry in report.stalls:
        assert (entry.status.status, entry.status.plate) == expected_status(entry.stall_id)


def test_demo_noisy_with_lookup(demo_scenario, demo_registry, demo_paths):
    lookup = OwnerLookupClient(LookupConfig(fixture=str(demo_paths["owners"])))
    report = build_report(simulate_patrol(demo_scenario), demo_registry, demo_scenario.garage, lookup=lookup)
    assert len(report.stalls) == len(demo_scenario.garage.stalls)
    for entry in report.stalls:
        assert (entry.status.status, entry.status.plate) == expected_status(entry.stall_id)
        if entry.status.status is Status.OWNER:
            assert demo_registry.find_by_stall(entry.stall_id).plate == entry.ranked[0][0]
    intruder = report["E-07"]
    assert intruder.owner_lookup.owner_name == "M. QUISPE"
    assert intruder.lookup_outcome == "found"
    assert all(report[s].owner_lookup is None for s in ("E-01", "E-11", "E-02"))


def test_unknown_plate_missing_from_stub(demo_scenario, demo_registry, fixtures):
    lookup = OwnerLookupClient(LookupConfig(fixture=str(fixtures / "owners.json")))
    report = build_report(simulate_patrol(demo_scenario), demo_registry, demo_scenario.garage, lookup=lookup)
    assert report["E-07"].owner_lookup is None
    assert report["E-07"].lookup_outcome == "not-found"


def test_zero_events(demo_scenario, demo_registry):
    report = build_report([], demo_registry, demo_scenario.garage)
    assert len(report.stalls) == 12
    assert all(s.status.status is Status.EMPTY and s.zero_evidence for s in report.stalls)
    assert report.as_dict()["stalls"][0]["zero_evidence"] is True


def test_degenerate_event_is_skipped(demo_scenario, demo_registry):
    g = demo_scenario.garage
    bad = PatrolEvent(0, (0, 0), (RssiReading("B01", -60), RssiReading("B02", -60)), ())
    report = build_report([bad], demo_registry, g)
    assert report.skipped_events and report.skipped_events[0]["tick"] == 0
    assert len(report.stalls) == 12


def test_evidence_soundness(demo_scenario, demo_registry):
    events = simulate_patrol(demo_scenario)
    report = build_report(events, demo_registry, demo_scenario.garage)
    est_by_tick = {t: est for t, _, est in report.track}
    for entry in report.stalls:
        for t in entry.ticks:
            assert stall_for_position(demo_scenario.garage, est_by_tick[t]) == entry.stall_id


def test_report_determinism(demo_scenario, demo_registry, demo_paths):
    def run():
        lookup = OwnerLookupClient(LookupConfig(fixture=str(demo_paths["owners"])))
        return build_report(simulate_patrol(demo_scenario), demo_registry, demo_scenario.garage,
                            lookup=lookup).to_json()
    assert run() == run()


def test_vehicle_without_readable_plate(demo_scenario, demo_registry):
    g = demo_scenario.garage
    stall = g.stall("E-02")
    pose = (stall.center[0], stall.center[1] + 1.0)
    from garagewatch.garage import simulate_rssi
    readings = tuple(simulate_rssi(g, pose, demo_scenario.path_loss, 0.0))
    ev = PatrolEvent(0, pose, readings, (Detection(True, (PlateCandidate("??", 10),)),))
    report = build_report([ev], demo_registry, g)
    assert report["E-02"].status.status is Status.UNKNOWN
    assert report["E-02"].status.plate is None


def test_table_has_every_stall(demo_scenario, demo_registry):
    report = build_report(simulate_patrol(demo_scenario), demo_registry, demo_scenario.garage,
                          LocalizationConfig(method="gauss"))
    table = report.to_table()
    for sid in demo_scenario.garage.stall_ids:
        assert sid in table
