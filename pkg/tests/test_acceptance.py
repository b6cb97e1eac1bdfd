"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Expected values are frozen from independent oracles: the byte
figures from a layout-level size accounting, the filter subsets from a
brute-force predicate over the raw event list.
"""

import concurrent.futures
import tempfile
import time
from pathlib import Path
from random import Random

import httpx
import pytest

from gatekeeper.ndef import (
    GateTagPayload,
    NdefMessage,
    NdefRecord,
    FlagViolation,
    TrailingBytes,
    Truncated,
    build_gate_tag_message,
    decode_message,
    encode_message,
    parse_gate_tag_message,
    payload_accounting,
)
from gatekeeper.tag import (
    AuthFailed,
    CapacityExceeded,
    ReadOnly,
    TagStandard,
    load_tag_image,
    new_tag,
    save_tag_image,
)
from gatekeeper.scenario import run_scenario_file

from .conftest import ADMIN_TOKEN, SCENARIO_DIR, LiveServer, make_photo
from .test_server import FeedReader

REFERENCE_APP_ID = "com.gatekeeper.accessctl"  # 24 chars
REFERENCE_LINK = "https://app.gatekeeper.example.com/gate/entry?src=tag&ver=1.0"  # https:// + 53


def reference_payload() -> GateTagPayload:
    assert len(REFERENCE_APP_ID) == 24
    assert len(REFERENCE_LINK) - len("https://") == 53
    return GateTagPayload(bytes(range(16)), 7, REFERENCE_APP_ID, REFERENCE_LINK)


def ok(line: str) -> None:
    print(f"[PASS] {line}")


def test_criterion_1_table_byte_accounting():
    started = time.monotonic()
    acc = payload_accounting(reference_payload())
    assert acc.server_id_bytes == 16
    assert acc.gate_id_bytes == 4
    assert acc.aar_bytes == 42
    assert acc.universal_link_bytes == 58
    assert acc.total_bytes == 120
    elapsed = time.monotonic() - started
    assert elapsed < 1.0
    ok(f"criterion 1: byte accounting 16/4/42/58 total 120, exact ({elapsed * 1000:.1f} ms)")


def test_criterion_2_capacity_fit():
    encoded = encode_message(build_gate_tag_message(reference_payload()))
    assert len(encoded) == 129
    chip = new_tag(TagStandard.NTAG213, seed=1).write_ndef(encoded)
    assert len(chip.memory) == 133  # 129 + 4-byte framing, exact
    assert len(chip.memory) <= 144
    ok("criterion 2: 129-byte message frames to exactly 133 of 144 bytes")


def _random_record(rng: Random) -> NdefRecord:
    if rng.random() < 0.05:
        return NdefRecord(0)
    # payloads cluster small with a slice beyond the short-record boundary
    payload_len = rng.randint(256, 300) if rng.random() < 0.05 else rng.randint(0, 48)
    id_bytes = rng.randbytes(rng.randint(0, 8)) if rng.random() < 0.3 else None
    return NdefRecord(
        tnf=rng.randint(1, 6),
        type_bytes=rng.randbytes(rng.randint(0, 8)),
        payload=rng.randbytes(payload_len),
        id_bytes=id_bytes,
    )


def _random_gate_payload(rng: Random) -> GateTagPayload:
    printable = "".join(chr(c) for c in range(0x21, 0x7F))
    app_id = "".join(rng.choice(printable) for _ in range(rng.randint(1, 48)))
    scheme = rng.choice(["https://", "http://", "mailto:", "tel:", "https://www."])
    link = scheme + "".join(rng.choice(printable) for _ in range(rng.randint(0, 50)))
    return GateTagPayload(rng.randbytes(16), rng.getrandbits(32), app_id, link)


def test_criterion_3_codec_roundtrip_and_prefix_rejection():
    started = time.monotonic()
    rng = Random(20260101)
    for _ in range(1000):
        msg = NdefMessage([_random_record(rng) for _ in range(rng.randint(1, 4))])
        encoded = encode_message(msg)
        assert decode_message(encoded) == msg
        for cut in range(len(encoded)):
            with pytest.raises((Truncated, FlagViolation, TrailingBytes)):
                decode_message(encoded[:cut])
    for _ in range(1000):
        payload = _random_gate_payload(rng)
        rebuilt = parse_gate_tag_message(
            decode_message(encode_message(build_gate_tag_message(payload)))
        )
        assert rebuilt == payload
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    ok(f"criterion 3: 1000+1000 roundtrips, all strict prefixes rejected ({elapsed:.2f} s)")


def test_criterion_4_tag_security_invariants():
    rng = Random(42)
    password = bytes.fromhex("abcdef01")
    for _ in range(300):
        chip = new_tag(TagStandard.NTAG213, seed=rng.getrandbits(32))
        chip = chip.set_password(password)
        locked = False
        for _ in range(rng.randint(1, 10)):
            op = rng.choice(["write", "lock", "set_password", "save_load", "good_write"])
            wrong = rng.choice([None, bytes.fromhex("00000000")])
            if op == "write":
                with pytest.raises((AuthFailed, ReadOnly)):
                    chip.write_ndef(b"x", password=wrong)
            elif op == "set_password":
                with pytest.raises((AuthFailed, ReadOnly)):
                    chip.set_password(bytes(4), old_password=wrong)
            elif op == "lock":
                if locked:
                    chip = chip.lock_readonly(password=wrong)  # idempotent no-op
                else:
                    with pytest.raises(AuthFailed):
                        chip.lock_readonly(password=wrong)
                    if rng.random() < 0.3:
                        chip = chip.lock_readonly(password=password)
                        locked = True
            elif op == "save_load":
                chip = load_tag_image(save_tag_image(chip))
                assert chip.password == password
                assert chip.read_only == locked
            elif op == "good_write":
                if locked:
                    with pytest.raises(ReadOnly):
                        chip.write_ndef(b"x", password=password)
                else:
                    chip = chip.write_ndef(b"x", password=password)
            assert chip.read_only == locked
    ok("criterion 4: password gates all mutations; lock is permanent across save/load")


def fresh_server(tag: str) -> LiveServer:
    return LiveServer(Path(tempfile.mkdtemp(prefix=f"gk-{tag}-")) / "data").start()


def test_criterion_5_expiry_boundary():
    server = fresh_server("expiry")
    try:
        report = run_scenario_file(
            server.url, ADMIN_TOKEN, SCENARIO_DIR / "expiry_boundary.scn", seed=11
        )
        assert report.passed, report.failures()
        results = {r.checkin_id: r for r in report.results}
        assert results["before"].actual == "granted"
        assert results["at_expiry"].actual == "denied policy_expired"
    finally:
        server.stop()
    ok("criterion 5: granted at T-1s, denied policy_expired exactly at T")


@pytest.fixture(scope="module")
def scenario_run():
    """One full run of the reference scenario with live subscribers attached."""
    started = time.monotonic()
    server = fresh_server("scenario")
    all_events = FeedReader(server.url)
    denied_events = FeedReader(server.url, params={"denied_only": "true"})
    assert all_events.connected.wait(5) and denied_events.connected.wait(5)

    report = run_scenario_file(server.url, ADMIN_TOKEN, SCENARIO_DIR / "acceptance.scn", seed=2)

    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        if len(all_events.events()) >= 6 and len(denied_events.events()) >= 4:
            break
        time.sleep(0.05)
    all_events.stop()
    denied_events.stop()

    with httpx.Client(timeout=10) as client:
        persisted = client.get(
            f"{server.url}/api/events",
            params={"page_size": 100},
            headers=server.admin_headers,
        ).json()["events"]
    elapsed = time.monotonic() - started
    yield {
        "server": server,
        "report": report,
        "persisted": persisted,  # newest first
        "feed_all": all_events.events(),
        "feed_denied": denied_events.events(),
        "elapsed": elapsed,
    }
    server.stop()


def test_criterion_6_end_to_end_scenario(scenario_run):
    report = scenario_run["report"]
    assert report.passed, report.failures()
    persisted = scenario_run["persisted"]
    assert len(persisted) == 6

    chronological = list(reversed(persisted))
    assert [e["seq"] for e in chronological] == [1, 2, 3, 4, 5, 6]

    # brute-force oracle over the raw list, checked against the endpoint
    server = scenario_run["server"]
    with httpx.Client(timeout=10) as client:

        def query(**params):
            body = client.get(
                f"{server.url}/api/events",
                params={"page_size": 100, **params},
                headers=server.admin_headers,
            ).json()
            return [e["seq"] for e in body["events"]]

        denied = [e["seq"] for e in persisted if e["outcome"] == "denied"]
        assert len(denied) == 4
        assert query(denied_only="true") == denied

        for gate_id in {e["gate_id"] for e in persisted}:
            expected = [e["seq"] for e in persisted if e["gate_id"] == gate_id]
            assert query(gate=gate_id) == expected, f"gate {gate_id}"
        for user_id in {e["user_id"] for e in persisted}:
            expected = [e["seq"] for e in persisted if e["user_id"] == user_id]
            assert query(user=user_id) == expected, f"user {user_id}"

    elapsed = scenario_run["elapsed"]
    assert elapsed < 30.0
    ok(f"criterion 6: 6 events, 4 denied, filters match brute force ({elapsed:.2f} s)")


def test_criterion_7_feed_reconciliation(scenario_run):
    persisted_chronological = list(reversed(scenario_run["persisted"]))

    def strip(frame):
        return {k: v for k, v in frame.items() if k != "type"}

    feed_all = [strip(f) for f in scenario_run["feed_all"]]
    assert feed_all == persisted_chronological  # same events, same order, once each

    feed_denied = [strip(f) for f in scenario_run["feed_denied"]]
    denied_persisted = [e for e in persisted_chronological if e["outcome"] == "denied"]
    assert len(feed_denied) == 4
    assert feed_denied == denied_persisted
    ok("criterion 7: feed transcript equals the persisted log; denied feed got the 4 denials")


def test_criterion_8_concurrent_checkins():
    server = fresh_server("stress")
    try:
        with httpx.Client(timeout=60) as client:
            gate = client.post(
                f"{server.url}/api/gates",
                json={"name": "Main", "location": ""},
                headers=server.admin_headers,
            ).json()
            user = client.post(
                f"{server.url}/api/users",
                data={"first_name": "Load", "last_name": "Tester"},
                files={"photo": ("p.png", make_photo(), "application/octet-stream")},
                headers=server.admin_headers,
            ).json()
            client.put(
                f"{server.url}/api/gates/1/policies/{user['user']['user_id']}",
                json={"enabled": True, "expires_at": "2099-01-01T00:00:00Z"},
                headers=server.admin_headers,
            )
            photo = make_photo((120, 10, 200))

            def one(_):
                resp = client.post(
                    f"{server.url}/api/checkin",
                    data={"server_guid": gate["tag"]["server_guid"], "gate_id": "1"},
                    files={"photo": ("g.png", photo, "application/octet-stream")},
                    headers={"Authorization": f"Bearer {user['device_token']}"},
                )
                assert resp.status_code == 200
                return resp.json()["event_seq"]

            with concurrent.futures.ThreadPoolExecutor(max_workers=100) as pool:
                seqs = list(pool.map(one, range(100)))

            body = client.get(
                f"{server.url}/api/events", params={"page_size": 200},
                headers=server.admin_headers,
            ).json()
        assert body["total"] == 100
        assert sorted(seqs) == list(range(1, 101))  # gap-free, duplicate-free
        assert sorted(e["seq"] for e in body["events"]) == list(range(1, 101))
    finally:
        server.stop()
    ok("criterion 8: 100 parallel check-ins produced seq 1..100 with no gaps")
