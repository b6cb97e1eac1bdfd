"""Line-oriented scenario scripts and their runner.

A scenario drives one server through registrations, policy edits and
check-ins on a virtual clock, then asserts outcomes. The grammar is plain
text, one step per line, shell-style quoting for names with spaces:

    # comment
    base-time 2026-01-01T00:00:00Z
    at <seconds> register_gate  <gate>  <name> <location>
    at <seconds> register_user  <user>  <first> <last> <photo-path>
    at <seconds> upsert_policy  <user> <gate>  enabled|disabled  +<seconds>|<iso-time>
    at <seconds> forge_gate     <gate>  <gate-id>
    at <seconds> checkin        <id>  <user> <gate>  <photo-path>
    at <seconds> expect         <id>  granted
    at <seconds> expect         <id>  denied <reason>

Steps must be sorted by offset. ``forge_gate`` programs a local tag with a
random GUID the server never issued, for exercising foreign-organization
denials. Photo paths are resolved against the scenario file's directory.
Expirations written ``+N`` mean N seconds after base-time.

Every request carries an ``X-Test-Time`` header with base-time plus the
step offset, so runs are deterministic and only work against a server in
test mode. Given a seed, tag uids and forged GUIDs are deterministic too.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from random import Random
from typing import Optional

import httpx

from . import sim
from .events import iso_utc, parse_utc
from .ndef import GateTagPayload
from .policy import DenyReason
from .server import DEFAULT_ANDROID_APP_ID, DEFAULT_UNIVERSAL_LINK
from .tag import TagChip, TagStandard

DEFAULT_BASE_TIME = "2026-01-01T00:00:00Z"

_ACTIONS = ("register_gate", "register_user", "upsert_policy", "forge_gate", "checkin", "expect")


class ScenarioParseError(Exception):
    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ExpectationFailed(Exception):
    """One or more expect steps did not hold."""


@dataclass(frozen=True)
class ScenarioStep:
    lineno: int
    at: float
    action: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Scenario:
    base_time: datetime
    steps: tuple[ScenarioStep, ...]


@dataclass(frozen=True)
class ExpectResult:
    lineno: int
    checkin_id: str
    expected: str
    actual: str
    passed: bool


@dataclass
class ScenarioReport:
    results: list[ExpectResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[ExpectResult]:
        return [r for r in self.results if not r.passed]

    def summary(self) -> str:
        failed = len(self.failures())
        return f"{len(self.results) - failed}/{len(self.results)} expectations passed"

    def raise_for_failure(self) -> None:
        failed = self.failures()
        if failed:
            ids = ", ".join(r.checkin_id for r in failed)
            raise ExpectationFailed(f"failed expectations: {ids}")


def _arity(lineno: int, action: str, args: list[str], count: int) -> None:
    if len(args) != count:
        raise ScenarioParseError(lineno, f"{action} takes {count} arguments, got {len(args)}")


def parse_scenario(text: str) -> Scenario:
    base_time = parse_utc(DEFAULT_BASE_TIME)
    steps: list[ScenarioStep] = []
    users: set[str] = set()
    gates: set[str] = set()
    checkins: set[str] = set()
    last_at: Optional[float] = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = shlex.split(line)
        except ValueError as exc:
            raise ScenarioParseError(lineno, f"bad quoting: {exc}") from None

        if tokens[0] == "base-time":
            if steps:
                raise ScenarioParseError(lineno, "base-time must come before all steps")
            if len(tokens) != 2:
                raise ScenarioParseError(lineno, "base-time takes one timestamp")
            try:
                base_time = parse_utc(tokens[1])
            except ValueError:
                raise ScenarioParseError(lineno, f"bad timestamp {tokens[1]!r}") from None
            continue

        if tokens[0] != "at" or len(tokens) < 3:
            raise ScenarioParseError(lineno, "step must start with 'at <seconds> <action>'")
        try:
            at = float(tokens[1])
        except ValueError:
            raise ScenarioParseError(lineno, f"bad offset {tokens[1]!r}") from None
        if last_at is not None and at < last_at:
            raise ScenarioParseError(lineno, "steps must be sorted by offset")
        last_at = at

        action, args = tokens[2], tokens[3:]
        if action not in _ACTIONS:
            raise ScenarioParseError(lineno, f"unknown action {action!r}")

        if action == "register_gate":
            _arity(lineno, action, args, 3)
            if args[0] in gates:
                raise ScenarioParseError(lineno, f"gate {args[0]!r} already defined")
            gates.add(args[0])
        elif action == "register_user":
            _arity(lineno, action, args, 4)
            if args[0] in users:
                raise ScenarioParseError(lineno, f"user {args[0]!r} already defined")
            users.add(args[0])
        elif action == "forge_gate":
            _arity(lineno, action, args, 2)
            if args[0] in gates:
                raise ScenarioParseError(lineno, f"gate {args[0]!r} already defined")
            if not args[1].isdigit():
                raise ScenarioParseError(lineno, f"forged gate id must be an integer, got {args[1]!r}")
            gates.add(args[0])
        elif action == "upsert_policy":
            _arity(lineno, action, args, 4)
            if args[0] not in users:
                raise ScenarioParseError(lineno, f"unknown user {args[0]!r}")
            if args[1] not in gates:
                raise ScenarioParseError(lineno, f"unknown gate {args[1]!r}")
            if args[2] not in ("enabled", "disabled"):
                raise ScenarioParseError(lineno, "policy status must be 'enabled' or 'disabled'")
            if not args[3].startswith("+"):
                try:
                    parse_utc(args[3])
                except ValueError:
                    raise ScenarioParseError(lineno, f"bad expiration {args[3]!r}") from None
        elif action == "checkin":
            _arity(lineno, action, args, 4)
            if args[0] in checkins:
                raise ScenarioParseError(lineno, f"checkin id {args[0]!r} already used")
            if args[1] not in users:
                raise ScenarioParseError(lineno, f"unknown user {args[1]!r}")
            if args[2] not in gates:
                raise ScenarioParseError(lineno, f"unknown gate {args[2]!r}")
            checkins.add(args[0])
        elif action == "expect":
            if len(args) == 2 and args[1] == "granted":
                pass
            elif len(args) == 3 and args[1] == "denied":
                try:
                    DenyReason(args[2])
                except ValueError:
                    raise ScenarioParseError(lineno, f"unknown reason {args[2]!r}") from None
            else:
                raise ScenarioParseError(
                    lineno, "expect takes '<id> granted' or '<id> denied <reason>'"
                )
            if args[0] not in checkins:
                raise ScenarioParseError(lineno, f"expect references unknown checkin {args[0]!r}")

        steps.append(ScenarioStep(lineno, at, action, tuple(args)))

    return Scenario(base_time=base_time, steps=tuple(steps))


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


class ScenarioRunner:
    """Execute one scenario against a test-mode server."""

    def __init__(
        self,
        server_url: str,
        admin_token: str,
        *,
        photo_root: Path = Path("."),
        seed: Optional[int] = None,
        client: Optional[httpx.Client] = None,
    ) -> None:
        self.server_url = server_url.rstrip("/")
        self.admin_token = admin_token
        self.photo_root = Path(photo_root)
        self.rng = Random(seed)
        self._client = client
        self.device_tokens: dict[str, str] = {}
        self.user_ids: dict[str, str] = {}
        self.tags: dict[str, TagChip] = {}
        self.gate_ids: dict[str, int] = {}
        self.checkin_results: dict[str, dict] = {}

    def _photo(self, path_text: str) -> bytes:
        path = self.photo_root / path_text
        return path.read_bytes()

    def run(self, scenario: Scenario) -> ScenarioReport:
        report = ScenarioReport()
        client = self._client or httpx.Client(timeout=30.0)
        try:
            for step in scenario.steps:
                when = scenario.base_time + timedelta(seconds=step.at)
                self._run_step(client, scenario, step, when, report)
        finally:
            if self._client is None:
                client.close()
        return report

    def _admin_headers(self, when: datetime) -> dict[str, str]:
        return {
            "Authorization": f"Bearer {self.admin_token}",
            "X-Test-Time": iso_utc(when),
        }

    def _run_step(
        self,
        client: httpx.Client,
        scenario: Scenario,
        step: ScenarioStep,
        when: datetime,
        report: ScenarioReport,
    ) -> None:
        args = step.args
        if step.action == "register_gate":
            ref, name, location = args
            chip, body = sim.provision_tag(
                client,
                self.server_url,
                self.admin_token,
                name,
                location,
                TagStandard.NTAG213,
                seed=self.rng.getrandbits(32),
            )
            self.tags[ref] = chip
            self.gate_ids[ref] = body["gate"]["gate_id"]
        elif step.action == "forge_gate":
            ref, gate_id = args
            payload = GateTagPayload(
                server_guid=self.rng.randbytes(16),
                gate_id=int(gate_id),
                android_app_id=DEFAULT_ANDROID_APP_ID,
                universal_link=DEFAULT_UNIVERSAL_LINK,
            )
            self.tags[ref] = sim.forge_tag(payload, seed=self.rng.getrandbits(32))
            self.gate_ids[ref] = int(gate_id)
        elif step.action == "register_user":
            ref, first, last, photo = args
            resp = client.post(
                f"{self.server_url}/api/users",
                data={"first_name": first, "last_name": last},
                files={"photo": (Path(photo).name, self._photo(photo), "application/octet-stream")},
                headers=self._admin_headers(when),
            )
            resp.raise_for_status()
            body = resp.json()
            self.device_tokens[ref] = body["device_token"]
            self.user_ids[ref] = body["user"]["user_id"]
        elif step.action == "upsert_policy":
            user_ref, gate_ref, status, expires_text = args
            if expires_text.startswith("+"):
                expires = scenario.base_time + timedelta(seconds=float(expires_text[1:]))
            else:
                expires = parse_utc(expires_text)
            resp = client.put(
                f"{self.server_url}/api/gates/{self.gate_ids[gate_ref]}/policies/{self.user_ids[user_ref]}",
                json={"enabled": status == "enabled", "expires_at": iso_utc(expires)},
                headers=self._admin_headers(when),
            )
            resp.raise_for_status()
        elif step.action == "checkin":
            checkin_id, user_ref, gate_ref, photo = args
            result = sim.perform_checkin(
                client,
                self.server_url,
                self.device_tokens[user_ref],
                self.tags[gate_ref],
                self._photo(photo),
                Path(photo).name,
                client_time=iso_utc(when),
                test_time=iso_utc(when),
            )
            self.checkin_results[checkin_id] = result
        elif step.action == "expect":
            checkin_id = args[0]
            expected = "granted" if args[1] == "granted" else f"denied {args[2]}"
            result = self.checkin_results[checkin_id]
            actual = result["outcome"]
            if result.get("reason"):
                actual += f" {result['reason']}"
            report.results.append(
                ExpectResult(step.lineno, checkin_id, expected, actual, expected == actual)
            )


def run_scenario_file(
    server_url: str,
    admin_token: str,
    path: str | Path,
    *,
    seed: Optional[int] = None,
    client: Optional[httpx.Client] = None,
) -> ScenarioReport:
    scenario = load_scenario(path)
    runner = ScenarioRunner(
        server_url,
        admin_token,
        photo_root=Path(path).parent,
        seed=seed,
        client=client,
    )
    return runner.run(scenario)
