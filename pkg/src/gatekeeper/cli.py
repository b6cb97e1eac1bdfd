"""Command-line front end: the server plus a desk-scale stand-in for the
admin device and the user's phone, passing tags around as image files."""

from __future__ import annotations

import concurrent.futures
import io
import struct
import sys
import time
from pathlib import Path
from typing import Optional

import click
import httpx

from . import sim
from .ndef import (
    ACL_RECORD_TYPE,
    AAR_RECORD_TYPE,
    TNF_EXTERNAL,
    TNF_WELL_KNOWN,
    URI_RECORD_TYPE,
    NdefError,
    decode_message,
    expand_uri,
    hexdump,
)
from .scenario import ScenarioParseError, load_scenario, ScenarioRunner
from .server import ServerConfig, run_server
from .tag import NoMessage, TagError, TagStandard, load_tag_image, save_tag_image

_STANDARDS = {"ntag213": TagStandard.NTAG213, "ntag216": TagStandard.NTAG216}

_TNF_NAMES = {
    0: "empty",
    1: "well-known",
    2: "mime",
    3: "absolute-uri",
    4: "external",
    5: "unknown",
    6: "unchanged",
}


@click.group()
def main() -> None:
    """Gate access control: server, tag tools and device simulator."""


@main.command()
@click.option("--host", default=None, help="listen address")
@click.option("--port", type=int, default=None, help="listen port")
@click.option("--data-dir", type=click.Path(path_type=Path), default=None)
@click.option("--admin-token", default=None)
@click.option("--app-id", default=None, help="Android application id written to tags")
@click.option("--universal-link", default=None, help="launch link written to tags")
@click.option("--test-mode", is_flag=True, help="honor the X-Test-Time override header")
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None,
              help="serve a built dashboard from this directory at /ui")
def serve(
    host: Optional[str],
    port: Optional[int],
    data_dir: Optional[Path],
    admin_token: Optional[str],
    app_id: Optional[str],
    universal_link: Optional[str],
    test_mode: bool,
    ui_dir: Optional[Path],
) -> None:
    """Run the organization server (flags override GATEKEEPER_* env vars)."""
    try:
        config = ServerConfig.from_env(
            host=host,
            port=port,
            data_dir=data_dir,
            admin_token=admin_token,
            android_app_id=app_id,
            universal_link=universal_link,
            test_mode=True if test_mode else None,
            ui_dir=ui_dir,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    run_server(config)


@main.command("provision-tag")
@click.option("--server", required=True, help="server base URL")
@click.option("--admin-token", required=True, envvar="GATEKEEPER_ADMIN_TOKEN")
@click.option("--name", required=True, help="unique gate name")
@click.option("--location", default="")
@click.option("--standard", type=click.Choice(sorted(_STANDARDS)), default="ntag213")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="tag image path")
@click.option("--lock", is_flag=True, help="flip the irreversible read-only switch after writing")
@click.option("--seed", type=int, default=None, help="deterministic chip uid")
def provision_tag_cmd(
    server: str,
    admin_token: str,
    name: str,
    location: str,
    standard: str,
    out: Path,
    lock: bool,
    seed: Optional[int],
) -> None:
    """Register a gate and write its tag image file."""
    if out.exists():
        raise click.ClickException(f"{out} already exists")
    try:
        with httpx.Client(timeout=30.0) as client:
            chip, body = sim.provision_tag(
                client,
                server.rstrip("/"),
                admin_token,
                name,
                location,
                _STANDARDS[standard],
                seed=seed,
                lock=lock,
            )
    except httpx.HTTPStatusError as exc:
        click.echo(f"server rejected the registration: {exc.response.text}", err=True)
        sys.exit(1)
    except httpx.HTTPError as exc:
        click.echo(f"transport error: {exc}", err=True)
        sys.exit(1)
    out.write_bytes(save_tag_image(chip))
    gate = body["gate"]
    click.echo(f"gate {gate['gate_id']} ({gate['name']}) written to {out}")


@main.command("dump-tag")
@click.argument("path", type=click.Path(path_type=Path, exists=True, dir_okay=False))
def dump_tag(path: Path) -> None:
    """Inspect a tag image: chip state, memory hex dump, decoded records."""
    try:
        chip = load_tag_image(path.read_bytes())
    except TagError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"standard:  {chip.standard.name} ({chip.standard.capacity_bytes} bytes)")
    click.echo(f"uid:       {chip.uid.hex()}")
    click.echo(f"read-only: {'yes' if chip.read_only else 'no'}")
    click.echo(f"password:  {'set' if chip.password is not None else 'none'}")
    click.echo(f"memory:    {len(chip.memory)} bytes")
    if chip.memory:
        click.echo(hexdump(chip.memory))
    try:
        msg = decode_message(chip.read_ndef())
    except (NoMessage, NdefError) as exc:
        click.echo(f"no decodable message: {exc}")
        return
    for index, rec in enumerate(msg.records, 1):
        kind = _TNF_NAMES.get(rec.tnf, str(rec.tnf))
        type_text = rec.type_bytes.decode("ascii", errors="replace")
        line = f"record {index}: tnf={kind} type={type_text!r} payload={len(rec.payload)}B"
        if rec.tnf == TNF_WELL_KNOWN and rec.type_bytes == URI_RECORD_TYPE:
            line += f" uri={expand_uri(rec.payload)}"
        elif rec.tnf == TNF_EXTERNAL and rec.type_bytes == ACL_RECORD_TYPE and len(rec.payload) == 20:
            guid = rec.payload[:16].hex()
            gate_id = struct.unpack(">I", rec.payload[16:])[0]
            line += f" server_guid={guid} gate_id={gate_id}"
        elif rec.tnf == TNF_EXTERNAL and rec.type_bytes == AAR_RECORD_TYPE:
            line += f" package={rec.payload.decode('ascii', errors='replace')}"
        click.echo(line)


@main.command()
@click.option("--server", required=True)
@click.option("--device-token", required=True, envvar="GATEKEEPER_DEVICE_TOKEN")
@click.option("--tag", "tag_path", required=True, type=click.Path(path_type=Path))
@click.option("--photo", "photo_path", required=True, type=click.Path(path_type=Path))
@click.option("--client-time", default=None, help="device clock value to report")
def checkin(
    server: str,
    device_token: str,
    tag_path: Path,
    photo_path: Path,
    client_time: Optional[str],
) -> None:
    """Check in at a gate by reading its tag image; exit 0 granted, 2 denied."""
    if not photo_path.is_file():
        click.echo(f"photo file {photo_path} not found", err=True)
        sys.exit(1)
    if not tag_path.is_file():
        click.echo(f"tag image {tag_path} not found", err=True)
        sys.exit(1)
    try:
        chip = load_tag_image(tag_path.read_bytes())
        chip.read_ndef()  # blank tags fail before any request goes out
    except TagError as exc:
        click.echo(f"unreadable tag: {exc}", err=True)
        sys.exit(1)
    try:
        with httpx.Client(timeout=30.0) as client:
            result = sim.perform_checkin(
                client,
                server.rstrip("/"),
                device_token,
                chip,
                photo_path.read_bytes(),
                photo_path.name,
                client_time=client_time,
            )
    except NdefError as exc:
        click.echo(f"unreadable tag: {exc}", err=True)
        sys.exit(1)
    except httpx.HTTPStatusError as exc:
        click.echo(f"server rejected the check-in: {exc.response.text}", err=True)
        sys.exit(1)
    except httpx.HTTPError as exc:
        click.echo(f"transport error: {exc}", err=True)
        sys.exit(1)
    if result["outcome"] == "granted":
        click.echo("granted")
        sys.exit(0)
    click.echo(f"denied {result['reason']}")
    sys.exit(2)


@main.command("run-scenario")
@click.option("--server", required=True)
@click.option("--admin-token", required=True, envvar="GATEKEEPER_ADMIN_TOKEN")
@click.option("--seed", type=int, default=0)
@click.argument("path", type=click.Path(path_type=Path, exists=True, dir_okay=False))
def run_scenario_cmd(server: str, admin_token: str, seed: int, path: Path) -> None:
    """Run a scripted scenario; exit nonzero when any expectation fails."""
    try:
        scenario = load_scenario(path)
    except ScenarioParseError as exc:
        click.echo(f"scenario parse error: {exc}", err=True)
        sys.exit(1)
    runner = ScenarioRunner(server, admin_token, photo_root=path.parent, seed=seed)
    try:
        report = runner.run(scenario)
    except httpx.HTTPError as exc:
        click.echo(f"transport error: {exc}", err=True)
        sys.exit(1)
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        click.echo(f"{status} {result.checkin_id}: expected {result.expected}, got {result.actual}")
    click.echo(report.summary())
    sys.exit(0 if report.passed else 2)


@main.command()
@click.option("--server", required=True)
@click.option("--admin-token", required=True, envvar="GATEKEEPER_ADMIN_TOKEN")
@click.option("--parallel", default=10, show_default=True, help="concurrent workers")
@click.option("--count", default=100, show_default=True, help="total check-ins")
def stress(server: str, admin_token: str, parallel: int, count: int) -> None:
    """Fire concurrent check-ins and verify the event log has no seq gaps."""
    from PIL import Image

    server = server.rstrip("/")
    marker = f"stress-{int(time.time() * 1000)}"
    buf = io.BytesIO()
    Image.new("RGB", (8, 8), (200, 120, 40)).save(buf, format="PNG")
    photo = buf.getvalue()

    with httpx.Client(timeout=60.0) as client:
        chip, body = sim.provision_tag(
            client, server, admin_token, f"{marker}-gate", "stress rig"
        )
        gate_id = body["gate"]["gate_id"]
        resp = client.post(
            f"{server}/api/users",
            data={"first_name": "Stress", "last_name": marker},
            files={"photo": ("stress.png", photo, "application/octet-stream")},
            headers=sim.admin_headers(admin_token),
        )
        resp.raise_for_status()
        user = resp.json()
        resp = client.put(
            f"{server}/api/gates/{gate_id}/policies/{user['user']['user_id']}",
            json={"enabled": True, "expires_at": "2099-01-01T00:00:00Z"},
            headers=sim.admin_headers(admin_token),
        )
        resp.raise_for_status()

        def one_checkin(_: int) -> int:
            result = sim.perform_checkin(
                client, server, user["device_token"], chip, photo, "stress.png"
            )
            if result["outcome"] != "granted":
                raise RuntimeError(f"unexpected outcome {result}")
            return result["event_seq"]

        started = time.monotonic()
        with concurrent.futures.ThreadPoolExecutor(max_workers=parallel) as pool:
            seqs = list(pool.map(one_checkin, range(count)))
        elapsed = time.monotonic() - started

    distinct = set(seqs)
    contiguous = len(distinct) == count and max(distinct) - min(distinct) + 1 == count
    click.echo(f"{count} check-ins in {elapsed:.2f}s ({count / elapsed:.0f}/s)")
    click.echo(f"event_seq range {min(distinct)}..{max(distinct)}, distinct {len(distinct)}")
    if not contiguous:
        click.echo("FAIL: sequence numbers have gaps or duplicates", err=True)
        sys.exit(1)
    click.echo("PASS: gap-free, duplicate-free sequence")


if __name__ == "__main__":
    main()
