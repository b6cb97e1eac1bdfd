import pytest
from click.testing import CliRunner

from gatekeeper.cli import main
from gatekeeper.scenario import (
    ExpectationFailed,
    ScenarioParseError,
    ScenarioRunner,
    load_scenario,
    parse_scenario,
    run_scenario_file,
)
from gatekeeper.sim import read_gate_payload
from gatekeeper.tag import load_tag_image

from .conftest import ADMIN_TOKEN, PHOTO_DIR, SCENARIO_DIR, LiveServer, make_photo


class TestParser:
    def test_parses_the_reference_scenario(self):
        scenario = load_scenario(SCENARIO_DIR / "acceptance.scn")
        actions = [s.action for s in scenario.steps]
        assert actions.count("checkin") == 6
        assert actions.count("expect") == 6
        assert actions.count("register_user") == 3
        assert actions.count("register_gate") == 2

    def test_unknown_action(self):
        with pytest.raises(ScenarioParseError) as exc:
            parse_scenario("at 0 frobnicate x\n")
        assert exc.value.lineno == 1

    def test_unsorted_offsets(self):
        text = "at 5 register_gate g Main here\nat 1 register_user u A B p.png\n"
        with pytest.raises(ScenarioParseError) as exc:
            parse_scenario(text)
        assert exc.value.lineno == 2

    def test_undefined_user_reference(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("at 0 register_gate g Main here\nat 1 checkin c1 ghost g p.png\n")

    def test_expect_references_unknown_checkin(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("at 0 expect c9 granted\n")

    def test_bad_reason(self):
        text = (
            "at 0 register_gate g Main here\n"
            "at 0 register_user u A B p.png\n"
            "at 1 checkin c1 u g p.png\n"
            "at 1 expect c1 denied not_a_reason\n"
        )
        with pytest.raises(ScenarioParseError) as exc:
            parse_scenario(text)
        assert exc.value.lineno == 4

    def test_line_numbers_skip_comments(self):
        text = "# header\n\n# more\nat 0 badaction x\n"
        with pytest.raises(ScenarioParseError) as exc:
            parse_scenario(text)
        assert exc.value.lineno == 4

    def test_quoted_names_with_spaces(self):
        scenario = parse_scenario('at 0 register_gate g "Main entrance" "North wing"\n')
        assert scenario.steps[0].args == ("g", "Main entrance", "North wing")

    def test_base_time_must_lead(self):
        text = "at 0 register_gate g Main here\nbase-time 2026-01-01T00:00:00Z\n"
        with pytest.raises(ScenarioParseError):
            parse_scenario(text)


class TestRunner:
    def test_acceptance_scenario_all_expectations_pass(self, live_server):
        report = run_scenario_file(
            live_server.url, ADMIN_TOKEN, SCENARIO_DIR / "acceptance.scn", seed=1
        )
        assert report.passed, report.failures()
        assert len(report.results) == 6
        report.raise_for_failure()

    def test_expiry_boundary_scenario(self, live_server):
        report = run_scenario_file(
            live_server.url, ADMIN_TOKEN, SCENARIO_DIR / "expiry_boundary.scn", seed=1
        )
        assert report.passed, report.failures()

    def test_failed_expectation_reported(self, live_server, tmp_path):
        scn = tmp_path / "bad.scn"
        scn.write_text(
            "at 0 register_gate g Main here\n"
            f"at 0 register_user u Alice Novak {PHOTO_DIR}/alice.png\n"
            "at 1 checkin c1 u g " + str(PHOTO_DIR / "alice.png") + "\n"
            "at 1 expect c1 granted\n"
        )
        report = run_scenario_file(live_server.url, ADMIN_TOKEN, scn, seed=1)
        assert not report.passed
        failure = report.failures()[0]
        assert failure.checkin_id == "c1"
        assert failure.actual == "denied no_policy"
        with pytest.raises(ExpectationFailed):
            report.raise_for_failure()

    def test_transcript_is_pure_function_of_script(self, tmp_path):
        import httpx

        transcripts = []
        for run in range(2):
            server = LiveServer(tmp_path / f"data{run}").start()
            try:
                report = run_scenario_file(
                    server.url, ADMIN_TOKEN, SCENARIO_DIR / "acceptance.scn", seed=7
                )
                assert report.passed
                with httpx.Client(timeout=10) as client:
                    body = client.get(
                        f"{server.url}/api/events", params={"page_size": 100},
                        headers=server.admin_headers,
                    ).json()
                # project out the deployment-specific values (hashes stay:
                # the same photo files produce the same digests)
                transcripts.append(
                    [
                        (e["seq"], e["user_id"], e["user_name"], e["gate_id"],
                         e["gate_name"], e["timestamp"], e["outcome"], e["reason"],
                         e["gate_photo"], e["registration_photo"])
                        for e in body["events"]
                    ]
                )
            finally:
                server.stop()
        assert transcripts[0] == transcripts[1]


class TestCli:
    def run(self, *args):
        return CliRunner().invoke(main, list(args), catch_exceptions=False)

    def test_provision_and_dump(self, live_server, tmp_path):
        out = tmp_path / "main.gktag"
        result = self.run(
            "provision-tag", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--name", "Main", "--location", "North", "--out", str(out), "--seed", "5",
        )
        assert result.exit_code == 0, result.output
        chip = load_tag_image(out.read_bytes())
        payload = read_gate_payload(chip)
        assert payload.gate_id == 1
        assert payload.server_guid == live_server.store.credentials.server_guid
        assert chip.password == live_server.store.credentials.tag_password

        dump = self.run("dump-tag", str(out))
        assert dump.exit_code == 0
        assert "gk:acl" in dump.output
        assert "gate_id=1" in dump.output

    def test_provision_refuses_existing_file(self, live_server, tmp_path):
        out = tmp_path / "dup.gktag"
        out.write_bytes(b"something")
        result = self.run(
            "provision-tag", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--name", "Other", "--out", str(out),
        )
        assert result.exit_code != 0
        assert "already exists" in result.output

    def test_provision_duplicate_gate_name(self, live_server, tmp_path):
        first = self.run(
            "provision-tag", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--name", "Main", "--out", str(tmp_path / "a.gktag"),
        )
        assert first.exit_code == 0
        second = self.run(
            "provision-tag", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--name", "Main", "--out", str(tmp_path / "b.gktag"),
        )
        assert second.exit_code == 1
        assert "duplicate_name" in second.output

    def test_provision_lock_flag(self, live_server, tmp_path):
        out = tmp_path / "locked.gktag"
        result = self.run(
            "provision-tag", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--name", "Vault", "--out", str(out), "--lock",
        )
        assert result.exit_code == 0
        assert load_tag_image(out.read_bytes()).read_only

    def test_checkin_exit_codes(self, live_server, tmp_path):
        import httpx

        out = tmp_path / "gate.gktag"
        self.run(
            "provision-tag", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--name", "Main", "--out", str(out),
        )
        with httpx.Client(timeout=10) as client:
            resp = client.post(
                f"{live_server.url}/api/users",
                data={"first_name": "Alice", "last_name": "Novak"},
                files={"photo": ("a.png", make_photo(), "application/octet-stream")},
                headers=live_server.admin_headers,
            )
            user = resp.json()
            client.put(
                f"{live_server.url}/api/gates/1/policies/{user['user']['user_id']}",
                json={"enabled": True, "expires_at": "2099-01-01T00:00:00Z"},
                headers=live_server.admin_headers,
            )
        photo = tmp_path / "gate-photo.png"
        photo.write_bytes(make_photo((77, 77, 77)))

        granted = self.run(
            "checkin", "--server", live_server.url, "--device-token", user["device_token"],
            "--tag", str(out), "--photo", str(photo),
        )
        assert granted.exit_code == 0
        assert granted.output.strip() == "granted"

        wrong_token = self.run(
            "checkin", "--server", live_server.url, "--device-token", "nope",
            "--tag", str(out), "--photo", str(photo),
        )
        assert wrong_token.exit_code == 1  # transport-level rejection

        missing_photo = self.run(
            "checkin", "--server", live_server.url, "--device-token", user["device_token"],
            "--tag", str(out), "--photo", str(tmp_path / "absent.png"),
        )
        assert missing_photo.exit_code == 1
        assert "not found" in missing_photo.output

    def test_checkin_denied_exit_code_2(self, live_server, tmp_path):
        import httpx

        out = tmp_path / "gate.gktag"
        self.run(
            "provision-tag", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--name", "Main", "--out", str(out),
        )
        with httpx.Client(timeout=10) as client:
            resp = client.post(
                f"{live_server.url}/api/users",
                data={"first_name": "Bob", "last_name": "Ricci"},
                files={"photo": ("b.png", make_photo(), "application/octet-stream")},
                headers=live_server.admin_headers,
            )
            user = resp.json()
        photo = tmp_path / "photo.png"
        photo.write_bytes(make_photo())
        denied = self.run(
            "checkin", "--server", live_server.url, "--device-token", user["device_token"],
            "--tag", str(out), "--photo", str(photo),
        )
        assert denied.exit_code == 2
        assert denied.output.strip() == "denied no_policy"

    def test_checkin_blank_tag_is_local_error(self, live_server, tmp_path):
        from gatekeeper.tag import TagStandard, new_tag, save_tag_image

        blank = tmp_path / "blank.gktag"
        blank.write_bytes(save_tag_image(new_tag(TagStandard.NTAG213, seed=1)))
        photo = tmp_path / "photo.png"
        photo.write_bytes(make_photo())
        result = self.run(
            "checkin", "--server", live_server.url, "--device-token", "any",
            "--tag", str(blank), "--photo", str(photo),
        )
        assert result.exit_code == 1
        assert "unreadable tag" in result.output

    def test_run_scenario_command(self, live_server):
        result = self.run(
            "run-scenario", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--seed", "3", str(SCENARIO_DIR / "acceptance.scn"),
        )
        assert result.exit_code == 0, result.output
        assert result.output.count("PASS") == 6
        assert "6/6 expectations passed" in result.output

    def test_run_scenario_parse_error_exit_1(self, live_server, tmp_path):
        bad = tmp_path / "bad.scn"
        bad.write_text("at 0 nonsense\n")
        result = self.run(
            "run-scenario", "--server", live_server.url, "--admin-token", ADMIN_TOKEN, str(bad)
        )
        assert result.exit_code == 1
        assert "parse error" in result.output
        assert "line 1" in result.output

    def test_run_scenario_failure_exit_2(self, live_server, tmp_path):
        scn = tmp_path / "fail.scn"
        scn.write_text(
            "at 0 register_gate g Main here\n"
            f"at 0 register_user u Alice Novak {PHOTO_DIR}/alice.png\n"
            f"at 1 checkin c1 u g {PHOTO_DIR}/alice.png\n"
            "at 1 expect c1 granted\n"
        )
        result = self.run(
            "run-scenario", "--server", live_server.url, "--admin-token", ADMIN_TOKEN, str(scn)
        )
        assert result.exit_code == 2
        assert "FAIL c1" in result.output

    def test_stress_command(self, live_server):
        result = self.run(
            "stress", "--server", live_server.url, "--admin-token", ADMIN_TOKEN,
            "--parallel", "8", "--count", "40",
        )
        assert result.exit_code == 0, result.output
        assert "PASS: gap-free" in result.output
