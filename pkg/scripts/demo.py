"""End-to-end walkthrough on a throwaway server.

Starts a test-mode server on an ephemeral port, provisions two gate tags,
registers a user, opens a live feed, performs a granted and a denied
check-in, then prints the feed transcript and the audit log.

    python scripts/demo.py
"""

import io
import json
import tempfile
import threading
import time
from pathlib import Path

import httpx
import uvicorn
from PIL import Image

from gatekeeper.server import ServerConfig, create_app
from gatekeeper import sim
from gatekeeper.tag import TagStandard

ADMIN = "demo-admin-token"


def photo(color):
    buf = io.BytesIO()
    Image.new("RGB", (48, 64), color).save(buf, format="PNG")
    return buf.getvalue()


def main():
    data_dir = Path(tempfile.mkdtemp(prefix="gatekeeper-demo-")) / "data"
    app = create_app(ServerConfig(data_dir=data_dir, admin_token=ADMIN, heartbeat_seconds=1.0))
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.01)
    url = f"http://127.0.0.1:{server.servers[0].sockets[0].getsockname()[1]}"
    print(f"server up at {url}, data in {data_dir}\n")

    frames = []
    feed_ready = threading.Event()

    def watch_feed():
        with httpx.Client(timeout=30) as c:
            with c.stream("GET", f"{url}/api/feed", headers=sim.admin_headers(ADMIN)) as resp:
                for line in resp.iter_lines():
                    if not line:
                        continue
                    frames.append(json.loads(line))
                    feed_ready.set()
                    if len([f for f in frames if f["type"] == "event"]) >= 2:
                        return

    watcher = threading.Thread(target=watch_feed, daemon=True)
    watcher.start()

    with httpx.Client(timeout=30) as client:
        feed_ready.wait(5)

        main_tag, body = sim.provision_tag(
            client, url, ADMIN, "Main entrance", "HQ north lobby", TagStandard.NTAG213, seed=1
        )
        lab_tag, _ = sim.provision_tag(
            client, url, ADMIN, "Laboratory", "Building 2", TagStandard.NTAG213, seed=2
        )
        print(f"provisioned gates: {body['gate']['name']} and Laboratory")
        print(f"tag message occupies {len(main_tag.memory)} of "
              f"{main_tag.standard.capacity_bytes} bytes\n")

        resp = client.post(
            f"{url}/api/users",
            data={"first_name": "Alice", "last_name": "Novak"},
            files={"photo": ("alice.png", photo((70, 130, 200)), "application/octet-stream")},
            headers=sim.admin_headers(ADMIN),
        )
        user = resp.json()
        print(f"registered {user['user']['first_name']} {user['user']['last_name']} "
              f"({user['user']['user_id']}), device token issued")

        client.put(
            f"{url}/api/gates/1/policies/{user['user']['user_id']}",
            json={"enabled": True, "expires_at": "2099-01-01T00:00:00Z"},
            headers=sim.admin_headers(ADMIN),
        )
        print("granted Alice access to gate 1 (no policy for gate 2)\n")

        gate_shot = photo((40, 40, 40))
        for tag, label in ((main_tag, "Main entrance"), (lab_tag, "Laboratory")):
            result = sim.perform_checkin(
                client, url, user["device_token"], tag, gate_shot, "gate.png"
            )
            verdict = result["outcome"] + (f" ({result['reason']})" if result["reason"] else "")
            print(f"check-in at {label}: {verdict}")

        watcher.join(timeout=5)
        print("\nlive feed transcript:")
        for frame in frames:
            print(f"  {json.dumps(frame)}")

        events = client.get(
            f"{url}/api/events", headers=sim.admin_headers(ADMIN)
        ).json()["events"]
        print("\naudit log (newest first):")
        for event in events:
            print(f"  #{event['seq']} {event['timestamp']} {event['user_name']} @ "
                  f"{event['gate_name'] or event['gate_id']}: {event['outcome']}"
                  f"{' (' + event['reason'] + ')' if event['reason'] else ''}")

    server.should_exit = True
    thread.join(timeout=5)


if __name__ == "__main__":
    main()
