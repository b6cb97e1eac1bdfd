import io
import threading
import time
from pathlib import Path

import httpx
import pytest
import uvicorn
from PIL import Image

from gatekeeper.server import ServerConfig, create_app

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"
PHOTO_DIR = SCENARIO_DIR / "photos"

ADMIN_TOKEN = "test-admin-token"


def make_photo(color=(70, 130, 200), fmt="PNG", size=(16, 16)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format=fmt)
    return buf.getvalue()


class LiveServer:
    """A real uvicorn server on an ephemeral port, run in a thread."""

    def __init__(self, data_dir: Path, **overrides):
        config_kwargs = dict(
            data_dir=data_dir,
            admin_token=ADMIN_TOKEN,
            test_mode=True,
            heartbeat_seconds=0.2,
        )
        config_kwargs.update(overrides)
        self.config = ServerConfig(**config_kwargs)
        self.app = create_app(self.config)
        self.store = self.app.state.store
        self.feed = self.app.state.feed
        self._server = uvicorn.Server(
            uvicorn.Config(self.app, host="127.0.0.1", port=0, log_level="warning")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self.url = ""

    def start(self) -> "LiveServer":
        self._thread.start()
        deadline = time.monotonic() + 15
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        self.url = f"http://127.0.0.1:{port}"
        return self

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)

    @property
    def admin_headers(self) -> dict:
        return {"Authorization": f"Bearer {ADMIN_TOKEN}"}


@pytest.fixture
def live_server(tmp_path):
    server = LiveServer(tmp_path / "data").start()
    yield server
    server.stop()


@pytest.fixture
def client():
    with httpx.Client(timeout=30.0) as c:
        yield c


@pytest.fixture
def png_photo():
    return make_photo()
