"""Tenant registry (CSV persistence) and the owner-lookup client with its local stub backend.

Stub wire protocol, one request per connection::

    -> PLATE <normalized>\\n
    <- OWNER <name>\\n   |   NOTFOUND\\n
"""

from __future__ import annotations

import csv
import io
import json
import socket
import socketserver
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import IntegrityError, InputError, LookupTimeoutError, ProtocolError, RegistryParseError
from .plates import is_valid_plate, normalize_plate

FIELDS = ("apartment", "name", "stall_id", "vehicle_type", "plate", "stored_goods")
DEFAULT_TIMEOUT_S = 5.0


@dataclass(frozen=True)
class TenantRecord:
    apartment: str
    name: str
    stall_id: str
    vehicle_type: str = ""
    plate: str = ""
    stored_goods: tuple = ()

    def as_row(self):
        return [self.apartment, self.name, self.stall_id, self.vehicle_type, self.plate,
                ";".join(self.stored_goods)]


@dataclass(frozen=True)
class OwnerRecord:
    plate: str
    owner_name: str
    source: str = "stub"

    def as_dict(self):
        return {"plate": self.plate, "owner_name": self.owner_name, "source": self.source}


class Registry:
    """Immutable collection of tenant records indexed by plate and stall."""

    def __init__(self, records=()):
        self._records = tuple(records)
        self._by_stall = {}
        self._by_plate = {}
        for r in self._records:
            if r.stall_id in self._by_stall:
                raise IntegrityError("stall_id", r.stall_id)
            self._by_stall[r.stall_id] = r
            if r.plate:
                if r.plate in self._by_plate:
                    raise IntegrityError("plate", r.plate)
                self._by_plate[r.plate] = r

    @property
    def records(self):
        return self._records

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def find_by_plate(self, plate):
        return self._by_plate.get(plate)

    def find_by_stall(self, stall_id):
        return self._by_stall.get(stall_id)


def find_by_plate(registry, plate):
    return registry.find_by_plate(plate)


def find_by_stall(registry, stall_id):
    return registry.find_by_stall(stall_id)


def parse_registry(text, source="<registry>"):
    reader = csv.reader(io.StringIO(text))
    records = []
    header_seen = False
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if not header_seen:
            if tuple(c.strip() for c in row) != FIELDS:
                raise RegistryParseError(lineno, f"{source}: expected header {','.join(FIELDS)}")
            header_seen = True
            continue
        if len(row) != len(FIELDS):
            raise RegistryParseError(lineno, f"{source}: expected {len(FIELDS)} fields, got {len(row)}")
        apartment, name, stall_id, vehicle_type, plate, goods = (c.strip() for c in row)
        if not stall_id:
            raise RegistryParseError(lineno, f"{source}: empty stall_id")
        plate = normalize_plate(plate)
        if plate and not is_valid_plate(plate):
            raise RegistryParseError(lineno, f"{source}: invalid plate {plate!r}")
        items = tuple(g.strip() for g in goods.split(";") if g.strip())
        records.append(TenantRecord(apartment, name, stall_id, vehicle_type, plate, items))
    if not header_seen:
        raise RegistryParseError(1, f"{source}: missing header")
    return Registry(records)


def load_registry(path) -> Registry:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise RegistryParseError(1, f"{path}: not UTF-8 ({exc.reason})") from exc
    return parse_registry(text, source=str(path))


def dump_registry(registry) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for r in registry:
        writer.writerow(r.as_row())
    return buf.getvalue()


def save_registry(registry, path):
    Path(path).write_text(dump_registry(registry), encoding="utf-8")


# -- owner lookup ---------------------------------------------------------------

def load_owner_fixture(path) -> dict:
    """Fixture file: JSON object mapping plate -> owner name."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
        raise InputError(f"{path}: expected a JSON object of plate -> owner name")
    return {normalize_plate(k): v for k, v in data.items()}


def handle_request(line, owners):
    """Answer one protocol request line against an in-memory owner table."""
    parts = line.strip().split(" ", 1)
    if len(parts) != 2 or parts[0] != "PLATE":
        return "ERROR bad request\n"
    name = owners.get(parts[1])
    return f"OWNER {name}\n" if name is not None else "NOTFOUND\n"


def parse_response(line, plate, source):
    if line == "NOTFOUND\n":
        return None
    if line.startswith("OWNER ") and line.endswith("\n") and len(line) > len("OWNER \n"):
        return OwnerRecord(plate, line[len("OWNER "):-1], source)
    raise ProtocolError(f"malformed lookup response {line!r}")


@dataclass(frozen=True)
class LookupConfig:
    """Where `query_owner` sends requests.

    Exactly one of `fixture` (path to a JSON plate -> owner map, answered
    in-process) or `address` ((host, port) of a line-protocol server).
    """

    fixture: str = None
    address: tuple = None
    timeout_s: float = DEFAULT_TIMEOUT_S
    # label copied into OwnerRecord.source; "remote" is reserved for a real registry service
    source: str = "stub"

    def __post_init__(self):
        if (self.fixture is None) == (self.address is None):
            raise InputError("lookup config needs exactly one of fixture or address")


class OwnerLookupClient:
    """Caches answers per plate for the lifetime of the client; thread-safe."""

    def __init__(self, config: LookupConfig):
        self.config = config
        self._owners = load_owner_fixture(config.fixture) if config.fixture is not None else None
        self._cache = {}
        self._lock = threading.Lock()
        self.requests_sent = 0

    def query(self, plate):
        if not is_valid_plate(plate):
            raise InputError(f"invalid plate {plate!r}")
        with self._lock:
            if plate in self._cache:
                return self._cache[plate]
            result = self._request(plate)
            self._cache[plate] = result
            return result

    def _request(self, plate):
        self.requests_sent += 1
        request = f"PLATE {plate}\n"
        if self._owners is not None:
            return parse_response(handle_request(request, self._owners), plate, self.config.source)
        return parse_response(self._roundtrip(request), plate, self.config.source)

    def _roundtrip(self, request):
        deadline = time.monotonic() + self.config.timeout_s
        try:
            with socket.create_connection(self.config.address, timeout=max(self.config.timeout_s, 1e-6)) as sock:
                sock.sendall(request.encode("utf-8"))
                buf = b""
                while not buf.endswith(b"\n"):
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        raise socket.timeout()
                    sock.settimeout(remaining)
                    chunk = sock.recv(4096)
                    if not chunk:
                        break
                    buf += chunk
        except socket.timeout as exc:
            raise LookupTimeoutError(f"owner lookup exceeded {self.config.timeout_s:g} s") from exc
        except OSError as exc:
            raise ProtocolError(f"lookup backend unreachable: {exc}") from exc
        try:
            return buf.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError("lookup response is not UTF-8") from exc


def query_owner(plate, config_or_client):
    """Look up the registered owner of `plate`; ``None`` means the backend does not know it."""
    client = config_or_client
    if isinstance(config_or_client, LookupConfig):
        client = OwnerLookupClient(config_or_client)
    return client.query(plate)


class StubLookupServer(socketserver.ThreadingTCPServer):
    """Local TCP server speaking the lookup protocol from an owner table.

    `delay_s` holds every response back, for exercising client timeouts.
    """

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, owners, host="127.0.0.1", port=0, delay_s=0.0):
        self.owners = dict(owners)
        self.delay_s = delay_s
        super().__init__((host, port), _StubHandler)
        self._thread = None

    @property
    def address(self):
        return self.server_address[:2]

    def __enter__(self):
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.shutdown()
        self.server_close()


class _StubHandler(socketserver.StreamRequestHandler):
    def handle(self):
        line = self.rfile.readline().decode("utf-8", errors="replace")
        if self.server.delay_s:
            time.sleep(self.server.delay_s)
        try:
            self.wfile.write(handle_request(line, self.server.owners).encode("utf-8"))
        except OSError:
            pass
