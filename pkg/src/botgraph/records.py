"""Line-delimited traffic record parsing.

Each non-blank, non-comment line is one JSON object::

    {"ts": 100, "src": "10.0.0.1", "dst": "1.2.3.4", "domain": "abc123.com",
     "uri": "/gate.php?id=7", "status": 200, "version": "HTTP/1.1",
     "size": 512, "nx": false}

Only ``ts`` and ``src`` are mandatory, plus at least one of ``dst`` and
``domain``. Unknown keys are ignored.
"""

from __future__ import annotations

import ipaddress
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union


class RecordError(ValueError):
    """A record line that could not be turned into a valid TrafficRecord."""

    def __init__(self, reason: str, line_no: Optional[int] = None):
        self.reason = reason
        self.line_no = line_no
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(where + reason)


@dataclass(frozen=True)
class TrafficRecord:
    timestamp: int
    src_ip: str
    dst_ip: Optional[str] = None
    domain: Optional[str] = None
    uri: Optional[str] = None
    http_status: Optional[int] = None
    http_version: Optional[str] = None
    packet_size: Optional[int] = None
    nxdomain: bool = False


# wire key -> attribute
_KEYS = {
    "ts": "timestamp",
    "src": "src_ip",
    "dst": "dst_ip",
    "domain": "domain",
    "uri": "uri",
    "status": "http_status",
    "version": "http_version",
    "size": "packet_size",
    "nx": "nxdomain",
}


def _is_ip(text: str) -> bool:
    try:
        ipaddress.ip_address(text)
    except ValueError:
        return False
    return True


def _is_int(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_record(r: TrafficRecord) -> None:
    """Raise RecordError naming the first violated invariant."""
    if not _is_int(r.timestamp):
        raise RecordError("timestamp is not an integer")
    if r.timestamp < 0:
        raise RecordError("negative timestamp")
    if not isinstance(r.src_ip, str) or not _is_ip(r.src_ip):
        raise RecordError(f"invalid srcIp {r.src_ip!r}")
    if r.dst_ip is None and r.domain is None:
        raise RecordError("missing dstIp/domain")
    if r.dst_ip is not None and (not isinstance(r.dst_ip, str) or not _is_ip(r.dst_ip)):
        raise RecordError(f"invalid dstIp {r.dst_ip!r}")
    if r.domain is not None:
        if not isinstance(r.domain, str) or not r.domain.strip("."):
            raise RecordError("empty domain")
        if len(r.domain) > 255:
            raise RecordError("domain longer than 255 characters")
    if not isinstance(r.nxdomain, bool):
        raise RecordError("nx is not a boolean")
    if r.nxdomain and r.dst_ip is not None:
        raise RecordError("nxdomain has dstIp")
    if r.uri is not None and not isinstance(r.uri, str):
        raise RecordError("uri is not text")
    if r.http_status is not None and not _is_int(r.http_status):
        raise RecordError("httpStatus is not an integer")
    if r.http_version is not None and not isinstance(r.http_version, str):
        raise RecordError("httpVersion is not text")
    if r.packet_size is not None:
        if not _is_int(r.packet_size):
            raise RecordError("packetSize is not an integer")
        if r.packet_size < 0:
            raise RecordError("negative packetSize")


def parse_record_line(line: str, line_no: int = 0) -> Optional[TrafficRecord]:
    """Parse one input line.

    Returns None for blank and ``#`` comment lines, a validated record
    otherwise. Raises RecordError (carrying ``line_no``) on anything else.
    """
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordError(f"malformed JSON: {exc.msg}", line_no) from None
    if not isinstance(obj, dict):
        raise RecordError("record is not an object", line_no)
    for key in ("ts", "src"):
        if obj.get(key) is None:
            raise RecordError(f"missing {key}", line_no)
    fields = {attr: obj[key] for key, attr in _KEYS.items() if obj.get(key) is not None}
    record = TrafficRecord(**fields)
    try:
        validate_record(record)
    except RecordError as exc:
        raise RecordError(exc.reason, line_no) from None
    return record


def record_to_line(r: TrafficRecord) -> str:
    obj = {}
    for key, attr in _KEYS.items():
        value = getattr(r, attr)
        if value is not None:
            obj[key] = value
    return json.dumps(obj, sort_keys=True)


ParseResult = Union[TrafficRecord, RecordError]


def iter_records(lines: Iterable[str]) -> Iterator[ParseResult]:
    """Yield a record or a RecordError per non-skipped line, in order."""
    for line_no, line in enumerate(lines, start=1):
        try:
            record = parse_record_line(line, line_no)
        except RecordError as exc:
            yield exc
            continue
        if record is not None:
            yield record


def read_records(path) -> tuple[list[TrafficRecord], list[RecordError]]:
    records: list[TrafficRecord] = []
    errors: list[RecordError] = []
    with open(path, encoding="utf-8") as fh:
        for item in iter_records(fh):
            (errors if isinstance(item, RecordError) else records).append(item)
    return records, errors
