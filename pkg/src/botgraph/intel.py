"""File-backed threat-intel lookups.

Stands in for remote reputation, sinkhole and sandbox services behind the
``IntelSource`` protocol. Intel file lines::

    rep 198.51.100.7 malicious        # verdict: malicious|suspicious|clean
    sink 203.0.113.9                  # sinkholed IP or domain
    sink c2.example.net
    sample 5d41402abc4b2a76 evil.example 203.0.113.9
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol

VERDICTS = ("malicious", "suspicious", "clean")
UNKNOWN = "unknown"


class IntelError(ValueError):
    pass


class IpIntel(NamedTuple):
    verdict: str
    sinkholed: bool


class IntelSource(Protocol):
    def lookup_ip(self, ip: str) -> IpIntel: ...

    def lookup_domain(self, domain: str) -> bool: ...

    def lookup_artifact(self, artifact_hash: str) -> tuple[str, ...]: ...


def _canonical_ip(text: str) -> str | None:
    try:
        return str(ipaddress.ip_address(text))
    except ValueError:
        return None


def _canonical_key(text: str) -> str:
    ip = _canonical_ip(text)
    return ip if ip is not None else text.lower().rstrip(".")


@dataclass(frozen=True)
class IntelStore:
    ip_verdicts: dict[str, str] = field(default_factory=dict)
    sinkholed: frozenset[str] = frozenset()
    sample_indicators: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def lookup_ip(self, ip: str) -> IpIntel:
        key = _canonical_key(ip)
        return IpIntel(self.ip_verdicts.get(key, UNKNOWN), key in self.sinkholed)

    def lookup_domain(self, domain: str) -> bool:
        return _canonical_key(domain) in self.sinkholed

    def lookup_artifact(self, artifact_hash: str) -> tuple[str, ...]:
        return self.sample_indicators.get(artifact_hash.lower(), ())

    def samples(self) -> list[str]:
        return sorted(self.sample_indicators)


def parse_intel(lines) -> IntelStore:
    verdicts: dict[str, str] = {}
    sinkholed: set[str] = set()
    samples: dict[str, list[str]] = {}
    for line_no, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        kind, *args = text.split()
        if kind == "rep":
            if len(args) != 2:
                raise IntelError(f"line {line_no}: rep needs IP and verdict")
            ip = _canonical_ip(args[0])
            verdict = args[1].lower()
            if ip is None:
                raise IntelError(f"line {line_no}: invalid IP {args[0]!r}")
            if verdict not in VERDICTS:
                raise IntelError(f"line {line_no}: unknown verdict {args[1]!r}")
            if verdicts.get(ip, verdict) != verdict:
                raise IntelError(f"line {line_no}: conflicting verdict for {ip}")
            verdicts[ip] = verdict
        elif kind == "sink":
            if len(args) != 1:
                raise IntelError(f"line {line_no}: sink needs one IP or domain")
            sinkholed.add(_canonical_key(args[0]))
        elif kind == "sample":
            if len(args) < 2:
                raise IntelError(f"line {line_no}: sample needs a hash and targets")
            targets = samples.setdefault(args[0].lower(), [])
            for target in map(_canonical_key, args[1:]):
                if target not in targets:
                    targets.append(target)
        else:
            raise IntelError(f"line {line_no}: unknown record kind {kind!r}")
    return IntelStore(
        verdicts,
        frozenset(sinkholed),
        {h: tuple(t) for h, t in samples.items()},
    )


def load_intel_store(path) -> IntelStore:
    with open(path, encoding="utf-8") as fh:
        return parse_intel(fh)
