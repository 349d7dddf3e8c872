"""Historic DNS observations and fast-flux heuristics.

Observations come from replayable crawl logs, one per line::

    # domain  ts  type  value  ttl
    evil.example 1000 A 203.0.113.7 60
    evil.example 1000 NS ns1.bullet.example 60

Low TTLs alone are not conclusive (CDNs use them too), so a verdict is only
an annotation for the graph, never a botnet call by itself.
"""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

RECORD_TYPES = ("A", "AAAA", "NS")
ADDRESS_TYPES = ("A", "AAAA")


class HistoryError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class DnsObservation:
    # field order doubles as the sort key within a domain
    timestamp: int
    domain: str
    record_type: str
    value: str
    ttl: int

    def __post_init__(self):
        if self.ttl < 0:
            raise HistoryError("negative ttl")
        if not self.value:
            raise HistoryError("empty value")
        if self.record_type not in RECORD_TYPES:
            raise HistoryError(f"unsupported record type {self.record_type!r}")


def normalize_domain(domain: str) -> str:
    return domain.strip().lower().rstrip(".")


def make_observation(domain: str, timestamp: int, record_type: str, value: str, ttl: int) -> DnsObservation:
    rtype = record_type.upper()
    if rtype == "NS":
        value = normalize_domain(value)
    return DnsObservation(int(timestamp), normalize_domain(domain), rtype, value.strip(), int(ttl))


@dataclass(frozen=True)
class ChurnStats:
    window_start: int
    window_end: int
    distinct_values: int
    observation_count: int
    mean_ttl: float
    ns_changes: int


@dataclass(frozen=True)
class FluxThresholds:
    ttl_max: float = 300
    min_distinct: int = 5
    min_ns_changes: int = 2
    window: int = 3600


@dataclass(frozen=True)
class FluxVerdict:
    domain: str
    flagged: bool
    double_flux: bool
    reason: str


class DnsHistory:
    """In-memory per-domain observation index.

    One writer at a time; stats queries are read-only and may run
    concurrently once a write batch has returned.
    """

    def __init__(self, observations: Iterable[DnsObservation] = ()):
        self._by_domain: dict[str, list[DnsObservation]] = defaultdict(list)
        self._seen: set[DnsObservation] = set()
        self.record_observations(observations)

    def __len__(self) -> int:
        return len(self._seen)

    def __contains__(self, domain: str) -> bool:
        return normalize_domain(domain) in self._by_domain

    def domains(self) -> list[str]:
        return sorted(self._by_domain)

    def record_observations(self, obs: Iterable[DnsObservation]) -> "DnsHistory":
        """Insert observations in time order; exact duplicates are ignored."""
        for o in obs:
            if o in self._seen:
                continue
            self._seen.add(o)
            bisect.insort(self._by_domain[o.domain], o)
        return self

    def observations(self, domain: str) -> list[DnsObservation]:
        return list(self._by_domain.get(normalize_domain(domain), ()))

    def last_seen(self, domain: str) -> int:
        obs = self._by_domain.get(normalize_domain(domain))
        if not obs:
            raise HistoryError(f"no history for {domain}")
        return obs[-1].timestamp

    def window(self, domain: str, start: int, end: int) -> list[DnsObservation]:
        obs = self._by_domain.get(normalize_domain(domain))
        if obs is None:
            raise HistoryError(f"no history for {domain}")
        lo = bisect.bisect_left(obs, start, key=lambda o: o.timestamp)
        hi = bisect.bisect_right(obs, end, key=lambda o: o.timestamp)
        return obs[lo:hi]


def count_ns_changes(ns_obs: list[DnsObservation]) -> int:
    """Number of times the NS set differs between consecutive crawl timestamps."""
    snapshots: dict[int, set[str]] = defaultdict(set)
    for o in ns_obs:
        snapshots[o.timestamp].add(o.value)
    ordered = [snapshots[ts] for ts in sorted(snapshots)]
    return sum(1 for prev, cur in zip(ordered, ordered[1:]) if prev != cur)


def domain_churn_stats(store: DnsHistory, domain: str, start: int, end: int) -> ChurnStats:
    """Aggregate A/AAAA churn, mean TTL and NS changes over ``[start, end]``."""
    if start > end:
        raise HistoryError("window start after end")
    in_window = store.window(domain, start, end)
    addresses = [o for o in in_window if o.record_type in ADDRESS_TYPES]
    ns = [o for o in in_window if o.record_type == "NS"]
    mean_ttl = sum(o.ttl for o in addresses) / len(addresses) if addresses else 0.0
    return ChurnStats(
        window_start=start,
        window_end=end,
        distinct_values=len({o.value for o in addresses}),
        observation_count=len(addresses),
        mean_ttl=mean_ttl,
        ns_changes=count_ns_changes(ns),
    )


def recent_churn_stats(store: DnsHistory, domain: str, window: int) -> ChurnStats:
    """Stats over the ``window`` seconds ending at the domain's last observation."""
    end = store.last_seen(domain)
    return domain_churn_stats(store, domain, end - window, end)


def flux_verdict(stats: ChurnStats, thresholds: FluxThresholds = FluxThresholds(),
                 domain: str = "") -> FluxVerdict:
    low_ttl = stats.mean_ttl <= thresholds.ttl_max
    churning = stats.distinct_values >= thresholds.min_distinct
    flagged = low_ttl and churning
    double = flagged and stats.ns_changes >= thresholds.min_ns_changes
    if double:
        reason = (f"{stats.distinct_values} addresses, mean TTL {stats.mean_ttl:g}s, "
                  f"{stats.ns_changes} NS changes")
    elif flagged:
        reason = f"{stats.distinct_values} addresses, mean TTL {stats.mean_ttl:g}s"
    elif not churning:
        reason = f"only {stats.distinct_values} distinct addresses"
    else:
        reason = f"mean TTL {stats.mean_ttl:g}s above {thresholds.ttl_max:g}s"
    return FluxVerdict(domain, flagged, double, reason)


def parse_observation_line(line: str, line_no: int = 0) -> Optional[DnsObservation]:
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    parts = text.split()
    if len(parts) != 5:
        raise HistoryError(f"line {line_no}: expected 5 fields, got {len(parts)}")
    domain, ts, rtype, value, ttl = parts
    try:
        return make_observation(domain, int(ts), rtype, value, int(ttl))
    except ValueError as exc:
        raise HistoryError(f"line {line_no}: {exc}") from None


def iter_observations(lines: Iterable[str]) -> Iterator[DnsObservation]:
    for line_no, line in enumerate(lines, start=1):
        obs = parse_observation_line(line, line_no)
        if obs is not None:
            yield obs


def load_history(path) -> DnsHistory:
    with open(path, encoding="utf-8") as fh:
        return DnsHistory(iter_observations(fh))


def save_history(store: DnsHistory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# domain ts type value ttl\n")
        for domain in store.domains():
            for o in store.observations(domain):
                fh.write(f"{o.domain} {o.timestamp} {o.record_type} {o.value} {o.ttl}\n")
