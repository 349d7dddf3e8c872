import json
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from botgraph.records import (
    RecordError, TrafficRecord, iter_records, parse_record_line, read_records,
    record_to_line, validate_record,
)


def test_parse_full_line():
    r = parse_record_line('{"ts":100,"src":"10.0.0.1","domain":"abc123.com","nx":false,"dst":"1.2.3.4"}', 1)
    assert r == TrafficRecord(timestamp=100, src_ip="10.0.0.1", dst_ip="1.2.3.4",
                              domain="abc123.com", nxdomain=False)


@pytest.mark.parametrize("line", ["", "   ", "# comment", "  # indented comment"])
def test_blank_and_comment_lines_skip(line):
    assert parse_record_line(line, 3) is None


def test_missing_destination_and_domain():
    with pytest.raises(RecordError, match="missing dstIp/domain") as info:
        parse_record_line('{"ts":100,"src":"10.0.0.1"}', 7)
    assert info.value.line_no == 7


@pytest.mark.parametrize("line, reason", [
    ("{not json", "malformed JSON"),
    ("[1, 2]", "record is not an object"),
    ('{"src":"10.0.0.1","domain":"a.com"}', "missing ts"),
    ('{"ts":null,"src":"10.0.0.1","domain":"a.com"}', "missing ts"),
    ('{"ts":1,"domain":"a.com"}', "missing src"),
    ('{"ts":1.5,"src":"10.0.0.1","domain":"a.com"}', "timestamp is not an integer"),
    ('{"ts":1,"src":"nope","domain":"a.com"}', "invalid srcIp"),
    ('{"ts":1,"src":"10.0.0.1","dst":"999.1.1.1"}', "invalid dstIp"),
    ('{"ts":1,"src":"10.0.0.1","domain":"a.com","nx":"yes"}', "nx is not a boolean"),
    ('{"ts":1,"src":"10.0.0.1","domain":"a.com","size":-4}', "negative packetSize"),
    ('{"ts":1,"src":"10.0.0.1","domain":"..."}', "empty domain"),
])
def test_malformed_lines(line, reason):
    with pytest.raises(RecordError, match=reason):
        parse_record_line(line, 2)


def test_unknown_keys_ignored():
    r = parse_record_line('{"ts":1,"src":"::1","domain":"a.com","geo":"xx"}')
    assert r.domain == "a.com" and r.src_ip == "::1"


def test_validate_nxdomain_with_destination():
    r = TrafficRecord(timestamp=1, src_ip="10.0.0.1", dst_ip="1.2.3.4", nxdomain=True)
    with pytest.raises(RecordError, match="nxdomain has dstIp"):
        validate_record(r)


def test_validate_negative_timestamp():
    with pytest.raises(RecordError, match="negative timestamp"):
        validate_record(TrafficRecord(timestamp=-1, src_ip="10.0.0.1", domain="a.com"))


def test_validate_ok():
    validate_record(TrafficRecord(timestamp=0, src_ip="10.0.0.1", domain="a.com", packet_size=0))


def test_iter_and_read_records(tmp_path):
    lines = ["# header", '{"ts":1,"src":"10.0.0.1","domain":"a.com"}', "", "oops",
             '{"ts":2,"src":"10.0.0.2","dst":"10.0.0.3"}']
    items = list(iter_records(lines))
    assert [type(x).__name__ for x in items] == ["TrafficRecord", "RecordError", "TrafficRecord"]
    assert items[1].line_no == 4
    path = tmp_path / "r.jsonl"
    path.write_text("\n".join(lines) + "\n")
    records, errors = read_records(path)
    assert len(records) == 2 and [e.line_no for e in errors] == [4]


ips = st.one_of(st.ip_addresses(v=4), st.ip_addresses(v=6)).map(str)
labels = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-", min_size=1, max_size=20)
domains = st.lists(labels, min_size=1, max_size=4).map(".".join)


@st.composite
def records(draw):
    nx = draw(st.booleans())
    domain = draw(st.none() | domains)
    dst = None if nx else draw(st.none() | ips)
    if dst is None and domain is None:
        domain = draw(domains)
    return TrafficRecord(
        timestamp=draw(st.integers(0, 2**40)),
        src_ip=draw(ips),
        dst_ip=dst,
        domain=domain,
        uri=draw(st.none() | st.text(max_size=30)),
        http_status=draw(st.none() | st.integers(100, 599)),
        http_version=draw(st.none() | st.sampled_from(["HTTP/1.0", "HTTP/1.1", "HTTP/2"])),
        packet_size=draw(st.none() | st.integers(0, 65535)),
        nxdomain=nx,
    )


@given(records())
def test_round_trip(r):
    assert parse_record_line(record_to_line(r)) == r


@given(st.text(max_size=80))
def test_parsing_is_total_and_valid(line):
    try:
        r = parse_record_line(line, 1)
    except RecordError as exc:
        assert exc.line_no == 1
        return
    if r is not None:
        validate_record(r)


@given(records(), st.dictionaries(st.sampled_from(["ts", "src", "dst", "nx", "size"]),
                                  st.one_of(st.none(), st.integers(-5, 5), st.booleans(), st.text(max_size=5))))
def test_mutated_records_parse_to_valid_or_error(r, patch):
    obj = json.loads(record_to_line(r))
    obj.update(patch)
    try:
        parsed = parse_record_line(json.dumps(obj))
    except RecordError:
        return
    validate_record(parsed)
    assert replace(parsed) == parsed
