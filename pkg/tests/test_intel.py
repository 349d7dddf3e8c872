import pytest
from hypothesis import given, strategies as st

from botgraph.intel import IntelError, IntelSource, IntelStore, IpIntel, load_intel_store, parse_intel


def test_empty_file(tmp_path):
    path = tmp_path / "intel.txt"
    path.write_text("")
    store = load_intel_store(path)
    assert store.samples() == [] and store.lookup_ip("1.2.3.4") == IpIntel("unknown", False)


def test_sinkhole_entry():
    store = parse_intel(["sink 1.2.3.4", "sink C2.Example.NET."])
    assert store.lookup_ip("1.2.3.4").sinkholed
    assert store.lookup_domain("c2.example.net")
    assert not store.lookup_domain("example.net")


@pytest.mark.parametrize("line", ["bogus 1.2.3.4", "rep 1.2.3.4", "rep 1.2.3.4 evil",
                                  "rep nope malicious", "sink", "sample abc"])
def test_malformed_line_names_line(line):
    with pytest.raises(IntelError, match="line 2"):
        parse_intel(["# ok", line])


def test_reputation_lookup():
    store = parse_intel(["rep 203.0.113.9 malicious", "rep 2001:DB8::1 suspicious  # note"])
    assert store.lookup_ip("203.0.113.9") == IpIntel("malicious", False)
    assert store.lookup_ip("2001:db8:0::1").verdict == "suspicious"
    assert store.lookup_ip("8.8.8.8") == IpIntel("unknown", False)


def test_conflicting_verdicts():
    parse_intel(["rep 1.1.1.1 clean", "rep 1.1.1.1 clean"])
    with pytest.raises(IntelError, match="conflicting"):
        parse_intel(["rep 1.1.1.1 clean", "rep 1.1.1.1 malicious"])


def test_artifact_lookup():
    store = parse_intel(["sample ABC123 a.example b.example a.example", "sample abc123 B.example 1.2.3.4"])
    assert store.lookup_artifact("abc123") == ("a.example", "b.example", "1.2.3.4")
    assert store.lookup_artifact("ffff") == ()


def test_store_satisfies_protocol():
    source: IntelSource = IntelStore()
    assert source.lookup_artifact("x") == ()


tokens = st.text(alphabet="abcdef0123456789.", min_size=1, max_size=12)
ips = st.ip_addresses(v=4).map(str)


@given(st.lists(st.one_of(
    st.tuples(st.just("sink"), ips),
    st.tuples(st.just("sample"), tokens, tokens, ips),
), max_size=15), st.lists(st.one_of(ips, tokens), max_size=10))
def test_lookups_are_pure_and_never_fabricate(entries, queries):
    lines = [" ".join(e) for e in entries]
    store = parse_intel(lines)
    text = " ".join(lines).lower()
    for q in queries:
        assert store.lookup_ip(q) == store.lookup_ip(q)
        assert store.lookup_artifact(q) == store.lookup_artifact(q)
        for target in store.lookup_artifact(q):
            assert target in text
        if store.lookup_ip(q).sinkholed:
            assert f"sink {q}" in lines
