"""Regenerate the bundled end-to-end fixture under src/botgraph/data/fixture/.

Two synthetic campaigns plus benign traffic:

* campaign A: six infected hosts in 10.1.0.0/24 try DGA names (mostly
  NXDOMAIN); the live ones resolve to a sinkholed C&C and post to a gate.
* campaign B: five hosts in 10.2.0.0/24 fetch a config blob from a
  fast-flux DGA domain whose A and NS records rotate; one flux node is
  sinkholed and a sandboxed sample talks to the domain.
* benign: small client groups in 192.168.x.0/24 browsing word-named sites,
  one of them behind a low-TTL CDN (flux-like but not DGA).

Run from the repository root: ``python scripts/make_fixture.py``.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "botgraph" / "data" / "fixture"

rng = random.Random(20240611)
records = []
ts = 1_700_000_000


def tick(step=7):
    global ts
    ts += rng.randint(1, step)
    return ts


def rec(**kw):
    obj = {"ts": tick()}
    obj.update(kw)
    records.append(obj)


def dga_name(length, alphabet="abcdefghijklmnopqrstuvwxyz"):
    return "".join(rng.choice(alphabet) for _ in range(length))


# campaign A
a_hosts = [f"10.1.0.{i}" for i in range(11, 17)]
a_cc = "203.0.113.10"
a_live = [f"{dga_name(14)}.net", f"{dga_name(13)}.net", f"{dga_name(15)}.biz"]
a_dead = [f"{dga_name(rng.randint(12, 16))}.{rng.choice(['net', 'biz', 'info'])}" for _ in range(12)]

# campaign B
b_hosts = [f"10.2.0.{i}" for i in range(21, 26)]
b_flux_ips = [f"198.51.100.{i}" for i in range(20, 30)]
b_domains = [f"{dga_name(11, 'abcdefghijklmnopqrstuvwxyz0123456789')}.ru",
             f"{dga_name(12, 'abcdefghijklmnopqrstuvwxyz0123456789')}.ru"]

# benign groups: (clients, [(domain, ip)])
benign_groups = [
    (["192.168.1.10", "192.168.1.11", "192.168.1.12"],
     [("weatherchannel.com", "93.184.216.10"), ("morningnews.org", "93.184.216.11")]),
    (["192.168.2.20", "192.168.2.21"],
     [("musicstore.net", "93.184.216.20"), ("travelguide.com", "93.184.216.21")]),
    (["192.168.3.30", "192.168.3.31", "192.168.3.32"],
     [("photobank.io", "93.184.216.30")]),
    (["192.168.4.40", "192.168.4.41"],
     [("cloudvideo.com", "93.184.217.1"), ("cloudvideo.com", "93.184.217.2"),
      ("cloudvideo.com", "93.184.217.3")]),
    (["192.168.5.50"],
     [("citylibrary.org", "93.184.216.50"), ("gardenshop.com", "93.184.216.51")]),
]
benign_uris = ["/", "/index.html", "/news/today.html", "/static/app.js", "/img/logo.png",
               "/search?q=weather&lang=en", "/css/site.css"]

for _round in range(12):
    for host in a_hosts:
        for name in rng.sample(a_dead, 3):
            rec(src=host, domain=name, nx=True)
        name = rng.choice(a_live)
        rec(src=host, dst=a_cc, domain=name, uri=f"/gate.php?id={rng.randint(1000, 9999)}&v=2",
            status=200, version="HTTP/1.1", size=rng.randint(280, 320))
    for host in b_hosts:
        rec(src=host, dst=rng.choice(b_flux_ips), domain=rng.choice(b_domains),
            uri=f"/cfg/{rng.randint(1, 9)}/bot.bin", status=rng.choice([200, 200, 404]),
            version="HTTP/1.0", size=rng.randint(1400, 1500))
    for clients, sites in benign_groups:
        for client in clients:
            domain, ip = rng.choice(sites)
            rec(src=client, dst=ip, domain=domain, uri=rng.choice(benign_uris),
                status=rng.choice([200, 200, 200, 301, 404]), version="HTTP/1.1",
                size=rng.randint(600, 9000))

intel = [
    "# file-backed intel for the bundled fixture",
    f"sink {a_cc}",
    f"rep {a_cc} malicious",
    f"sink {b_flux_ips[3]}",
    f"rep {b_flux_ips[0]} suspicious",
    "rep 93.184.216.10 clean",
    "rep 93.184.216.20 clean",
    f"sample 9e107d9d372bb6826bd81d3542a419d6 {b_domains[0]} {b_flux_ips[1]}",
    "sample 0cc175b9c0f1b6a831c399e269772661 unrelated.example 192.0.2.99",
]

history = ["# domain ts type value ttl"]
t0 = ts - 3000
for step in range(12):
    when = t0 + step * 240
    for domain in b_domains:
        history.append(f"{domain} {when} A {b_flux_ips[(step + len(domain)) % 10]} 60")
        history.append(f"{domain} {when} NS ns{step % 4 + 1}.bulletproof-dns.su 60")
    history.append(f"cloudvideo.com {when} A 93.184.217.{step % 6 + 1} 30")
    history.append(f"cloudvideo.com {when} NS ns1.cdnprovider.net 86400")
    history.append(f"weatherchannel.com {when} A 93.184.216.10 86400")

OUT.mkdir(parents=True, exist_ok=True)
with open(OUT / "records.jsonl", "w") as fh:
    fh.write("# bundled fixture: 2 synthetic campaigns + benign traffic (scripts/make_fixture.py)\n")
    for obj in records:
        fh.write(json.dumps(obj, sort_keys=True) + "\n")
(OUT / "intel.txt").write_text("\n".join(intel) + "\n")
(OUT / "history.txt").write_text("\n".join(history) + "\n")
print(f"{len(records)} records -> {OUT}")
