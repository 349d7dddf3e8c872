"""Training corpora for the DGA classifier.

Two seeded generators stand in for real labelled feeds: benign names are
composed from a bundled English wordlist, DGA names are random strings with
no dictionary. User-supplied lists load through ``load_domain_list``.
"""

from __future__ import annotations

import random
import string
from functools import lru_cache
from importlib import resources

BENIGN_TLDS = ("com",) * 6 + ("net", "net", "org", "org", "io", "co.uk", "de", "info")
DGA_TLDS = ("com", "net", "org", "info", "biz", "ru", "cc", "tk", "su", "ws")


@lru_cache(maxsize=1)
def bundled_words() -> tuple[str, ...]:
    text = resources.files("botgraph").joinpath("data/words.txt").read_text("utf-8")
    return tuple(sorted(set(text.split())))


def generate_benign_domains(count: int, seed: int = 0, words=None) -> list[str]:
    """Distinct word-composed names such as ``bluecoffee.com`` or ``city-news24.net``."""
    rng = random.Random(seed)
    words = tuple(words) if words is not None else bundled_words()
    seen: set[str] = set()
    out: list[str] = []
    while len(out) < count:
        parts = rng.sample(words, rng.choice((1, 2, 2, 2, 3)))
        joiner = "-" if rng.random() < 0.1 else ""
        name = joiner.join(parts)
        if rng.random() < 0.1:
            name += str(rng.randint(1, 99))
        domain = f"{name}.{rng.choice(BENIGN_TLDS)}"
        if domain not in seen:
            seen.add(domain)
            out.append(domain)
    return out


def generate_dga_domains(count: int, seed: int = 0) -> list[str]:
    """Distinct random-string names, 8 to 20 characters before the TLD."""
    rng = random.Random(seed)
    letters = string.ascii_lowercase
    alnum = letters + string.digits
    seen: set[str] = set()
    out: list[str] = []
    while len(out) < count:
        alphabet = alnum if rng.random() < 0.2 else letters
        label = "".join(rng.choice(alphabet) for _ in range(rng.randint(8, 20)))
        domain = f"{label}.{rng.choice(DGA_TLDS)}"
        if domain not in seen:
            seen.add(domain)
            out.append(domain)
    return out


def load_domain_list(path) -> list[str]:
    """One domain per line; blank lines and ``#`` comments skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                out.append(line.split()[0])
    return out
