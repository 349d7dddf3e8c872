"""Domain, URI and meta feature families and the clustering vector.

The vector layout is fixed (``FEATURE_NAMES``, 69 entries): the 11 domain
features, then 45 URI features, then 13 meta features.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional, Sequence

import numpy as np

from .records import TrafficRecord

SCHEMA_VERSION = 1

VOWELS = frozenset("aeiou")
CONSONANTS = frozenset("abcdefghijklmnopqrstuvwxyz") - VOWELS
DIGITS = frozenset("0123456789")

# Known URI extensions; "dll" appears twice in the source table and is kept once.
URI_EXTENSIONS = (
    "exe", "bat", "cmd", "msi", "com", "drv", "js", "css", "dat", "ppt",
    "doc", "docx", "txt", "rtf", "php", "cgi", "asp", "aspx", "html", "xhtml",
    "jsf", "dll", "png", "jpg", "bmp", "bin", "zip", "rar", "swf", "scr",
    "wpad", "pac", "ini",
)
REPLY_CODES = (200, 301, 400, 404, 413)
HTTP_VERSIONS = ("HTTP/1.0", "HTTP/1.1")


class FeatureError(ValueError):
    pass


@lru_cache(maxsize=1)
def default_suffixes() -> frozenset[str]:
    text = resources.files("botgraph").joinpath("data/suffixes.txt").read_text("utf-8")
    return load_suffixes(text.splitlines())


def load_suffixes(lines: Iterable[str]) -> frozenset[str]:
    out = set()
    for line in lines:
        line = line.strip().lower().strip(".")
        if line and not line.startswith("#"):
            out.add(line)
    return frozenset(out)


def effective_name(domain: str, suffixes: Optional[frozenset[str]] = None) -> str:
    """Lowercase, drop the public suffix and the dots between remaining labels."""
    if suffixes is None:
        suffixes = default_suffixes()
    name = domain.lower()
    if name.endswith("."):
        name = name[:-1]
    labels = name.split(".")
    # longest suffix first; a suffix may cover the whole name
    for cut in range(len(labels)):
        if ".".join(labels[cut:]) in suffixes:
            labels = labels[:cut]
            break
    return "".join(labels)


def char_classes(s: str) -> tuple[int, int, int, int]:
    """Counts of (consonants, vowels, digits, others) in ``s``."""
    consonants = vowels = digits = 0
    for ch in s:
        if ch in VOWELS:
            vowels += 1
        elif ch in CONSONANTS:
            consonants += 1
        elif ch in DIGITS:
            digits += 1
    return consonants, vowels, digits, len(s) - consonants - vowels - digits


def ngram_repeats(s: str, n: int) -> int:
    """Total overlapping n-gram occurrences minus distinct n-grams."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = len(s) - n + 1
    if total <= 0:
        return 0
    return total - len({s[i:i + n] for i in range(total)})


@dataclass(frozen=True)
class DomainFeatures:
    consonant_ratio: float = 0.0
    consonant_vowel_ratio: float = 0.0
    domain_length: float = 0.0
    others_ratio: float = 0.0
    vocal_ratio: float = 0.0
    digit_ratio: float = 0.0
    num_repeats_by_unigram: int = 0
    num_repeats_by_bigram: int = 0
    num_repeats_by_trigram: int = 0
    num_repeats_by_tetragram: int = 0
    low_frequence_occurrence: int = 0

    def values(self) -> tuple[float, ...]:
        return tuple(float(v) for v in astuple(self))


def extract_domain_features(
    domain: str, suffixes: Optional[frozenset[str]] = None
) -> DomainFeatures:
    if not domain or len(domain) > 255:
        raise FeatureError("domain must be 1..255 characters")
    s = effective_name(domain, suffixes)
    if not s:
        raise FeatureError("empty effective name")
    c, v, d, o = char_classes(s)
    n = len(s)
    return DomainFeatures(
        consonant_ratio=c / n,
        consonant_vowel_ratio=c / max(v, 1),
        domain_length=n / 255,
        others_ratio=o / n,
        vocal_ratio=v / n,
        digit_ratio=d / n,
        num_repeats_by_unigram=ngram_repeats(s, 1),
        num_repeats_by_bigram=ngram_repeats(s, 2),
        num_repeats_by_trigram=ngram_repeats(s, 3),
        num_repeats_by_tetragram=ngram_repeats(s, 4),
        low_frequence_occurrence=int(s[0] in DIGITS and s[-1] in DIGITS),
    )


def _flatten(obj) -> tuple[float, ...]:
    out: list[float] = []
    for f in fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, tuple):
            out.extend(float(x) for x in value)
        else:
            out.append(float(value))
    return tuple(out)


@dataclass(frozen=True)
class UriFeatures:
    query_length: int = 0
    query_argument_size: int = 0
    uri_path_length: int = 0
    uri_path_level_length: int = 0
    uri_path_plus_length: int = 0
    uri_existence: int = 0
    extension_flags: tuple[int, ...] = (0,) * len(URI_EXTENSIONS)
    unknown_extension: int = 0
    unavailable_extension: int = 1
    consonant_ratio: float = 0.0
    vocal_ratio: float = 0.0
    consonant_vowel_ratio: float = 0.0
    extension_length: int = 0

    def values(self) -> tuple[float, ...]:
        return _flatten(self)


def split_uri(uri: str) -> tuple[str, Optional[str], Optional[str]]:
    """Split into (path, query, fragment); separators absent -> None."""
    rest, hash_sep, fragment = uri.partition("#")
    path, q_sep, query = rest.partition("?")
    return path, (query if q_sep else None), (fragment if hash_sep else None)


def extract_uri_features(uri: Optional[str]) -> UriFeatures:
    if not uri:
        return UriFeatures()
    path, query, _ = split_uri(uri)
    query = query or ""
    segments = [seg for seg in path.split("/") if seg]
    last = path.rsplit("/", 1)[-1]
    stem, dot, ext = last.rpartition(".")
    if not dot:
        stem, ext = last, ""
    ext_lower = ext.lower()

    flags = [0] * len(URI_EXTENSIONS)
    unknown = unavailable = 0
    if not ext:
        unavailable = 1
    elif ext_lower in URI_EXTENSIONS:
        flags[URI_EXTENSIONS.index(ext_lower)] = 1
    else:
        unknown = 1

    base = stem.lower()
    c, v, _, _ = char_classes(base)
    return UriFeatures(
        query_length=len(query),
        query_argument_size=sum(1 for arg in query.split("&") if arg),
        uri_path_length=len(path),
        uri_path_level_length=len(segments),
        uri_path_plus_length=len(uri),
        uri_existence=1,
        extension_flags=tuple(flags),
        unknown_extension=unknown,
        unavailable_extension=unavailable,
        consonant_ratio=c / len(base) if base else 0.0,
        vocal_ratio=v / len(base) if base else 0.0,
        consonant_vowel_ratio=c / max(v, 1),
        extension_length=len(ext),
    )


@dataclass(frozen=True)
class MetaFeatures:
    packet_size: int = 0
    packet_size_inexistence: int = 1
    reply_code_flags: tuple[int, ...] = (0,) * len(REPLY_CODES)
    unknown_reply_code: int = 0
    inexistent_http_rcode: int = 1
    version_flags: tuple[int, ...] = (0,) * len(HTTP_VERSIONS)
    unknown_http_version: int = 0
    inexistent_http_version: int = 1

    def values(self) -> tuple[float, ...]:
        return _flatten(self)


def extract_meta_features(r: TrafficRecord) -> MetaFeatures:
    codes = [0] * len(REPLY_CODES)
    unknown_code = missing_code = 0
    if r.http_status is None:
        missing_code = 1
    elif r.http_status in REPLY_CODES:
        codes[REPLY_CODES.index(r.http_status)] = 1
    else:
        unknown_code = 1

    versions = [0] * len(HTTP_VERSIONS)
    unknown_version = missing_version = 0
    version = r.http_version.strip().upper() if r.http_version is not None else ""
    if not version:
        missing_version = 1
    elif version in HTTP_VERSIONS:
        versions[HTTP_VERSIONS.index(version)] = 1
    else:
        unknown_version = 1

    return MetaFeatures(
        packet_size=r.packet_size if r.packet_size is not None else 0,
        packet_size_inexistence=int(r.packet_size is None),
        reply_code_flags=tuple(codes),
        unknown_reply_code=unknown_code,
        inexistent_http_rcode=missing_code,
        version_flags=tuple(versions),
        unknown_http_version=unknown_version,
        inexistent_http_version=missing_version,
    )


DOMAIN_FEATURE_NAMES = (
    "consonantRatio", "consonantVowelRatio", "domainLength", "othersRatio",
    "vocalRatio", "digitRatio", "numRepeatsByUniGram", "numRepeatsByBiGram",
    "numRepeatsByTriGram", "numRepeatsByTetraGram", "lowFrequenceOccurrence",
)
URI_FEATURE_NAMES = (
    ("queryLength", "queryArgumentSize", "uriPathLength", "uriPathLevelLength",
     "uriPathPlusLength", "uriExistence")
    + URI_EXTENSIONS
    + ("unknownExtension", "unavailableExtension", "uri.consonantRatio",
       "uri.vocalRatio", "uri.consonantVowelRatio", "extensionLength")
)
META_FEATURE_NAMES = (
    ("packetSize", "packetSizeInexistence")
    + tuple(str(code) for code in REPLY_CODES)
    + ("unknownReplyCode", "inexistentHttpRCode")
    + HTTP_VERSIONS
    + ("unknownHttpVersion", "inexistentHttpVersion")
)
FEATURE_NAMES = DOMAIN_FEATURE_NAMES + URI_FEATURE_NAMES + META_FEATURE_NAMES
DOMAIN_DIM = len(DOMAIN_FEATURE_NAMES)
VECTOR_DIM = len(FEATURE_NAMES)


def assemble_clustering_vector(
    d: DomainFeatures, u: UriFeatures, m: MetaFeatures
) -> np.ndarray:
    vec = np.array(d.values() + u.values() + m.values(), dtype=float)
    assert vec.shape == (VECTOR_DIM,)
    return vec


def record_features(
    r: TrafficRecord, suffixes: Optional[frozenset[str]] = None
) -> tuple[Optional[DomainFeatures], np.ndarray]:
    """Domain features (None without a usable domain) and the full vector.

    Source and destination addresses never enter the vector.
    """
    domain_features = None
    if r.domain:
        try:
            domain_features = extract_domain_features(r.domain, suffixes)
        except FeatureError:
            domain_features = None
    vec = assemble_clustering_vector(
        domain_features or DomainFeatures(),
        extract_uri_features(r.uri),
        extract_meta_features(r),
    )
    return domain_features, vec


@dataclass(frozen=True)
class FeatureScaler:
    mean: tuple[float, ...]
    std: tuple[float, ...]

    def __post_init__(self):
        if len(self.mean) != len(self.std):
            raise FeatureError("mean/std length mismatch")
        if any(s <= 0 for s in self.std):
            raise FeatureError("std entries must be positive")

    @property
    def dim(self) -> int:
        return len(self.mean)

    def apply(self, v: Sequence[float] | np.ndarray) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        if arr.shape[-1] != self.dim:
            raise FeatureError(f"dimension mismatch: {arr.shape[-1]} != {self.dim}")
        return (arr - np.asarray(self.mean)) / np.asarray(self.std)


def fit_scaler(vectors: Sequence[Sequence[float]] | np.ndarray) -> FeatureScaler:
    """Z-score scaler with population std; zero std is replaced by 1."""
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise FeatureError("fit_scaler needs at least one vector")
    mean = arr.mean(axis=0)
    std = arr.std(axis=0)
    std[std == 0] = 1.0
    return FeatureScaler(tuple(float(x) for x in mean), tuple(float(x) for x in std))


def apply_scaler(s: FeatureScaler, v) -> np.ndarray:
    return s.apply(v)
