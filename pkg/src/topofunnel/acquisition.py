"""Planning and fetching the archive files behind one capture instant.

This is the only module that touches the network. Planning is pure; fetching
goes through a small cache keyed by source, collector, nominal time and URL.
"""

from __future__ import annotations

import bz2
import csv
import logging
import os
import tempfile
import time
import urllib.error
import urllib.request
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping

log = logging.getLogger(__name__)

RIB_SOURCES = frozenset({"ris", "routeviews", "pch"})
STREAM_SOURCES = frozenset({"atlas"})  # every dump in the window is used, not just the nearest
SOURCE_KINDS = frozenset({"ris", "routeviews", "pch", "atlas", "delegated", "roa", "geolite", "vdem",
                          "as2org", "stateowned"})
HOUR = 3600


class ConfigurationError(ValueError):
    pass


class FetchError(RuntimeError):
    def __init__(self, message: str, collector: str):
        super().__init__(message)
        self.collector = collector


class DecompressionError(ValueError):
    pass


class TruncationError(ValueError):
    pass


def parse_utc(text: str) -> datetime:
    value = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def format_utc(ts: int) -> str:
    return datetime.fromtimestamp(ts, timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class CaptureSpec:
    target_time: datetime
    sources: frozenset[str] = frozenset({"ris", "routeviews", "pch", "atlas", "delegated"})
    rib_window: int = 4 * HOUR  # +/- seconds around target for snapshot dumps
    trace_window: int = 24 * HOUR  # total span of traceroute dumps, centred on target
    registry_window: int = 24 * HOUR  # +/- seconds for daily registry files

    def __post_init__(self) -> None:
        if self.target_time.tzinfo is None or self.target_time.utcoffset().total_seconds() != 0:
            raise ValueError("target_time must be UTC")
        if self.target_time.microsecond:
            raise ValueError("target_time must be a whole second")
        if min(self.rib_window, self.trace_window, self.registry_window) <= 0:
            raise ValueError("windows must be positive")
        unknown = set(self.sources) - SOURCE_KINDS
        if unknown:
            raise ValueError(f"unknown source kinds: {sorted(unknown)}")

    @property
    def target(self) -> int:
        return int(self.target_time.timestamp())

    def window_for(self, source: str) -> tuple[int, int]:
        """Inclusive [lo, hi] range of acceptable nominal times for ``source``."""
        t = self.target
        if source in RIB_SOURCES:
            return t - self.rib_window, t + self.rib_window
        if source in STREAM_SOURCES:
            half = self.trace_window // 2
            return t - half, t + self.trace_window - half - 1
        return t - self.registry_window, t + self.registry_window


@dataclass(frozen=True)
class CollectorEntry:
    collector: str
    project: str
    url_pattern: str
    cadence: int
    offset: int = 0
    active_from: int | None = None
    active_until: int | None = None


def load_manifest(path: str | Path | None = None) -> list[CollectorEntry]:
    """Collector catalogue from CSV; the bundled one when ``path`` is None."""
    if path is None:
        text = resources.files("topofunnel.data").joinpath("collectors.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    rows = csv.DictReader(line for line in text.splitlines() if line and not line.startswith("#"))
    out = []
    for row in rows:
        cadence = int(row["cadence_seconds"])
        if cadence <= 0:
            raise ConfigurationError(f"collector {row['collector']}: cadence must be positive")
        out.append(CollectorEntry(
            collector=row["collector"],
            project=row["project"],
            url_pattern=row["url_pattern"],
            cadence=cadence,
            offset=int(row.get("offset_seconds") or 0),
            active_from=int(parse_utc(row["active_from"]).timestamp()) if row.get("active_from") else None,
            active_until=int(parse_utc(row["active_until"]).timestamp()) if row.get("active_until") else None,
        ))
    return out


def compression_of(url: str) -> str:
    if url.endswith(".gz"):
        return "gzip"
    if url.endswith(".bz2"):
        return "bzip2"
    return "none"


_EXTENSIONS = {"gzip": "gz", "bzip2": "bz2", "none": "raw"}


@dataclass(frozen=True)
class FetchItem:
    source: str
    collector: str
    url: str
    compression: str
    nominal: int  # epoch seconds

    def cache_path(self, cache_dir: str | Path) -> Path:
        stamp = datetime.fromtimestamp(self.nominal, timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        return Path(cache_dir) / self.source / self.collector / f"{stamp}.{_EXTENSIONS[self.compression]}"


@dataclass(frozen=True)
class Gap:
    source: str
    collector: str
    reason: str


@dataclass(frozen=True)
class FetchPlan:
    items: tuple[FetchItem, ...]
    gaps: tuple[Gap, ...] = ()


def _dump_times(entry: CollectorEntry, lo: int, hi: int) -> list[int]:
    """Nominal dump times of ``entry`` within [lo, hi] and its activity period."""
    if entry.active_from is not None:
        lo = max(lo, entry.active_from)
    if entry.active_until is not None:
        hi = min(hi, entry.active_until)
    if lo > hi:
        return []
    first = -(-(lo - entry.offset) // entry.cadence) * entry.cadence + entry.offset
    return list(range(first, hi + 1, entry.cadence))


def _url(entry: CollectorEntry, nominal: int) -> str:
    when = datetime.fromtimestamp(nominal, timezone.utc)
    return when.strftime(entry.url_pattern.replace("{collector}", entry.collector))


def plan_capture(spec: CaptureSpec, manifest: Iterable[CollectorEntry]) -> FetchPlan:
    """Pick the dumps of every enabled collector that best match the target time.

    Snapshot sources get the single dump nearest the target (the earlier one
    on a tie); traceroute sources get every dump in their window. Collectors
    with nothing in range are reported as gaps.
    """
    manifest = list(manifest)
    if not manifest:
        raise ConfigurationError("collector manifest is empty")
    target = spec.target
    items: list[FetchItem] = []
    gaps: list[Gap] = []
    for entry in sorted(manifest, key=lambda e: (e.project, e.collector)):
        if entry.project not in spec.sources:
            continue
        lo, hi = spec.window_for(entry.project)
        times = _dump_times(entry, lo, hi)
        if not times:
            gaps.append(Gap(entry.project, entry.collector, f"no dump between {format_utc(lo)} and {format_utc(hi)}"))
            continue
        if entry.project not in STREAM_SOURCES:
            times = [min(times, key=lambda t: (abs(t - target), t))]
        for t in times:
            url = _url(entry, t)
            items.append(FetchItem(entry.project, entry.collector, url, compression_of(url), t))
    urls = [i.url for i in items]
    if len(set(urls)) != len(urls):
        raise ConfigurationError("manifest produces duplicate URLs")
    return FetchPlan(tuple(items), tuple(gaps))


def decompress(data: bytes, compression: str) -> bytes:
    """Decompress a (possibly multi-member) gzip or bzip2 payload.

    Corrupt data raises DecompressionError; data that stops before the end of
    a stream raises TruncationError.
    """
    if compression == "none":
        return data
    if compression not in ("gzip", "bzip2"):
        raise ValueError(f"unknown compression {compression!r}")
    out = []
    rest = data
    while True:
        d = zlib.decompressobj(16 + zlib.MAX_WBITS) if compression == "gzip" else bz2.BZ2Decompressor()
        try:
            out.append(d.decompress(rest))
        except (zlib.error, OSError, ValueError) as exc:
            raise DecompressionError(f"corrupt {compression} stream: {exc}") from None
        if not d.eof:
            raise TruncationError(f"{compression} stream ends before its end-of-stream marker")
        rest = d.unused_data
        if not rest.strip(b"\0"):
            return b"".join(out)


Opener = Callable[[str, float], tuple[bytes, Mapping[str, str]]]


def urllib_opener(url: str, timeout: float) -> tuple[bytes, Mapping[str, str]]:
    req = urllib.request.Request(url, headers={"User-Agent": "topofunnel"})
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        return resp.read(), dict(resp.headers.items())


@dataclass
class FetchResult:
    item: FetchItem
    path: Path
    data: bytes = field(repr=False)
    downloaded: bool


def _cached(item: FetchItem, path: Path) -> bytes | None:
    sidecar = path.with_name(path.name + ".url")
    if not path.exists() or not sidecar.exists():
        return None
    if sidecar.read_text(encoding="utf-8").strip() != item.url:
        return None
    return path.read_bytes()


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def fetch_and_decompress(
    item: FetchItem,
    cache_dir: str | Path,
    *,
    opener: Opener = urllib_opener,
    retries: int = 3,
    backoff: float = 1.0,
    timeout: float = 60.0,
    sleep: Callable[[float], None] = time.sleep,
) -> FetchResult:
    """Decompressed contents of ``item``, from cache when possible.

    The raw download is checked against Content-Length and fully decompressed
    before it is committed to the cache, so a partial or corrupt file never
    lands there.
    """
    path = item.cache_path(cache_dir)
    raw = _cached(item, path)
    if raw is not None:
        return FetchResult(item, path, decompress(raw, item.compression), downloaded=False)

    last: Exception | None = None
    for attempt in range(retries + 1):
        try:
            raw, headers = opener(item.url, timeout)
            break
        except urllib.error.HTTPError as exc:
            last = exc
            if 400 <= exc.code < 500 and exc.code != 429:
                break
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            last = exc
        if attempt < retries:
            sleep(backoff * 2 ** attempt)
    else:
        raw = None
    if raw is None:
        raise FetchError(f"fetch failed for collector {item.collector} ({item.url}): {last}", item.collector)

    expected = {k.lower(): v for k, v in headers.items()}.get("content-length")
    if expected is not None and int(expected) != len(raw):
        raise TruncationError(f"{item.url}: got {len(raw)} bytes, server announced {expected}")
    data = decompress(raw, item.compression)
    _atomic_write(path, raw)
    _atomic_write(path.with_name(path.name + ".url"), (item.url + "\n").encode())
    log.info("fetched %s (%d bytes)", item.url, len(raw))
    return FetchResult(item, path, data, downloaded=True)


def fetch_all(
    plan: FetchPlan, cache_dir: str | Path, *, parallelism: int = 4, **kwargs
) -> list[FetchResult | Exception]:
    """Fetch every plan item with bounded concurrency; results follow plan order."""

    def one(item: FetchItem) -> FetchResult | Exception:
        try:
            return fetch_and_decompress(item, cache_dir, **kwargs)
        except (FetchError, DecompressionError, TruncationError) as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return list(pool.map(one, plan.items))
