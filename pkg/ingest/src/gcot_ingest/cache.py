"""Download cache keyed by content checksum.

Raw archives land in the cache directory once and are never mutated;
conversion always reads from the cache (or a user-supplied archive path).
"""

from __future__ import annotations

import hashlib
import urllib.error
import urllib.request
from pathlib import Path

DEFAULT_CACHE = Path.home() / ".cache" / "gcot-ingest"


class DownloadError(RuntimeError):
    pass


class ChecksumError(RuntimeError):
    pass


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def fetch(url: str, cache_dir: Path | None = None,
          expected_sha256: str | None = None) -> Path:
    """Return a local path for the URL, downloading on first use.

    Cache entries are named by the sha256 of the URL so different sources
    never collide; the content checksum is verified when one is pinned.
    """
    cache_dir = Path(cache_dir or DEFAULT_CACHE)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = hashlib.sha256(url.encode()).hexdigest()[:24]
    suffix = Path(url).suffix or ".bin"
    target = cache_dir / f"{key}{suffix}"
    if not target.exists():
        tmp = target.with_suffix(target.suffix + ".part")
        try:
            with urllib.request.urlopen(url, timeout=60) as response, open(tmp, "wb") as out:
                while True:
                    chunk = response.read(1 << 20)
                    if not chunk:
                        break
                    out.write(chunk)
        except (urllib.error.URLError, OSError) as err:
            tmp.unlink(missing_ok=True)
            raise DownloadError(
                f"could not download {url}: {err}. "
                f"Pass --archive PATH to use a pre-downloaded copy."
            ) from err
        tmp.rename(target)
    if expected_sha256 is not None:
        actual = sha256_file(target)
        if actual != expected_sha256:
            raise ChecksumError(
                f"checksum mismatch for {url}: expected {expected_sha256}, "
                f"got {actual}"
            )
    return target
