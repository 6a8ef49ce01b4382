"""Fetch public graph benchmarks into the canonical dataset format."""

from .convert import ArchiveError, ParsedDataset, fetch_convert, write_canonical
from .sources import SOURCES, ExpectedStats, SourceSpec, UnknownDatasetError, get_source
from .verify import Report, verify_stats

__version__ = "0.1.0"
