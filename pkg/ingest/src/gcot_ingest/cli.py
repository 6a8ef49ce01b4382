"""Command line: ingest <name> --out DIR [--archive PATH] [--verify]."""

from __future__ import annotations

import argparse
import sys

from .cache import ChecksumError, DownloadError
from .convert import ArchiveError, fetch_convert
from .sources import SOURCES, UnknownDatasetError, get_source
from .verify import verify_stats


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ingest",
        description="Fetch a public graph benchmark and convert it to the "
                    "canonical dataset directory format",
    )
    parser.add_argument("name", help=f"dataset name ({', '.join(sorted(SOURCES))})")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--archive", help="pre-downloaded archive file "
                                          "(or directory for multi-file sources)")
    parser.add_argument("--verify", action="store_true",
                        help="check the converted directory against published stats")
    parser.add_argument("--cache", help="raw archive cache directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = get_source(args.name)
    except UnknownDatasetError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    try:
        out = fetch_convert(spec, args.out, archive=args.archive, cache_dir=args.cache)
    except (ArchiveError, DownloadError, ChecksumError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    if args.verify:
        report = verify_stats(out, spec)
        print(report.render())
        return 0 if report.passed else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
