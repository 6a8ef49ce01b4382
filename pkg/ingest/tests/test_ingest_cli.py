from pathlib import Path

import pytest

from gcot_ingest.cache import ChecksumError, DownloadError, fetch, sha256_file
from gcot_ingest.cli import main


def test_cli_convert_and_verify(cora_npz, tmp_path, capsys):
    code = main(["cora", "--out", str(tmp_path / "cora"),
                 "--archive", str(cora_npz), "--verify"])
    assert code == 0
    out = capsys.readouterr().out
    assert "cora: PASS" in out
    assert "PASS nodes: 2708" in out


def test_cli_mutag_verify(mutag_zip, tmp_path, capsys):
    code = main(["mutag", "--out", str(tmp_path / "m"),
                 "--archive", str(mutag_zip), "--verify"])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS graphs: 188" in out
    assert "PASS feature_dim: 7" in out


def test_cli_unknown_name(tmp_path, capsys):
    code = main(["nosuch", "--out", str(tmp_path)])
    assert code == 2
    err = capsys.readouterr().err
    assert "supported:" in err and "cora" in err and "squirrel" in err


def test_cli_bad_archive(tmp_path, capsys):
    bad = tmp_path / "bad.npz"
    bad.write_bytes(b"junk")
    code = main(["cora", "--out", str(tmp_path / "out"), "--archive", str(bad)])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_fetch_uses_cache_and_checks_checksum(tmp_path):
    payload = tmp_path / "payload.npz"
    payload.write_bytes(b"archive-bytes")
    url = payload.as_uri()
    cache = tmp_path / "cache"

    got = fetch(url, cache_dir=cache, expected_sha256=sha256_file(payload))
    assert got.read_bytes() == b"archive-bytes"
    assert got.parent == cache

    # second fetch hits the cache (delete the source to prove it)
    payload.unlink()
    again = fetch(url, cache_dir=cache, expected_sha256=None)
    assert again == got

    with pytest.raises(ChecksumError, match="mismatch"):
        fetch(url, cache_dir=cache, expected_sha256="0" * 64)


def test_fetch_download_failure_mentions_archive_flag(tmp_path):
    url = (tmp_path / "missing.npz").as_uri()
    with pytest.raises(DownloadError, match="--archive"):
        fetch(url, cache_dir=tmp_path / "cache")
