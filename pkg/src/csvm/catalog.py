"""File catalogs: one CSVM row per file found under a directory."""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .core import DEFAULT_WIDTH, Document, make_document
from .errors import CsvmError, CsvmWarning

# not strftime("%b"): that one follows the process locale
_MONTHS = ("jan", "feb", "mar", "apr", "may", "jun",
           "jul", "aug", "sep", "oct", "nov", "dec")


class RootNotFound(CsvmError, FileNotFoundError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    directory: str
    filename: str
    timestamp: str

    def as_row(self):
        return (self.directory, self.filename, self.timestamp)


def format_timestamp(epoch_seconds: float) -> str:
    """``DD:mon:YYYY`` in UTC, e.g. ``18:jun:2009``."""
    d = datetime.fromtimestamp(epoch_seconds, tz=timezone.utc)
    return f"{d.day:02d}:{_MONTHS[d.month - 1]}:{d.year:04d}"


def _unsafe(text, delimiter):
    return delimiter in text or "\n" in text or "\r" in text


def scan_directory(root, recursive: bool = True, extension_filter: str | None = None,
                   posix_paths: bool = False, delimiter: str = "\t",
                   empty_marker: str = "-") -> Document:
    """Catalog the files under ``root`` as a DIR / FILE / pending-name table.

    Rows are sorted by (directory, filename) so repeated scans of an unchanged
    tree give identical documents.  Unreadable entries only raise warnings.
    """
    root = os.fspath(root)
    if not os.path.isdir(root):
        raise RootNotFound(f"catalog root {root!r} does not exist or is not a directory")
    if extension_filter and not extension_filter.startswith("."):
        extension_filter = "." + extension_filter

    def on_error(exc):
        warnings.warn(f"PermissionDenied: {exc}", CsvmWarning, stacklevel=2)

    entries = []
    for dirpath, dirnames, filenames in os.walk(root, onerror=on_error):
        if not recursive:
            dirnames[:] = []
        directory = Path(dirpath).as_posix() if posix_paths else dirpath
        for name in filenames:
            if extension_filter and not name.endswith(extension_filter):
                continue
            if _unsafe(directory, delimiter) or _unsafe(name, delimiter):
                warnings.warn(f"skipping {os.path.join(dirpath, name)!r}: name holds "
                              "the delimiter or a line break", CsvmWarning, stacklevel=2)
                continue
            try:
                mtime = os.stat(os.path.join(dirpath, name)).st_mtime
            except OSError as exc:
                on_error(exc)
                continue
            entries.append(CatalogEntry(directory, name, format_timestamp(mtime)))

    entries.sort(key=lambda e: (e.directory, e.filename))
    return make_document(
        ("DIR", "FILE", empty_marker),
        [e.as_row() for e in entries],
        widths=(DEFAULT_WIDTH,) * 3,
    )
