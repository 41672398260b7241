"""Mean-opinion-score tables, loaded from CSV.

The expected layout is a header row ``content,distortion,mos`` followed by
one row per rated stimulus. Keys (content, distortion) must be unique.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import DuplicateKeyError, ParseError, SchemaError

_REQUIRED = ("content", "distortion", "mos")


@dataclass(frozen=True)
class MosRow:
    content: str
    distortion: str
    mos: float


@dataclass(frozen=True, eq=False)
class MosTable:
    rows: tuple[MosRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def as_dict(self) -> dict[tuple[str, str], float]:
        """Map (content, distortion) -> mos."""
        return {(r.content, r.distortion): r.mos for r in self.rows}


def load_mos_csv(path: str) -> MosTable:
    """Load a MOS table.

    Raises SchemaError when a required column is missing, ParseError for a
    non-numeric or non-finite mos value (naming the 1-based file row), and
    DuplicateKeyError for a repeated (content, distortion) key.
    """
    path = str(path)
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a header row") from None
        columns = [c.strip().lower() for c in header]
        missing = [c for c in _REQUIRED if c not in columns]
        if missing:
            raise SchemaError(f"{path}: missing column(s): {', '.join(missing)}")
        idx = {c: columns.index(c) for c in _REQUIRED}

        rows: list[MosRow] = []
        seen: set[tuple[str, str]] = set()
        for rowno, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) < len(columns):
                raise ParseError(
                    f"{path}: row {rowno}: expected {len(columns)} fields, "
                    f"found {len(record)}"
                )
            content = record[idx["content"]].strip()
            distortion = record[idx["distortion"]].strip()
            raw = record[idx["mos"]].strip()
            try:
                mos = float(raw)
            except ValueError:
                raise ParseError(
                    f"{path}: row {rowno}: non-numeric mos '{raw}'"
                ) from None
            if not math.isfinite(mos):
                raise ParseError(f"{path}: row {rowno}: non-finite mos '{raw}'")
            key = (content, distortion)
            if key in seen:
                raise DuplicateKeyError(
                    f"{path}: row {rowno}: duplicate key {key!r}"
                )
            seen.add(key)
            rows.append(MosRow(content=content, distortion=distortion, mos=mos))
    return MosTable(rows=tuple(rows))
