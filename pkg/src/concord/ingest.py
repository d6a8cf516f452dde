"""Chunked reading of delimited files into encoded model-matrix blocks.

Rows stream through in file order; rows with a missing value in any
referenced column are dropped and counted, while malformed values (bad
numerics, undeclared categorical levels) raise with the offending file
line. Chunks hand off directly to scatter accumulation, so arbitrarily
large files reduce to fixed-size summaries in one pass.
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import ScatterSummary
from .schema import CATEGORICAL, NUMERIC, ONE_HOT, ColumnSpec

__all__ = [
    "ModelMatrixChunk",
    "derive_response",
    "infer_levels",
    "read_chunks",
    "sample_rows",
    "scatter_from_file",
]


@dataclass(frozen=True)
class ModelMatrixChunk:
    """One encoded block of rows.

    ``row_offset`` is the index of the first row within the stream of
    valid (emitted) rows; ``dropped_rows`` counts rows skipped for missing
    values since the previous chunk. ``source_rows`` records the valid-row
    indices behind a sampled chunk.
    """

    design: np.ndarray
    response: Optional[np.ndarray]
    row_offset: int
    dropped_rows: int
    source_rows: Optional[np.ndarray] = None

    @property
    def rows(self):
        return self.design.shape[0]


class _RowEncoder:
    """Compiled per-schema encoder mapping raw field dicts to float rows."""

    def __init__(self, schema):
        self.schema = schema
        self.width = schema.width
        self.missing = frozenset(schema.missing_tokens)
        self.has_response = schema.response is not None
        plan = []
        offset = 1 if schema.intercept else 0
        for col in schema.columns:
            if col.kind == NUMERIC:
                plan.append((col.name, None, offset))
                offset += 1
            else:
                if schema.encoding == ONE_HOT:
                    positions = {lvl: offset + j for j, lvl in enumerate(col.levels)}
                    offset += len(col.levels)
                else:
                    positions = {col.levels[0]: None}
                    positions.update(
                        (lvl, offset + j) for j, lvl in enumerate(col.levels[1:])
                    )
                    offset += len(col.levels) - 1
                plan.append((col.name, positions, None))
        self.plan = plan
        self.intercept = schema.intercept

    def encode(self, fields, lineno):
        """Encode one raw row; returns (row, response) or None when the
        row has a missing value in a referenced column."""
        schema = self.schema
        response = None
        if self.has_response:
            raw = fields[schema.response.source].strip()
            if raw in self.missing:
                return None
            response = schema.response.apply(_parse_float(raw, schema.response.source, lineno))

        row = np.zeros(self.width)
        if self.intercept:
            row[0] = 1.0
        for name, positions, numeric_pos in self.plan:
            raw = fields[name].strip()
            if raw in self.missing:
                return None
            if positions is None:
                row[numeric_pos] = _parse_float(raw, name, lineno)
            else:
                try:
                    pos = positions[raw]
                except KeyError:
                    raise ValueError(
                        f"line {lineno}: value {raw!r} in column {name!r} is not "
                        f"among the declared levels"
                    ) from None
                if pos is not None:
                    row[pos] = 1.0
        return row, response


def _parse_float(raw, name, lineno):
    try:
        return float(raw)
    except ValueError:
        raise ValueError(
            f"line {lineno}: cannot parse {raw!r} in column {name!r} as a number"
        ) from None


def derive_response(fields, rule, missing_tokens=("", "NA"), lineno=0):
    """Apply a response rule to one raw row.

    Returns the derived value, or ``None`` when the source field is
    missing (callers drop and count such rows).
    """
    raw = fields[rule.source].strip()
    if raw in missing_tokens:
        return None
    return rule.apply(_parse_float(raw, rule.source, lineno))


def _open_reader(path, schema):
    fh = open(path, "r", encoding="utf-8", newline="")
    reader = csv.reader(fh, delimiter=schema.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise ValueError(f"{path}: file is empty") from None
    header = [h.strip() for h in header]
    missing = [c for c in schema.referenced_columns if c not in header]
    if missing:
        fh.close()
        raise ValueError(f"{path}: missing columns {missing}; header has {header}")
    index = {name: header.index(name) for name in schema.referenced_columns}
    return fh, reader, index


class _StreamStats:
    """Running counters for one pass over a file."""

    __slots__ = ("dropped",)

    def __init__(self):
        self.dropped = 0


def _iter_encoded(path, schema, stats):
    """Yield (row, response) pairs in file order, counting drops on ``stats``."""
    encoder = _RowEncoder(schema)
    fh, reader, index = _open_reader(path, schema)
    min_fields = max(index.values()) + 1
    try:
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) < min_fields:
                raise ValueError(
                    f"line {lineno}: row has {len(record)} fields, "
                    f"expected at least {min_fields}"
                )
            fields = {name: record[pos] for name, pos in index.items()}
            encoded = encoder.encode(fields, lineno)
            if encoded is None:
                stats.dropped += 1
                continue
            yield encoded
    finally:
        fh.close()


def read_chunks(path, schema, chunk_rows=8192):
    """Stream a delimited file as encoded chunks of at most ``chunk_rows``.

    Yields :class:`ModelMatrixChunk` objects in file order with strictly
    increasing row offsets. Dropped (missing-value) rows are counted on the
    chunk that follows them; if the file ends in dropped rows, a final
    empty chunk carries the remainder so the stream totals are exact.
    """
    if chunk_rows < 1:
        raise ValueError(f"chunk_rows must be positive, got {chunk_rows}")
    has_response = schema.response is not None
    width = schema.width
    stats = _StreamStats()
    reported = 0
    rows, responses = [], []
    offset = 0
    for row, resp in _iter_encoded(path, schema, stats):
        rows.append(row)
        if has_response:
            responses.append(resp)
        if len(rows) == chunk_rows:
            yield ModelMatrixChunk(
                design=np.vstack(rows),
                response=np.asarray(responses) if has_response else None,
                row_offset=offset,
                dropped_rows=stats.dropped - reported,
            )
            reported = stats.dropped
            offset += len(rows)
            rows, responses = [], []
    if rows or stats.dropped > reported:
        design = np.vstack(rows) if rows else np.empty((0, width))
        response = None
        if has_response:
            response = np.asarray(responses) if rows else np.empty(0)
        yield ModelMatrixChunk(
            design=design,
            response=response,
            row_offset=offset,
            dropped_rows=stats.dropped - reported,
        )


def sample_rows(path, schema, size, method="random", seed=None):
    """Draw encoded rows from a file in a single pass.

    ``method="random"`` reservoir-samples ``size`` distinct valid rows
    uniformly without replacement (row order in the result is not
    meaningful); ``method="head"`` takes the first ``size`` valid rows.
    The returned chunk's ``source_rows`` records the valid-row indices
    that were selected.
    """
    if size < 1:
        raise ValueError(f"size must be positive, got {size}")
    if method not in ("random", "head"):
        raise ValueError(f"method must be random or head, got {method!r}")
    has_response = schema.response is not None

    design = np.empty((size, schema.width))
    response = np.empty(size) if has_response else None
    kept_idx = np.empty(size, dtype=np.int64)
    stats = _StreamStats()
    rng = np.random.default_rng(seed) if method == "random" else None
    count = 0
    for row, resp in _iter_encoded(path, schema, stats):
        if method == "head":
            design[count] = row
            if has_response:
                response[count] = resp
            kept_idx[count] = count
            count += 1
            if count == size:
                break
        else:
            # Reservoir sampling (algorithm R): row t replaces a slot with
            # probability size / (t + 1).
            if count < size:
                j = count
            else:
                j = int(rng.integers(0, count + 1))
            if j < size:
                design[j] = row
                if has_response:
                    response[j] = resp
                kept_idx[j] = count
            count += 1

    if count < size:
        raise ValueError(f"requested {size} rows but file has only {count} valid rows")
    return ModelMatrixChunk(
        design=design,
        response=response,
        row_offset=0,
        dropped_rows=stats.dropped,
        source_rows=kept_idx,
    )


def scatter_from_file(path, schema, chunk_rows=8192, track_response=None):
    """Accumulate a whole file into one scatter summary in a single pass.

    Returns ``(summary, valid_rows, dropped_rows)``. ``track_response``
    defaults to whether the schema derives a response.
    """
    if track_response is None:
        track_response = schema.response is not None
    if track_response and schema.response is None:
        raise ValueError("schema has no response rule to track")
    summary = None
    dropped = 0
    valid = 0
    for chunk in read_chunks(path, schema, chunk_rows=chunk_rows):
        if summary is None:
            summary = ScatterSummary(chunk.design.shape[1], track_response=track_response)
        summary = summary.accumulate(
            chunk.design, chunk.response if track_response else None
        )
        dropped += chunk.dropped_rows
        valid += chunk.rows
    if summary is None:
        summary = ScatterSummary(schema.width, track_response=track_response)
    return summary, valid, dropped


def infer_levels(path, schema):
    """Return a copy of ``schema`` with undeclared categorical levels
    filled from a full pass over the file (sorted unique values).

    Only the undeclared categorical columns are read, so this never fails
    on unrelated malformed fields. Missing tokens contribute nothing.
    """
    targets = [
        c.name for c in schema.columns if c.kind == CATEGORICAL and c.levels is None
    ]
    if not targets:
        return schema
    seen = {name: set() for name in targets}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        missing = [name for name in targets if name not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}; header has {header}")
        positions = {name: header.index(name) for name in targets}
        for record in reader:
            if not record:
                continue
            for name, pos in positions.items():
                value = record[pos].strip()
                if value not in schema.missing_tokens:
                    seen[name].add(value)
    new_columns = []
    for col in schema.columns:
        if col.name in seen:
            levels = tuple(sorted(seen[col.name]))
            if len(levels) < 2:
                raise ValueError(
                    f"column {col.name!r}: found {len(levels)} distinct level(s), need >= 2"
                )
            new_columns.append(ColumnSpec(name=col.name, kind=col.kind, levels=levels))
        else:
            new_columns.append(col)
    return schema.with_columns(new_columns)
