"""Column schemas for delimited files: typing, categorical contrast
expansion, and derived binary responses.

A schema fixes the model-matrix width before any data is read: categorical
columns must declare their levels (use :func:`infer_levels` to fill them
from a file in a single explicit pass), so encoding never depends on which
rows happen to be sampled.
"""

import json
from dataclasses import dataclass, replace
from typing import Optional, Tuple

__all__ = [
    "ColumnSpec",
    "ResponseRule",
    "SchemaSpec",
    "airline_benchmark_schema",
    "load_schema",
    "save_schema",
]

NUMERIC = "numeric"
CATEGORICAL = "categorical"
ONE_HOT = "one-hot"
TREATMENT = "treatment-contrast"

DEFAULT_MISSING_TOKENS = ("", "NA")


@dataclass(frozen=True)
class ColumnSpec:
    """One input column: numeric, or categorical with declared levels.

    The first declared level is the reference level under
    treatment-contrast encoding.
    """

    name: str
    kind: str
    levels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL and self.levels is not None:
            if len(self.levels) < 2:
                raise ValueError(
                    f"column {self.name!r}: categorical needs at least 2 levels"
                )
            if len(set(self.levels)) != len(self.levels):
                raise ValueError(f"column {self.name!r}: duplicate levels")
        if self.kind == NUMERIC and self.levels is not None:
            raise ValueError(f"column {self.name!r}: numeric columns take no levels")


@dataclass(frozen=True)
class ResponseRule:
    """Derived response: binary threshold on a source column, or the raw
    numeric value when ``threshold`` is ``None``.

    The binary rule emits 1 when the source value is greater than or equal
    to the threshold.
    """

    source: str
    threshold: Optional[float] = 30.0

    def apply(self, value):
        if self.threshold is None:
            return value
        return 1.0 if value >= self.threshold else 0.0


@dataclass(frozen=True)
class SchemaSpec:
    """Column typing, encoding choice, and response rule for one file format."""

    columns: Tuple[ColumnSpec, ...]
    encoding: str = TREATMENT
    intercept: bool = True
    response: Optional[ResponseRule] = None
    delimiter: str = ","
    missing_tokens: Tuple[str, ...] = DEFAULT_MISSING_TOKENS

    def __post_init__(self):
        if self.encoding not in (ONE_HOT, TREATMENT):
            raise ValueError(f"unknown encoding {self.encoding!r}")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("duplicate column names in schema")
        if not self.columns:
            raise ValueError("schema needs at least one column")
        if self.response is not None and self.response.source in names:
            # A column may be both a regressor and the response source;
            # nothing to validate beyond existence at read time.
            pass

    @property
    def width(self):
        """Expanded model-matrix width; requires declared categorical levels."""
        w = 1 if self.intercept else 0
        for col in self.columns:
            if col.kind == NUMERIC:
                w += 1
            else:
                if col.levels is None:
                    raise ValueError(
                        f"column {col.name!r} has no declared levels; run "
                        "infer_levels() or declare them in the schema"
                    )
                k = len(col.levels)
                w += k if self.encoding == ONE_HOT else k - 1
        return w

    @property
    def feature_names(self):
        """Names of the expanded design columns, in encoding order."""
        names = ["(intercept)"] if self.intercept else []
        for col in self.columns:
            if col.kind == NUMERIC:
                names.append(col.name)
            else:
                levels = col.levels
                if levels is None:
                    raise ValueError(f"column {col.name!r} has no declared levels")
                if self.encoding == TREATMENT:
                    levels = levels[1:]
                names.extend(f"{col.name}={lvl}" for lvl in levels)
        return tuple(names)

    @property
    def referenced_columns(self):
        """Input column names the encoder reads, response source included."""
        names = [c.name for c in self.columns]
        if self.response is not None and self.response.source not in names:
            names.append(self.response.source)
        return tuple(names)

    def with_columns(self, columns):
        return replace(self, columns=tuple(columns))

    def to_dict(self):
        out = {
            "columns": [
                {
                    "name": c.name,
                    "kind": c.kind,
                    **({"levels": list(c.levels)} if c.levels is not None else {}),
                }
                for c in self.columns
            ],
            "encoding": self.encoding,
            "intercept": self.intercept,
            "delimiter": self.delimiter,
            "missing_tokens": list(self.missing_tokens),
        }
        if self.response is not None:
            out["response"] = {
                "source": self.response.source,
                "threshold": self.response.threshold,
            }
        return out

    @classmethod
    def from_dict(cls, data):
        columns = tuple(
            ColumnSpec(
                name=c["name"],
                kind=c["kind"],
                levels=tuple(str(v) for v in c["levels"]) if "levels" in c else None,
            )
            for c in data["columns"]
        )
        response = None
        if "response" in data and data["response"] is not None:
            response = ResponseRule(
                source=data["response"]["source"],
                threshold=data["response"].get("threshold"),
            )
        return cls(
            columns=columns,
            encoding=data.get("encoding", TREATMENT),
            intercept=bool(data.get("intercept", True)),
            response=response,
            delimiter=data.get("delimiter", ","),
            missing_tokens=tuple(data.get("missing_tokens", DEFAULT_MISSING_TOKENS)),
        )


def load_schema(path):
    """Read a schema from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return SchemaSpec.from_dict(json.load(fh))


def save_schema(schema, path):
    """Write a schema to a JSON file."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def airline_benchmark_schema(encoding=ONE_HOT):
    """Schema for the Airline on-time performance covariance benchmark.

    The default one-hot expansion of Year (22 levels, 1987 to 2008),
    Month (12) and DayOfWeek (7) plus the two numeric columns, with no
    intercept, is 43 columns wide. ``encoding="treatment-contrast"`` keeps
    an intercept and drops each reference level instead (41 columns).
    The response flags flights arriving at least 30 minutes late.
    """
    if encoding not in (ONE_HOT, TREATMENT):
        raise ValueError(f"unknown encoding {encoding!r}")
    columns = (
        ColumnSpec("Year", CATEGORICAL, tuple(str(y) for y in range(1987, 2009))),
        ColumnSpec("Month", CATEGORICAL, tuple(str(m) for m in range(1, 13))),
        ColumnSpec("DayOfWeek", CATEGORICAL, tuple(str(d) for d in range(1, 8))),
        ColumnSpec("DepTime", NUMERIC),
        ColumnSpec("DepDelay", NUMERIC),
    )
    return SchemaSpec(
        columns=columns,
        encoding=encoding,
        intercept=(encoding == TREATMENT),
        response=ResponseRule(source="ArrDelay", threshold=30.0),
    )
