"""Per-coordinate inference reports and their JSON/CSV renderings."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field


#: Inference paths a report can originate from.
PATHS = ("ols", "projected", "ridge", "analyze_gauss")


@dataclass
class IntervalReport:
    """One coordinate's interval, test statistic, and rejection decision.

    ``t_stat``/``p_value``/``rejected`` are ``None`` on paths that do not
    define a test (ridge, analyze_gauss). ``degenerate`` marks zero-residual
    fits whose intervals collapse; ``diagnostic`` marks reports that used
    non-private oracle inputs and must not be treated as released values.
    """

    coordinate: int
    center: float
    half_width: float
    alpha: float
    path: str
    t_stat: float | None = None
    p_value: float | None = None
    rejected: bool | None = None
    degenerate: bool = False
    diagnostic: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.path not in PATHS:
            raise ValueError(f"unknown path {self.path!r}, expected one of {PATHS}")
        if self.half_width < 0.0 or math.isnan(self.half_width):
            raise ValueError(f"half_width must be nonnegative, got {self.half_width!r}")

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["lower"] = self.lower
        doc["upper"] = self.upper
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


_CSV_COLUMNS = ("coordinate", "center", "half_width", "t", "p", "rejected", "path")


def reports_to_csv(reports) -> str:
    """Render reports as CSV with one row per coordinate."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(_CSV_COLUMNS)
    for rep in reports:
        writer.writerow(
            [
                rep.coordinate,
                repr(rep.center),
                repr(rep.half_width),
                "" if rep.t_stat is None else repr(rep.t_stat),
                "" if rep.p_value is None else repr(rep.p_value),
                "" if rep.rejected is None else rep.rejected,
                rep.path,
            ]
        )
    return buf.getvalue()


def reports_to_json(reports) -> str:
    return json.dumps([rep.to_dict() for rep in reports], indent=2)
