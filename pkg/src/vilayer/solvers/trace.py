"""Per-epoch solver records and their CSV form."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..tensorio import atomic_write_text

CSV_HEADER = ("iter", "epoch", "l1_err", "l2_err", "nat_res", "wall_ms")


@dataclass(frozen=True)
class Record:
    iter: int
    epoch: float
    l1_err: float
    l2_err: float
    nat_res: float
    wall_ms: float = 0.0


@dataclass
class Trace:
    method: str
    records: list = field(default_factory=list)
    theta: np.ndarray = None
    converged: bool = False
    state: object = None

    def append(self, record: Record):
        if self.records and record.iter < self.records[-1].iter:
            raise ValueError("trace records must be appended in iteration order")
        self.records.append(record)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def normalized(self, name="l1_err"):
        """Column divided by its value at the first record."""
        col = self.column(name)
        return col / col[0] if col.size and col[0] != 0 else col

    @property
    def last(self) -> Record:
        return self.records[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.records:
            writer.writerow([r.iter, _fmt(r.epoch), _fmt(r.l1_err), _fmt(r.l2_err),
                             _fmt(r.nat_res), _fmt(r.wall_ms)])
        return buf.getvalue()

    def write_csv(self, path):
        atomic_write_text(path, self.to_csv())

    def same_values(self, other) -> bool:
        """Bitwise equality of everything except wall-clock timing."""
        strip = [(r.iter, r.epoch, r.l1_err, r.l2_err, r.nat_res) for r in self.records]
        other_strip = [(r.iter, r.epoch, r.l1_err, r.l2_err, r.nat_res) for r in other.records]
        return strip == other_strip and np.array_equal(self.theta, other.theta)


def _fmt(x):
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def read_trace_csv(path, method=None) -> Trace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header}")
        trace = Trace(method or str(path))
        for row in reader:
            trace.append(Record(int(row[0]), *(float(v) for v in row[1:])))
    return trace
