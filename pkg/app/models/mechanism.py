import threading
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import InputError
from app.models.database import Database, DatabaseSpace
from app.models.distribution import Distribution, Label
from app.schemas.mechanism_file import GeneratorSpec

RowFn = Callable[[Database], np.ndarray]


class Mechanism:
    """A map from databases to distributions over one shared transcript set.

    Rows come either from a dense table or from a generator function that is
    evaluated on demand. Generator rows are memoized behind a lock, so
    concurrent readers always see the same array for the same database.
    """

    def __init__(
        self,
        space: DatabaseSpace,
        transcripts: Sequence[Label],
        row_fn: Optional[RowFn] = None,
        log_row_fn: Optional[RowFn] = None,
        table: Optional[Mapping[Database, Sequence[float]]] = None,
        descriptor: Optional[GeneratorSpec] = None,
        name: str = "",
        grid=None,
    ):
        transcripts = tuple(transcripts)
        if len(set(transcripts)) != len(transcripts):
            raise InputError("Transcript labels must be unique")
        if table is None and row_fn is None and log_row_fn is None:
            raise InputError("A mechanism needs a table or a row generator")

        self.space = space
        self.transcripts = transcripts
        self.descriptor = descriptor
        self.grid = grid
        self.name = name or (descriptor.type if descriptor else "table")
        self._transcript_index: Dict[Label, int] = {t: k for k, t in enumerate(transcripts)}
        self._row_fn = row_fn
        self._log_row_fn = log_row_fn
        self._rows: Dict[Database, Distribution] = {}
        self._log_rows: Dict[Database, np.ndarray] = {}
        self._lock = threading.Lock()
        self._dense = table is not None

        if table is not None:
            space.require_enumerable()
            for x in space.databases():
                if x not in table:
                    raise InputError(f"Table has no row for database {space.encode(x)!r}")
                self._rows[x] = self._make_row(x, np.asarray(table[x], dtype=float))
            extra = set(table) - set(self._rows)
            if extra:
                raise InputError(f"Table has rows for databases outside the space: {sorted(map(str, extra))[:3]}")

    @classmethod
    def from_table(cls, space: DatabaseSpace, transcripts: Sequence[Label],
                   table: Mapping[Database, Sequence[float]], descriptor: GeneratorSpec = None,
                   name: str = "") -> "Mechanism":
        return cls(space, transcripts, table=table, descriptor=descriptor, name=name)

    @classmethod
    def from_generator(cls, space: DatabaseSpace, transcripts: Sequence[Label], row_fn: RowFn = None,
                       log_row_fn: RowFn = None, descriptor: GeneratorSpec = None,
                       name: str = "", grid=None) -> "Mechanism":
        return cls(space, transcripts, row_fn=row_fn, log_row_fn=log_row_fn, descriptor=descriptor,
                   name=name, grid=grid)

    @property
    def representation(self) -> str:
        return "dense" if self._dense else "generator"

    def _make_row(self, x: Database, probs: np.ndarray) -> Distribution:
        if probs.shape != (len(self.transcripts),):
            raise InputError(
                f"Row for {self.space.encode(x)!r} has {probs.size} entries, expected {len(self.transcripts)}"
            )
        try:
            return Distribution(self.transcripts, probs)
        except InputError as exc:
            raise InputError(f"Row for {self.space.encode(x)!r} is not a distribution: {exc.detail}")

    def row(self, x: Iterable) -> Distribution:
        x = self.space.validate(x)
        cached = self._rows.get(x)
        if cached is not None:
            return cached
        if self._dense:
            raise InputError(f"Table has no row for database {self.space.encode(x)!r}")
        if self._row_fn is not None:
            probs = np.asarray(self._row_fn(x), dtype=float)
        else:
            probs = np.exp(self.log_row_array(x))
        row = self._make_row(x, probs)
        with self._lock:
            return self._rows.setdefault(x, row)

    def row_array(self, x: Iterable) -> np.ndarray:
        return self.row(x).probs

    def log_row_array(self, x: Iterable) -> np.ndarray:
        """Natural-log row; -inf marks impossible transcripts."""
        x = self.space.validate(x)
        cached = self._log_rows.get(x)
        if cached is not None:
            return cached
        if self._log_row_fn is not None:
            logs = np.asarray(self._log_row_fn(x), dtype=float)
        else:
            with np.errstate(divide="ignore"):
                logs = np.log(self.row_array(x))
        logs.flags.writeable = False
        with self._lock:
            return self._log_rows.setdefault(x, logs)

    def transcript_index(self, t: Label) -> int:
        try:
            return self._transcript_index[t]
        except KeyError:
            raise InputError(f"Unknown transcript {t!r}")

    def prob(self, x: Iterable, t: Label) -> float:
        return float(self.row_array(x)[self.transcript_index(t)])

    def densify(self) -> "Mechanism":
        if self._dense:
            return self
        self.space.require_enumerable()
        cells = self.space.count * len(self.transcripts)
        if cells > settings.DENSE_WRITE_CAP:
            raise InputError(f"Refusing to densify {cells} table cells (limit {settings.DENSE_WRITE_CAP})")
        table = {x: self.row_array(x) for x in self.space.databases()}
        return Mechanism.from_table(self.space, self.transcripts, table, descriptor=self.descriptor, name=self.name)

    def __repr__(self) -> str:
        return (f"Mechanism({self.name}, {self.space!r}, transcripts={len(self.transcripts)}, "
                f"{self.representation})")
