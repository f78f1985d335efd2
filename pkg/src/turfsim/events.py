"""Columnar, append-only event log with optional spill-to-disk."""
from __future__ import annotations

import csv
import shutil
import tempfile
from array import array
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .config import EventKind, EventRecord

__all__ = ["EventLog", "EVENT_CSV_HEADER", "NONE_ID", "EventLogFormatError"]

EVENT_CSV_HEADER = ("time", "kind", "ocg_id", "area_id", "incumbent_id")
NONE_ID = -1
DEFAULT_MAX_EVENTS = 10**7


class EventLogFormatError(ValueError):
    pass


class EventLog:
    """Append-only log stored as five parallel columns.

    ``area_id`` and ``incumbent_id`` use :data:`NONE_ID` for "not applicable".
    Once more than ``max_events`` rows are buffered, the buffer is written to
    an ``.npz`` chunk in ``spill_dir`` (a temporary directory if not given)
    and cleared; :meth:`chunks` reads spilled chunks back in order.
    """

    def __init__(self, max_events: int = DEFAULT_MAX_EVENTS, spill_dir: Optional[Union[str, Path]] = None):
        self.max_events = int(max_events)
        self._spill_dir = Path(spill_dir) if spill_dir is not None else None
        self._own_dir = False
        self._chunks: list[Path] = []
        self._spilled = 0
        self._reset_buffer()

    def _reset_buffer(self) -> None:
        self.time = array("d")
        self.kind = array("b")
        self.ocg = array("l")
        self.area = array("l")
        self.incumbent = array("l")

    def append(self, time: float, kind: int, ocg: int, area: int = NONE_ID, incumbent: int = NONE_ID) -> None:
        self.time.append(time)
        self.kind.append(kind)
        self.ocg.append(ocg)
        self.area.append(area)
        self.incumbent.append(incumbent)
        if len(self.time) >= self.max_events:
            self.spill()

    def spill(self) -> None:
        if not len(self.time):
            return
        if self._spill_dir is None:
            self._spill_dir = Path(tempfile.mkdtemp(prefix="turfsim-events-"))
            self._own_dir = True
        self._spill_dir.mkdir(parents=True, exist_ok=True)
        path = self._spill_dir / f"chunk{len(self._chunks):05d}.npz"
        np.savez(path, **self._buffer_arrays())
        self._chunks.append(path)
        self._spilled += len(self.time)
        self._reset_buffer()

    def _buffer_arrays(self) -> dict[str, np.ndarray]:
        return {
            "time": np.frombuffer(self.time, dtype=np.float64).copy(),
            "kind": np.frombuffer(self.kind, dtype=np.int8).astype(np.int64),
            "ocg": np.asarray(self.ocg, dtype=np.int64),
            "area": np.asarray(self.area, dtype=np.int64),
            "incumbent": np.asarray(self.incumbent, dtype=np.int64),
        }

    @property
    def n_spilled_chunks(self) -> int:
        return len(self._chunks)

    def chunks(self) -> Iterator[dict[str, np.ndarray]]:
        for path in self._chunks:
            with np.load(path) as data:
                yield {k: data[k] for k in EVENT_COLUMNS}
        if len(self.time):
            yield self._buffer_arrays()

    def arrays(self) -> dict[str, np.ndarray]:
        parts = list(self.chunks())
        if not parts:
            return {k: np.empty(0, dtype=np.float64 if k == "time" else np.int64) for k in EVENT_COLUMNS}
        return {k: np.concatenate([p[k] for p in parts]) for k in EVENT_COLUMNS}

    def __len__(self) -> int:
        return self._spilled + len(self.time)

    def __iter__(self) -> Iterator[EventRecord]:
        for ch in self.chunks():
            for t, k, o, a, inc in zip(
                ch["time"].tolist(), ch["kind"].tolist(), ch["ocg"].tolist(), ch["area"].tolist(), ch["incumbent"].tolist()
            ):
                yield EventRecord(
                    time=t,
                    kind=EventKind(k),
                    ocg_id=o,
                    area_id=None if a == NONE_ID else a,
                    incumbent_id=None if inc == NONE_ID else inc,
                )

    def __getitem__(self, i: int) -> EventRecord:
        return list(self)[i] if self._chunks else self._record_at(i)

    def _record_at(self, i: int) -> EventRecord:
        a, inc = self.area[i], self.incumbent[i]
        return EventRecord(
            time=self.time[i],
            kind=EventKind(self.kind[i]),
            ocg_id=self.ocg[i],
            area_id=None if a == NONE_ID else a,
            incumbent_id=None if inc == NONE_ID else inc,
        )

    def close(self) -> None:
        """Delete spill files this log created itself."""
        if self._own_dir and self._spill_dir is not None:
            shutil.rmtree(self._spill_dir, ignore_errors=True)
        self._chunks = []
        self._spilled = 0

    @classmethod
    def from_records(cls, records: Iterable[EventRecord], **kwargs) -> "EventLog":
        log = cls(**kwargs)
        for r in records:
            log.append(
                float(r.time),
                int(r.kind),
                int(r.ocg_id),
                NONE_ID if r.area_id is None else int(r.area_id),
                NONE_ID if r.incumbent_id is None else int(r.incumbent_id),
            )
        return log

    # ------------------------------------------------------------------ CSV

    def write_csv(self, path: Union[str, Path]) -> None:
        """Write ``time,kind,ocg_id,area_id,incumbent_id``; times use ``repr`` (round-trip exact)."""
        labels = {k.value: k.label for k in EventKind}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(EVENT_CSV_HEADER)
            for ch in self.chunks():
                for t, k, o, a, inc in zip(
                    ch["time"].tolist(), ch["kind"].tolist(), ch["ocg"].tolist(), ch["area"].tolist(), ch["incumbent"].tolist()
                ):
                    w.writerow((repr(t), labels[k], o, "" if a == NONE_ID else a, "" if inc == NONE_ID else inc))

    @classmethod
    def read_csv(cls, path: Union[str, Path], **kwargs) -> "EventLog":
        log = cls(**kwargs)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != EVENT_CSV_HEADER:
                raise EventLogFormatError(f"expected header {','.join(EVENT_CSV_HEADER)}, got {header}")
            for lineno, row in enumerate(reader, start=2):
                try:
                    t, k, o, a, inc = row
                    log.append(
                        float(t),
                        int(EventKind.from_label(k)),
                        int(o),
                        NONE_ID if a == "" else int(a),
                        NONE_ID if inc == "" else int(inc),
                    )
                except ValueError as exc:
                    raise EventLogFormatError(f"line {lineno}: {exc}") from None
        return log


EVENT_COLUMNS = ("time", "kind", "ocg", "area", "incumbent")
