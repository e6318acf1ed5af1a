"""Blinded annotation sessions over an append-only event log.

Annotators see Tasks: digest text with calendar dates redacted, a kind
badge, and a sequence ordinal. Source and pipeline never enter the payload;
the task_id -> digest mapping stays server-side. All state changes are
events in a JSONL log, and replaying the log reconstructs the exact state.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .agents import DecisionSet
from .digests import Digest
from .errors import (
    DuplicateSubmissionError,
    InvalidDecisionError,
    UnknownAnnotatorError,
    UnknownTaskError,
)
from .marketdata import Universe

ISO_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}")
DATE_PLACEHOLDER = "[date withheld]"

EVENT_REGISTER = "register"
EVENT_SUBMIT = "submit"
EVENT_CLOSE = "close"


def redact_dates(text: str) -> str:
    return ISO_DATE_RE.sub(DATE_PLACEHOLDER, text)


@dataclass(frozen=True)
class Task:
    """Exactly what an annotator may see. No source, pipeline, or date."""

    task_id: str
    kind: str
    text: str
    date_ordinal: int

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "text": self.text,
            "date_ordinal": self.date_ordinal,
        }


def blinded_tasks(digests: list[Digest]) -> tuple[tuple[Task, ...], dict[str, str]]:
    """Build blinded tasks in canonical digest order.

    Returns (tasks, task_id -> digest_id). Ordinals index the digest's date
    within the experiment's sorted date range, so relative chronology
    survives while calendar lookup does not.
    """
    ordered = sorted(digests, key=lambda d: (d.date, d.kind, d.pipeline, d.source))
    dates = sorted({d.date for d in ordered})
    ordinal = {date: i for i, date in enumerate(dates)}
    tasks = []
    mapping: dict[str, str] = {}
    for n, digest in enumerate(ordered, start=1):
        task_id = f"t{n:04d}"
        tasks.append(
            Task(
                task_id=task_id,
                kind=digest.kind,
                text=redact_dates(digest.text),
                date_ordinal=ordinal[digest.date],
            )
        )
        mapping[task_id] = digest.id
    return tuple(tasks), mapping


class SessionStore:
    """Append-only JSONL event log, one file per experiment."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def read(self) -> list[dict]:
        if not self.path.is_file():
            return []
        with self.path.open(encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]


@dataclass
class AnnotatorState:
    annotator_id: str
    task_order: tuple[str, ...]
    completed: list[str] = field(default_factory=list)
    submissions: dict[str, DecisionSet] = field(default_factory=dict)


def task_permutation(seed: int, annotator_id: str, task_ids: list[str]) -> tuple[str, ...]:
    """Seeded per-annotator order, reproducible from (seed, annotator_id)."""
    digest = hashlib.sha256(f"{seed}:{annotator_id}".encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    order = list(task_ids)
    rng.shuffle(order)
    return tuple(order)


class ExperimentSessions:
    """In-memory state derived from (tasks, seed, universe) plus the log."""

    def __init__(
        self,
        tasks: tuple[Task, ...],
        task_to_digest: dict[str, str],
        universe: Universe,
        seed: int,
        annotator_ids: list[str],
        store: SessionStore,
    ):
        self.tasks = tasks
        self.task_to_digest = dict(task_to_digest)
        self.universe = universe
        self.seed = seed
        self.store = store
        self.closed = False
        self._by_task_id = {t.task_id: t for t in tasks}
        self._lock = threading.Lock()
        self._annotators: dict[str, AnnotatorState] = {}
        task_ids = [t.task_id for t in tasks]
        for annotator_id in annotator_ids:
            self._annotators[annotator_id] = AnnotatorState(
                annotator_id=annotator_id,
                task_order=task_permutation(seed, annotator_id, task_ids),
            )
        self._replay()
        for annotator_id in annotator_ids:
            if not any(
                e.get("event") == EVENT_REGISTER and e.get("annotator_id") == annotator_id
                for e in self._seen_events
            ):
                self.store.append({"event": EVENT_REGISTER, "annotator_id": annotator_id})

    def _replay(self) -> None:
        self._seen_events = self.store.read()
        for event in self._seen_events:
            name = event.get("event")
            if name in (EVENT_REGISTER, EVENT_SUBMIT):
                # A log may know annotators this process was not configured
                # with; their order is derivable, so adopt them.
                annotator_id = event["annotator_id"]
                if annotator_id not in self._annotators:
                    self._annotators[annotator_id] = AnnotatorState(
                        annotator_id=annotator_id,
                        task_order=task_permutation(
                            self.seed, annotator_id, [t.task_id for t in self.tasks]
                        ),
                    )
            if name == EVENT_SUBMIT:
                self._apply_submission(
                    event["annotator_id"],
                    event["task_id"],
                    list(event["buys"]),
                    list(event["sells"]),
                    event.get("remark", ""),
                )
            elif name == EVENT_CLOSE:
                self.closed = True

    def _state(self, annotator_id: str) -> AnnotatorState:
        state = self._annotators.get(annotator_id)
        if state is None:
            raise UnknownAnnotatorError(f"unknown annotator {annotator_id!r}")
        return state

    @property
    def annotator_ids(self) -> tuple[str, ...]:
        return tuple(self._annotators)

    def next_task(self, annotator_id: str) -> Task | None:
        state = self._state(annotator_id)
        for task_id in state.task_order:
            if task_id not in state.submissions:
                return self._by_task_id[task_id]
        return None

    def _validated_decision(
        self, annotator_id: str, task_id: str, buys: list[str], sells: list[str], remark: str
    ) -> DecisionSet:
        digest_id = self.task_to_digest.get(task_id)
        if digest_id is None:
            raise UnknownTaskError(f"unknown task {task_id!r}")
        for code in list(buys) + list(sells):
            if code not in self.universe:
                raise InvalidDecisionError(f"unknown ticker {code!r}")
        try:
            return DecisionSet(
                investor_id=annotator_id,
                digest_id=digest_id,
                buys=tuple(buys),
                sells=tuple(sells),
                remark=remark,
            )
        except ValueError as exc:
            raise InvalidDecisionError(str(exc)) from exc

    def _apply_submission(
        self, annotator_id: str, task_id: str, buys: list[str], sells: list[str], remark: str
    ) -> DecisionSet:
        state = self._state(annotator_id)
        decision = self._validated_decision(annotator_id, task_id, buys, sells, remark)
        state.submissions[task_id] = decision
        state.completed.append(task_id)
        return decision

    def submit(
        self, annotator_id: str, task_id: str, buys: list[str], sells: list[str], remark: str
    ) -> DecisionSet:
        """Validate, persist, apply. First write wins on a double submit."""
        with self._lock:
            state = self._state(annotator_id)
            if task_id not in self._by_task_id:
                raise UnknownTaskError(f"unknown task {task_id!r}")
            if task_id in state.submissions:
                raise DuplicateSubmissionError(f"task {task_id!r} already submitted")
            decision = self._validated_decision(annotator_id, task_id, buys, sells, remark)
            self.store.append(
                {
                    "event": EVENT_SUBMIT,
                    "annotator_id": annotator_id,
                    "task_id": task_id,
                    "buys": list(buys),
                    "sells": list(sells),
                    "remark": remark,
                }
            )
            state.submissions[task_id] = decision
            state.completed.append(task_id)
            return decision

    def progress(self, annotator_id: str) -> dict:
        state = self._state(annotator_id)
        return {
            "annotator_id": annotator_id,
            "completed": len(state.completed),
            "total": len(self.tasks),
        }

    def close(self) -> None:
        with self._lock:
            if not self.closed:
                self.store.append({"event": EVENT_CLOSE})
                self.closed = True

    def decisions(self) -> list[DecisionSet]:
        """All submissions in deterministic (annotator, task) order."""
        out = []
        for annotator_id in sorted(self._annotators):
            state = self._annotators[annotator_id]
            for task_id in sorted(state.submissions):
                out.append(state.submissions[task_id])
        return out
