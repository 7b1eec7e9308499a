"""Append-only adjudication store with quorum-derived candidate status.

Candidates and verdicts live in two JSONL files that are only ever
appended to; every status is recomputed from the verdict log, so a
process restart replays the files and loses nothing.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .labels import RelationLabel
from .pairs import (
    PROVENANCE_ADJUDICATED,
    CandidatePair,
    LabeledPair,
    candidate_from_dict,
    candidate_to_dict,
)

DECISION_ACCEPT = "accept"
DECISION_REJECT = "reject"
DECISION_SKIP = "skip"
DECISIONS = (DECISION_ACCEPT, DECISION_REJECT, DECISION_SKIP)

STATUS_PENDING = "pending"
STATUS_ACCEPTED = "accepted"
STATUS_REJECTED = "rejected"


class UnknownPair(KeyError):
    def __init__(self, pair_id: str):
        super().__init__(pair_id)
        self.pair_id = pair_id

    def __str__(self) -> str:
        return f"no candidate with pair_id {self.pair_id!r}"


class ConflictingCandidate(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    pair_id: str
    annotator: str
    decision: str
    timestamp: str
    note: str | None = None

    def __post_init__(self) -> None:
        if self.decision not in DECISIONS:
            raise ValueError(f"unknown decision: {self.decision!r}")
        if not self.annotator:
            raise ValueError("annotator must be non-empty")


@dataclass(frozen=True)
class QuorumPolicy:
    required_accepts: int = 2
    required_rejects: int = 2
    panel_size: int = 3

    def __post_init__(self) -> None:
        if not (1 <= self.required_accepts <= self.panel_size):
            raise ValueError("required_accepts must be within the panel size")
        if not (1 <= self.required_rejects <= self.panel_size):
            raise ValueError("required_rejects must be within the panel size")


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def verdict_to_dict(verdict: Verdict) -> dict:
    return {
        "pair_id": verdict.pair_id,
        "annotator": verdict.annotator,
        "decision": verdict.decision,
        "timestamp": verdict.timestamp,
        "note": verdict.note,
    }


def verdict_from_dict(row: dict) -> Verdict:
    return Verdict(
        pair_id=row["pair_id"],
        annotator=row["annotator"],
        decision=row["decision"],
        timestamp=row["timestamp"],
        note=row.get("note"),
    )


class AdjudicationStore:
    """Single-writer store over a directory holding candidates.jsonl and
    verdicts.jsonl. Reads and writes share one lock, so every reader sees
    a state no older than the last completed write."""

    def __init__(self, directory: Path | str, policy: QuorumPolicy | None = None):
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)
        self.policy = policy or QuorumPolicy()
        self._lock = threading.Lock()
        self._candidates: dict[str, CandidatePair] = {}
        self._verdicts: list[Verdict] = []
        self._replay()

    @property
    def candidates_path(self) -> Path:
        return self._dir / "candidates.jsonl"

    @property
    def verdicts_path(self) -> Path:
        return self._dir / "verdicts.jsonl"

    def _replay(self) -> None:
        if self.candidates_path.exists():
            with open(self.candidates_path, "r", encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    candidate = candidate_from_dict(json.loads(line))
                    self._candidates[candidate.pair_id] = candidate
        if self.verdicts_path.exists():
            with open(self.verdicts_path, "r", encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    self._verdicts.append(verdict_from_dict(json.loads(line)))

    @staticmethod
    def _append(path: Path, row: dict) -> None:
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
            handle.flush()

    def enqueue(self, candidates: Iterable[CandidatePair]) -> int:
        """Add new candidates; re-enqueueing an identical candidate is a
        no-op, while a pair_id reused for different topics raises."""
        added = 0
        with self._lock:
            for candidate in candidates:
                existing = self._candidates.get(candidate.pair_id)
                if existing is not None:
                    if (existing.topic_a, existing.topic_b) != (
                        candidate.topic_a,
                        candidate.topic_b,
                    ):
                        raise ConflictingCandidate(
                            f"pair_id {candidate.pair_id} already enqueued "
                            f"with different topics"
                        )
                    continue
                self._candidates[candidate.pair_id] = candidate
                self._append(self.candidates_path, candidate_to_dict(candidate))
                added += 1
        return added

    def _effective_decisions(self) -> dict[str, dict[str, str]]:
        """Last accept/reject per (pair, annotator); skips never count."""
        effective: dict[str, dict[str, str]] = {}
        for verdict in self._verdicts:
            if verdict.decision == DECISION_SKIP:
                continue
            effective.setdefault(verdict.pair_id, {})[verdict.annotator] = verdict.decision
        return effective

    def _status(self, decisions: dict[str, str]) -> str:
        accepts = sum(1 for d in decisions.values() if d == DECISION_ACCEPT)
        rejects = sum(1 for d in decisions.values() if d == DECISION_REJECT)
        if accepts >= self.policy.required_accepts:
            return STATUS_ACCEPTED
        if rejects >= self.policy.required_rejects:
            return STATUS_REJECTED
        return STATUS_PENDING

    def _status_map(self) -> dict[str, str]:
        effective = self._effective_decisions()
        return {
            pair_id: self._status(effective.get(pair_id, {}))
            for pair_id in self._candidates
        }

    def status_of(self, pair_id: str) -> str:
        with self._lock:
            if pair_id not in self._candidates:
                raise UnknownPair(pair_id)
            return self._status(self._effective_decisions().get(pair_id, {}))

    def next_pending(self, annotator: str) -> CandidatePair | None:
        """First pending candidate (stable pair_id order) this annotator
        has not yet judged or skipped."""
        with self._lock:
            judged = {
                v.pair_id for v in self._verdicts if v.annotator == annotator
            }
            statuses = self._status_map()
            for pair_id in sorted(self._candidates):
                if statuses[pair_id] == STATUS_PENDING and pair_id not in judged:
                    return self._candidates[pair_id]
            return None

    def record_verdict(self, verdict: Verdict) -> str:
        """Append a verdict and return the pair's derived status."""
        with self._lock:
            if verdict.pair_id not in self._candidates:
                raise UnknownPair(verdict.pair_id)
            self._verdicts.append(verdict)
            self._append(self.verdicts_path, verdict_to_dict(verdict))
            return self._status(
                self._effective_decisions().get(verdict.pair_id, {})
            )

    def progress(self) -> dict[str, int]:
        with self._lock:
            statuses = self._status_map()
            counts = {
                STATUS_PENDING: 0,
                STATUS_ACCEPTED: 0,
                STATUS_REJECTED: 0,
            }
            for status in statuses.values():
                counts[status] += 1
            counts["total"] = len(statuses)
            return counts

    def candidates(self) -> list[CandidatePair]:
        with self._lock:
            return [self._candidates[pid] for pid in sorted(self._candidates)]

    def finalize(self, policy: QuorumPolicy | None = None) -> list[LabeledPair]:
        """Accepted candidates as same-as pairs, sorted by pair_id."""
        with self._lock:
            saved = self.policy
            if policy is not None:
                self.policy = policy
            try:
                statuses = self._status_map()
            finally:
                self.policy = saved
        accepted = [
            self._candidates[pid]
            for pid in sorted(statuses)
            if statuses[pid] == STATUS_ACCEPTED
        ]
        return [
            LabeledPair(
                pair_id=c.pair_id,
                topic_a=c.topic_a,
                topic_b=c.topic_b,
                label=RelationLabel.SAME_AS,
                source=c.source,
                provenance=PROVENANCE_ADJUDICATED,
            )
            for c in accepted
        ]
