"""Append-only annotation storage.

Each task owns a directory named by a content hash of its id, holding the
task definition and an append-only JSON-lines file of annotation
submissions. Versions are per labeler and monotonically increasing; history
is never rewritten, and the latest version per labeler wins at aggregation.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path


class UnknownTaskError(KeyError):
    """The task id is not registered."""


@dataclass(frozen=True)
class LabelingTask:
    """A unit of labeling work: an ordered frame sequence around a target
    frame, with the frame the labeler annotates identified by index."""

    task_id: str
    frame_ids: tuple[str, ...]
    target_index: int
    frame_size: tuple[int, int] = (281, 281)

    def __post_init__(self) -> None:
        if not self.task_id:
            raise ValueError("task_id must be nonempty")
        if not self.frame_ids:
            raise ValueError("a task needs at least one frame")
        if not 0 <= self.target_index < len(self.frame_ids):
            raise ValueError("target_index out of range")

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "frame_ids": list(self.frame_ids),
            "target_index": self.target_index,
            "frame_size": list(self.frame_size),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabelingTask":
        return cls(
            task_id=obj["task_id"],
            frame_ids=tuple(obj["frame_ids"]),
            target_index=int(obj["target_index"]),
            frame_size=tuple(obj.get("frame_size", (281, 281))),  # type: ignore[arg-type]
        )


@dataclass(frozen=True)
class Annotation:
    """One submission: a labeler's polygons for a task, with its version."""

    task_id: str
    labeler_id: str
    polygons: tuple[tuple[tuple[float, float], ...], ...]
    version: int
    submitted_at: float

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "labeler_id": self.labeler_id,
            "polygons": [[[r, c] for r, c in poly] for poly in self.polygons],
            "version": self.version,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Annotation":
        return cls(
            task_id=obj["task_id"],
            labeler_id=obj["labeler_id"],
            polygons=tuple(
                tuple((float(r), float(c)) for r, c in poly) for poly in obj["polygons"]
            ),
            version=int(obj["version"]),
            submitted_at=float(obj["submitted_at"]),
        )


def _task_dir_name(task_id: str) -> str:
    return hashlib.sha256(task_id.encode("utf-8")).hexdigest()[:16]


@dataclass
class AnnotationStore:
    root: Path
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        (self.root / "tasks").mkdir(parents=True, exist_ok=True)

    def _task_dir(self, task_id: str) -> Path:
        return self.root / "tasks" / _task_dir_name(task_id)

    def add_task(self, task: LabelingTask) -> None:
        d = self._task_dir(task.task_id)
        d.mkdir(parents=True, exist_ok=True)
        (d / "task.json").write_text(json.dumps(task.to_json()), encoding="utf-8")

    def get_task(self, task_id: str) -> LabelingTask:
        path = self._task_dir(task_id) / "task.json"
        if not path.exists():
            raise UnknownTaskError(task_id)
        return LabelingTask.from_json(json.loads(path.read_text(encoding="utf-8")))

    def list_tasks(self) -> list[LabelingTask]:
        tasks = []
        for path in sorted((self.root / "tasks").glob("*/task.json")):
            tasks.append(LabelingTask.from_json(json.loads(path.read_text(encoding="utf-8"))))
        tasks.sort(key=lambda t: t.task_id)
        return tasks

    def _annotations_path(self, task_id: str) -> Path:
        return self._task_dir(task_id) / "annotations.jsonl"

    def submit(self, task_id: str, labeler_id: str, polygons) -> Annotation:
        """Append a new annotation version for (task, labeler)."""
        self.get_task(task_id)
        with self._lock:
            prior = [
                a for a in self._read_all(task_id) if a.labeler_id == labeler_id
            ]
            version = max((a.version for a in prior), default=0) + 1
            ann = Annotation(
                task_id=task_id,
                labeler_id=labeler_id,
                polygons=tuple(
                    tuple((float(r), float(c)) for r, c in poly) for poly in polygons
                ),
                version=version,
                submitted_at=time.time(),
            )
            with open(self._annotations_path(task_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(ann.to_json()) + "\n")
            return ann

    def _read_all(self, task_id: str) -> list[Annotation]:
        path = self._annotations_path(task_id)
        if not path.exists():
            return []
        out = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(Annotation.from_json(json.loads(line)))
        return out

    def annotations(
        self, task_id: str, labeler_id: str | None = None, history: bool = False
    ) -> list[Annotation]:
        """Annotations for a task: the latest version per labeler by
        default, or the full history."""
        self.get_task(task_id)
        all_anns = self._read_all(task_id)
        if labeler_id is not None:
            all_anns = [a for a in all_anns if a.labeler_id == labeler_id]
        if history:
            return all_anns
        latest: dict[str, Annotation] = {}
        for ann in all_anns:
            cur = latest.get(ann.labeler_id)
            if cur is None or ann.version > cur.version:
                latest[ann.labeler_id] = ann
        return [latest[k] for k in sorted(latest)]
