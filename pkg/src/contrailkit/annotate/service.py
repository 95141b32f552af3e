"""HTTP annotation service.

Endpoints:
  GET  /tasks                      list task summaries
  GET  /tasks/{task_id}            one task with frame URLs
  GET  /frames/{frame_id}.png      a frame image
  POST /tasks/{task_id}/annotations       submit polygons for a labeler
  GET  /tasks/{task_id}/annotations       latest per labeler (?labeler=,
                                          ?history=true for all versions)
  POST /tasks/{task_id}/aggregate         quorum-aggregate latest submissions

Unknown tasks and frames give 404; malformed polygon payloads give 400 with
the offending field path. Submissions are validated against the task's frame
bounds with a one-pixel margin.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse

from ..ingest.patches import center_crop
from ..metrics import QuorumSpec, aggregate_labels
from .polygons import guideline_check, rasterize_polygons
from .store import AnnotationStore, UnknownTaskError

_FRAME_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


def _error(status: int, detail: str, field: str | None = None) -> JSONResponse:
    body: dict = {"detail": detail}
    if field is not None:
        body["field"] = field
    return JSONResponse(status_code=status, content=body)


def _validate_polygons(payload, frame_size: tuple[int, int]):
    """Returns (polygons, None) or (None, error response)."""
    if not isinstance(payload, list):
        return None, _error(400, "polygons must be a list", "polygons")
    h, w = frame_size
    polys = []
    for i, poly in enumerate(payload):
        if not isinstance(poly, list) or len(poly) < 3:
            return None, _error(
                400, "each polygon needs at least 3 vertices", f"polygons[{i}]"
            )
        pts = []
        for j, pt in enumerate(poly):
            if (
                not isinstance(pt, list)
                or len(pt) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pt)
            ):
                return None, _error(
                    400, "vertex must be a [row, col] number pair", f"polygons[{i}][{j}]"
                )
            r, c = float(pt[0]), float(pt[1])
            if not (-1.0 <= r <= h and -1.0 <= c <= w):
                return None, _error(
                    400,
                    f"vertex ({r}, {c}) outside frame bounds "
                    f"[-1, {h}] x [-1, {w}]",
                    f"polygons[{i}][{j}]",
                )
            pts.append((r, c))
        polys.append(tuple(pts))
    return tuple(polys), None


def create_app(store: AnnotationStore, frames_dir: str | Path) -> FastAPI:
    frames_dir = Path(frames_dir)
    app = FastAPI(title="contrail annotation service")

    @app.get("/tasks")
    def list_tasks() -> list[dict]:
        return [t.to_json() for t in store.list_tasks()]

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        try:
            task = store.get_task(task_id)
        except UnknownTaskError:
            return _error(404, f"unknown task {task_id!r}")
        body = task.to_json()
        body["frame_urls"] = [f"/frames/{fid}.png" for fid in task.frame_ids]
        return body

    @app.get("/frames/{frame_id}.png")
    def get_frame(frame_id: str):
        if not _FRAME_ID_RE.match(frame_id):
            return _error(404, f"unknown frame {frame_id!r}")
        path = frames_dir / f"{frame_id}.png"
        if not path.exists():
            return _error(404, f"unknown frame {frame_id!r}")
        return FileResponse(path, media_type="image/png")

    @app.post("/tasks/{task_id}/annotations")
    async def submit(task_id: str, request: Request):
        try:
            task = store.get_task(task_id)
        except UnknownTaskError:
            return _error(404, f"unknown task {task_id!r}")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")
        labeler_id = body.get("labeler_id")
        if not isinstance(labeler_id, str) or not labeler_id:
            return _error(400, "labeler_id must be a nonempty string", "labeler_id")
        polys, err = _validate_polygons(body.get("polygons"), task.frame_size)
        if err is not None:
            return err
        ann = store.submit(task_id, labeler_id, polys)
        mask = rasterize_polygons(polys, task.frame_size)
        report = guideline_check(mask)
        return {
            "task_id": task_id,
            "labeler_id": labeler_id,
            "version": ann.version,
            "guidelines": report.to_json(),
        }

    @app.get("/tasks/{task_id}/annotations")
    def get_annotations(
        task_id: str,
        labeler: str | None = Query(default=None),
        history: bool = Query(default=False),
    ):
        try:
            anns = store.annotations(task_id, labeler_id=labeler, history=history)
        except UnknownTaskError:
            return _error(404, f"unknown task {task_id!r}")
        return {"task_id": task_id, "annotations": [a.to_json() for a in anns]}

    @app.post("/tasks/{task_id}/aggregate")
    async def aggregate(task_id: str, request: Request):
        try:
            task = store.get_task(task_id)
        except UnknownTaskError:
            return _error(404, f"unknown task {task_id!r}")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")
        quorum = body.get("quorum", 3)
        if not isinstance(quorum, int) or isinstance(quorum, bool) or quorum < 1:
            return _error(400, "quorum must be a positive integer", "quorum")
        latest = store.annotations(task_id)
        if not latest:
            return _error(400, f"task {task_id!r} has no annotations to aggregate")
        if quorum > len(latest):
            return _error(
                400,
                f"quorum {quorum} exceeds the {len(latest)} labelers with submissions",
                "quorum",
            )
        # Labelers draw on the full frame; aggregation happens on the
        # centrally cropped patch when the task uses the standard frame.
        crop = task.frame_size == (281, 281)
        masks = []
        cropped_out = []
        for ann in latest:
            full = rasterize_polygons(ann.polygons, task.frame_size)
            masks.append((center_crop(full) if crop else full).astype(bool))
            if not crop:
                continue
            for p_index, poly in enumerate(ann.polygons):
                single = rasterize_polygons([poly], task.frame_size)
                if single.any() and not center_crop(single).any():
                    cropped_out.append(
                        {"labeler_id": ann.labeler_id, "polygon_index": p_index}
                    )
        agg = aggregate_labels(
            masks, QuorumSpec(n_labelers=len(masks), quorum=quorum)
        )
        rows, cols = np.nonzero(agg)
        return {
            "task_id": task_id,
            "shape": [int(agg.shape[0]), int(agg.shape[1])],
            "labelers": len(masks),
            "quorum": quorum,
            "count": int(rows.size),
            "positives": [[int(r), int(c)] for r, c in zip(rows, cols)],
            "cropped_out_polygons": cropped_out,
        }

    return app
