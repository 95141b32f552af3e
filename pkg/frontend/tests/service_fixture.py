"""Seed an annotation store with two tasks and serve it for the UI tests.

Usage: python3 service_fixture.py PORT

Runs until killed. The store lives in a fresh temporary directory, so every
test run starts from a clean slate.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np
import uvicorn
from PIL import Image

from contrailkit.annotate.service import create_app
from contrailkit.annotate.store import AnnotationStore, LabelingTask


def seed(root: Path) -> tuple[Path, Path]:
    store_dir = root / "store"
    frames_dir = root / "frames"
    frames_dir.mkdir(parents=True)
    store = AnnotationStore(store_dir)

    rng = np.random.default_rng(42)

    def write_frames(prefix: str, n: int, size: int) -> tuple[str, ...]:
        ids = tuple(f"{prefix}-f{i}" for i in range(n))
        for fid in ids:
            pixels = rng.integers(0, 255, size=(size, size), dtype=np.uint8)
            Image.fromarray(pixels, mode="L").save(frames_dir / f"{fid}.png")
        return ids

    store.add_task(
        LabelingTask(
            task_id="ui-task-32",
            frame_ids=write_frames("small", 8, 32),
            target_index=4,
            frame_size=(32, 32),
        )
    )
    store.add_task(
        LabelingTask(
            task_id="ui-task-std",
            frame_ids=write_frames("std", 8, 281),
            target_index=4,
            frame_size=(281, 281),
        )
    )
    return store_dir, frames_dir


def main() -> None:
    port = int(sys.argv[1])
    with tempfile.TemporaryDirectory(prefix="labeler-fixture-") as tmp:
        store_dir, frames_dir = seed(Path(tmp))
        app = create_app(AnnotationStore(store_dir), frames_dir)
        uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


if __name__ == "__main__":
    main()
