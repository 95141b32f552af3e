/** Browser wiring for the labeling editor.
 *
 * Keyboard: left/right arrows scrub frames, spacebar toggles the polygon
 * overlay, Enter closes the in-progress polygon, Escape cancels it.
 * Mouse: click adds a vertex, wheel zooms about the cursor, shift-drag pans.
 * Vertices are stored in image coordinates, so zooming and panning never
 * move them; see viewport.ts for why the mapping is exactly invertible.
 */

import { AnnotationClient, ServiceRejection } from './client.js';
import {
  addVertex,
  cancelPolygon,
  closePolygon,
  deletePolygon,
  type EditorState,
  frameCount,
  initialState,
  loadTask,
  restoreFromAnnotation,
  stepFrame,
  submitBlockedReason,
  buildSubmitPayload,
  toggleOverlay,
} from './editor.js';
import {
  canvasToImage,
  defaultViewport,
  imageToCanvas,
  panBy,
  type Viewport,
  zoomStep,
} from './viewport.js';
import type { GuidelineReport, TaskDetail } from './types.js';

const GUIDELINES = [
  'At least 10 pixels long',
  'At least 3 times longer than wide',
  'Appears suddenly or moves with the wind',
  'Visible in at least two frames',
];

interface AppElements {
  canvas: HTMLCanvasElement;
  taskSelect: HTMLSelectElement;
  labelerInput: HTMLInputElement;
  frameLabel: HTMLElement;
  status: HTMLElement;
  guidelineList: HTMLElement;
  submitButton: HTMLButtonElement;
  restoreButton: HTMLButtonElement;
}

export class LabelerApp {
  private state: EditorState = initialState('');
  private viewport: Viewport = defaultViewport();
  private frames: (HTMLImageElement | null)[] = [];
  private dragOrigin: { x: number; y: number } | null = null;

  constructor(
    private readonly client: AnnotationClient,
    private readonly el: AppElements,
  ) {
    this.bind();
    this.renderGuidelines(null);
  }

  async start(): Promise<void> {
    const tasks = await this.client.listTasks();
    this.el.taskSelect.replaceChildren(
      ...tasks.map((t) => new Option(t.task_id, t.task_id)),
    );
    if (tasks.length) {
      await this.openTask(tasks[0].task_id);
    }
  }

  private async openTask(taskId: string): Promise<void> {
    const task = await this.client.getTask(taskId);
    this.state = loadTask(this.state, task);
    this.viewport = defaultViewport();
    this.frames = task.frame_ids.map(() => null);
    task.frame_ids.forEach((_, i) => {
      const img = new Image();
      img.onload = () => {
        this.frames[i] = img;
        this.render();
      };
      img.src = this.client.frameUrl(task, i);
    });
    this.setStatus(`loaded ${taskId}`);
    this.render();
  }

  private bind(): void {
    const { canvas } = this.el;
    canvas.addEventListener('click', (ev) => this.onClick(ev));
    canvas.addEventListener('wheel', (ev) => this.onWheel(ev), { passive: false });
    canvas.addEventListener('mousedown', (ev) => {
      if (ev.shiftKey) this.dragOrigin = { x: ev.offsetX, y: ev.offsetY };
    });
    canvas.addEventListener('mousemove', (ev) => {
      if (!this.dragOrigin) return;
      this.viewport = panBy(
        this.viewport,
        ev.offsetX - this.dragOrigin.x,
        ev.offsetY - this.dragOrigin.y,
      );
      this.dragOrigin = { x: ev.offsetX, y: ev.offsetY };
      this.render();
    });
    window.addEventListener('mouseup', () => {
      this.dragOrigin = null;
    });
    window.addEventListener('keydown', (ev) => this.onKey(ev));
    this.el.taskSelect.addEventListener('change', () => {
      void this.openTask(this.el.taskSelect.value);
    });
    this.el.labelerInput.addEventListener('input', () => {
      this.state = { ...this.state, labelerId: this.el.labelerInput.value };
    });
    this.el.submitButton.addEventListener('click', () => void this.submit());
    this.el.restoreButton.addEventListener('click', () => void this.restore());
  }

  private onClick(ev: MouseEvent): void {
    if (this.dragOrigin || ev.shiftKey) return;
    // offsetX/offsetY are integer canvas pixels, so the image point is a
    // dyadic rational that survives the round trip exactly.
    const vertex = canvasToImage(this.viewport, ev.offsetX, ev.offsetY);
    this.state = addVertex(this.state, vertex);
    this.render();
  }

  private onWheel(ev: WheelEvent): void {
    ev.preventDefault();
    this.viewport = zoomStep(this.viewport, ev.deltaY < 0 ? 1 : -1, ev.offsetX, ev.offsetY);
    this.render();
  }

  private onKey(ev: KeyboardEvent): void {
    if (ev.target instanceof HTMLInputElement) return;
    switch (ev.key) {
      case 'ArrowLeft':
        this.state = stepFrame(this.state, -1);
        break;
      case 'ArrowRight':
        this.state = stepFrame(this.state, 1);
        break;
      case ' ':
        ev.preventDefault();
        this.state = toggleOverlay(this.state);
        break;
      case 'Enter':
        this.state = closePolygon(this.state);
        break;
      case 'Escape':
        this.state = cancelPolygon(this.state);
        break;
      case 'Backspace':
        this.state = deletePolygon(this.state, this.state.committed.length - 1);
        break;
      default:
        return;
    }
    this.render();
  }

  private async submit(): Promise<void> {
    const blocked = submitBlockedReason(this.state);
    if (blocked) {
      this.setStatus(blocked);
      return;
    }
    const task = this.state.task as TaskDetail;
    try {
      const result = await this.client.submit(task.task_id, buildSubmitPayload(this.state));
      this.setStatus(`submitted version ${result.version}`);
      this.renderGuidelines(result.guidelines);
    } catch (err) {
      // Rejections keep the drawing intact so the labeler can fix the
      // offending polygon instead of redrawing everything.
      if (err instanceof ServiceRejection) {
        this.setStatus(err.field ? `${err.detail} at ${err.field}` : err.detail);
      } else {
        this.setStatus(String(err));
      }
    }
  }

  private async restore(): Promise<void> {
    if (!this.state.task || !this.state.labelerId) return;
    const anns = await this.client.fetchAnnotations(this.state.task.task_id, {
      labeler: this.state.labelerId,
    });
    if (!anns.length) {
      this.setStatus('no saved annotation for this labeler');
      return;
    }
    this.state = restoreFromAnnotation(this.state, anns[0]);
    this.setStatus(`restored version ${anns[0].version}`);
    this.render();
  }

  private setStatus(text: string): void {
    this.el.status.textContent = text;
  }

  private renderGuidelines(report: GuidelineReport | null): void {
    const items = GUIDELINES.map((text, i) => {
      const li = document.createElement('li');
      li.textContent = text;
      if (report && i < 2) {
        // Only the two geometric checks are machine-verified.
        const ok = i === 0 ? report.components.every((c) => c.size_ok)
          : report.components.every((c) => c.aspect_ok);
        li.textContent += ok ? ' [ok]' : ' [check]';
      }
      return li;
    });
    this.el.guidelineList.replaceChildren(...items);
  }

  private render(): void {
    const ctx = this.el.canvas.getContext('2d');
    if (!ctx) return;
    ctx.clearRect(0, 0, this.el.canvas.width, this.el.canvas.height);
    ctx.imageSmoothingEnabled = false;
    const frame = this.frames[this.state.activeFrame] ?? null;
    if (frame) {
      const { x, y } = imageToCanvas(this.viewport, [0, 0]);
      ctx.drawImage(frame, x, y, frame.width * this.viewport.zoom, frame.height * this.viewport.zoom);
    }
    const n = frameCount(this.state);
    this.el.frameLabel.textContent = `frame ${this.state.activeFrame + 1} / ${n}`;
    if (this.state.overlayVisible) {
      // Committed polygons render on every frame so the labeler can judge
      // motion against the advected background.
      ctx.strokeStyle = 'rgba(255, 0, 255, 0.9)';
      ctx.fillStyle = 'rgba(255, 0, 255, 0.25)';
      for (const poly of this.state.committed) {
        this.tracePolygon(ctx, poly, true);
      }
      if (this.state.inProgress.length) {
        ctx.strokeStyle = 'rgba(255, 255, 0, 0.9)';
        this.tracePolygon(ctx, this.state.inProgress, false);
      }
    }
  }

  private tracePolygon(
    ctx: CanvasRenderingContext2D,
    poly: readonly (readonly [number, number])[],
    close: boolean,
  ): void {
    if (!poly.length) return;
    ctx.beginPath();
    poly.forEach(([row, col], i) => {
      const { x, y } = imageToCanvas(this.viewport, [row, col]);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    if (close) {
      ctx.closePath();
      ctx.fill();
    }
    ctx.stroke();
  }
}

export function mount(baseUrl: string, doc: Document): LabelerApp {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  };
  const app = new LabelerApp(new AnnotationClient(baseUrl), {
    canvas: byId<HTMLCanvasElement>('editor-canvas'),
    taskSelect: byId<HTMLSelectElement>('task-select'),
    labelerInput: byId<HTMLInputElement>('labeler-id'),
    frameLabel: byId('frame-label'),
    status: byId('status-line'),
    guidelineList: byId('guideline-list'),
    submitButton: byId<HTMLButtonElement>('submit-button'),
    restoreButton: byId<HTMLButtonElement>('restore-button'),
  });
  void app.start();
  return app;
}
