import type { AnnotationRecord, Polygon, SubmitPayload, TaskDetail, Vertex } from './types.js';

/**
 * Labeling editor state. Pure data plus pure transitions; the DOM layer
 * renders it and never mutates it directly.
 *
 * Polygons annotate the task's target frame but stay rendered on every
 * frame while scrubbing, so the committed list is independent of
 * activeFrame. Vertices are stored in image coordinates; zoom and pan
 * never touch them.
 */
export interface EditorState {
  task: TaskDetail | null;
  labelerId: string;
  activeFrame: number;
  inProgress: Vertex[];
  committed: Polygon[];
  overlayVisible: boolean;
}

export function initialState(labelerId: string): EditorState {
  return {
    task: null,
    labelerId,
    activeFrame: 0,
    inProgress: [],
    committed: [],
    overlayVisible: false,
  };
}

export function frameCount(state: EditorState): number {
  return state.task ? state.task.frame_ids.length : 8;
}

/** Load a task: drop any drawing in flight and land on the target frame. */
export function loadTask(state: EditorState, task: TaskDetail): EditorState {
  return {
    ...state,
    task,
    activeFrame: task.target_index,
    inProgress: [],
    committed: [],
  };
}

/** Switch the displayed frame. Out-of-range indices are ignored. */
export function scrub(state: EditorState, frameIndex: number): EditorState {
  if (!Number.isInteger(frameIndex)) return state;
  if (frameIndex < 0 || frameIndex >= frameCount(state)) return state;
  return { ...state, activeFrame: frameIndex };
}

/** Keyboard scrubbing: a step past either end is ignored, not clamped. */
export function stepFrame(state: EditorState, delta: number): EditorState {
  return scrub(state, state.activeFrame + delta);
}

export function toggleOverlay(state: EditorState): EditorState {
  return { ...state, overlayVisible: !state.overlayVisible };
}

export function addVertex(state: EditorState, vertex: Vertex): EditorState {
  return { ...state, inProgress: [...state.inProgress, vertex] };
}

/**
 * Close the open polygon. With fewer than 3 vertices there is nothing
 * closable and the state is returned unchanged.
 */
export function closePolygon(state: EditorState): EditorState {
  if (state.inProgress.length < 3) return state;
  return {
    ...state,
    committed: [...state.committed, state.inProgress],
    inProgress: [],
  };
}

export function cancelPolygon(state: EditorState): EditorState {
  return { ...state, inProgress: [] };
}

export function deletePolygon(state: EditorState, index: number): EditorState {
  if (index < 0 || index >= state.committed.length) return state;
  return { ...state, committed: state.committed.filter((_, i) => i !== index) };
}

/**
 * Why submission can't happen right now, or null when it can. An open
 * polygon blocks submission; an empty committed list does not.
 */
export function submitBlockedReason(state: EditorState): string | null {
  if (!state.labelerId) return 'set a labeler identity before submitting';
  if (!state.task) return 'no task loaded';
  if (state.inProgress.length > 0) {
    return 'close or cancel the open polygon before submitting';
  }
  return null;
}

export function canSubmit(state: EditorState): boolean {
  return submitBlockedReason(state) === null;
}

/** The exact wire payload for POST /tasks/{id}/annotations. */
export function buildSubmitPayload(state: EditorState): SubmitPayload {
  return {
    labeler_id: state.labelerId,
    polygons: state.committed.map((poly) => poly.map(([r, c]) => [r, c])),
  };
}

/** Restore committed polygons from a previously stored annotation. */
export function restoreFromAnnotation(
  state: EditorState,
  annotation: AnnotationRecord,
): EditorState {
  return {
    ...state,
    inProgress: [],
    committed: annotation.polygons.map((poly) => poly.map(([r, c]) => [r, c] as Vertex)),
  };
}
