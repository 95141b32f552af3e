// Wire types for the annotation service. Field names and shapes mirror the
// service's JSON exactly; all coordinates are [row, col] floats in image
// space.

export type Vertex = [number, number];
export type Polygon = Vertex[];

export interface TaskSummary {
  task_id: string;
  frame_ids: string[];
  target_index: number;
  frame_size: [number, number];
}

export interface TaskDetail extends TaskSummary {
  frame_urls: string[];
}

export interface AnnotationRecord {
  task_id: string;
  labeler_id: string;
  polygons: Polygon[];
  version: number;
  submitted_at: number;
}

export interface ComponentCheck {
  component: number;
  n_pixels: number;
  size_ok: boolean;
  aspect: number;
  aspect_ok: boolean;
  ok: boolean;
}

export interface GuidelineReport {
  components: ComponentCheck[];
  all_ok: boolean;
}

export interface SubmitPayload {
  labeler_id: string;
  polygons: number[][][];
}

export interface SubmitResponse {
  task_id: string;
  labeler_id: string;
  version: number;
  guidelines: GuidelineReport;
}

export interface AggregateResponse {
  task_id: string;
  shape: [number, number];
  labelers: number;
  quorum: number;
  count: number;
  positives: [number, number][];
  cropped_out_polygons: { labeler_id: string; polygon_index: number }[];
}
