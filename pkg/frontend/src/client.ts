import type {
  AggregateResponse,
  AnnotationRecord,
  SubmitPayload,
  SubmitResponse,
  TaskDetail,
  TaskSummary,
} from './types.js';

/** A 4xx from the service, carrying the offending field path if any. */
export class ServiceRejection extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly field?: string,
  ) {
    super(field ? `${detail} (${field})` : detail);
    this.name = 'ServiceRejection';
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let detail = response.statusText;
  let field: string | undefined;
  try {
    const body = (await response.json()) as { detail?: string; field?: string };
    if (body.detail) detail = body.detail;
    field = body.field;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceRejection(response.status, detail, field);
}

export class AnnotationClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  async listTasks(): Promise<TaskSummary[]> {
    return parseOrThrow(await fetch(this.url('/tasks')));
  }

  async getTask(taskId: string): Promise<TaskDetail> {
    return parseOrThrow(await fetch(this.url(`/tasks/${encodeURIComponent(taskId)}`)));
  }

  frameUrl(task: TaskDetail, frameIndex: number): string {
    return this.url(task.frame_urls[frameIndex]);
  }

  async submit(taskId: string, payload: SubmitPayload): Promise<SubmitResponse> {
    const response = await fetch(this.url(`/tasks/${encodeURIComponent(taskId)}/annotations`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    });
    return parseOrThrow(response);
  }

  async fetchAnnotations(
    taskId: string,
    options: { labeler?: string; history?: boolean } = {},
  ): Promise<AnnotationRecord[]> {
    const params = new URLSearchParams();
    if (options.labeler !== undefined) params.set('labeler', options.labeler);
    if (options.history) params.set('history', 'true');
    const qs = params.toString();
    const query = qs ? `?${qs}` : '';
    const body = await parseOrThrow<{ annotations: AnnotationRecord[] }>(
      await fetch(this.url(`/tasks/${encodeURIComponent(taskId)}/annotations${query}`)),
    );
    return body.annotations;
  }

  async aggregate(taskId: string, quorum: number): Promise<AggregateResponse> {
    const response = await fetch(this.url(`/tasks/${encodeURIComponent(taskId)}/aggregate`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ quorum }),
    });
    return parseOrThrow(response);
  }
}
