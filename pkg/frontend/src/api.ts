/** Typed client for the engine's /v1 HTTP API.
 *
 * The console is read-only apart from run submission: every method here
 * issues GET except `submitRun`, which is the single POST.
 */

export interface Transition {
  from: string;
  to: string;
  at: number;
}

export interface RunStatus {
  run_id: string;
  query: string;
  query_id: string;
  stage: string;
  timings: Record<string, number>;
  failure_reason: string | null;
  transitions: Transition[];
  warnings: string[];
}

export interface VerdictView {
  decision: "approve" | "reject";
  rationale: string;
  script_digest: string;
  rewrite: { source: string; revision: number } | null;
}

export interface DebateRoundView {
  round_index: number;
  critic_instance_id: string;
  input_script_digest: string;
  verdict: VerdictView;
  execution_error: string | null;
}

export interface TranscriptView {
  rounds: DebateRoundView[];
  outcome: "agreed" | "exhausted";
  final_script: { source: string; revision: number };
}

export interface ArtifactInfo {
  name: string;
  kind: "image" | "table" | "manifest";
  byte_size: number;
  digest: string;
  file: string;
}

export interface FindingView {
  statement: string;
  evidence_ref: string;
}

export interface ReportView {
  narrative: string;
  findings: FindingView[];
  recommendations: string[];
  generated_at: number;
}

export interface DatasetColumn {
  name: string;
  kind: "numeric" | "categorical" | "temporal" | "text";
}

export interface DatasetTable {
  table: string;
  columns: DatasetColumn[];
  row_count: number;
}

export interface DatasetRef {
  url_or_path: string;
  schema: DatasetTable[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    throw new ApiError(response.status, `${response.status} ${response.statusText}`);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  /** The console's only write. */
  async submitRun(query: string, datasetRef: DatasetRef, queryId?: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/v1/runs`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ query, dataset_ref: datasetRef, query_id: queryId }),
    });
    const body = await asJson<{ run_id: string }>(response);
    return body.run_id;
  }

  async getRun(runId: string): Promise<RunStatus> {
    return asJson(await this.fetchImpl(`${this.baseUrl}/v1/runs/${runId}`));
  }

  async getTranscript(runId: string): Promise<TranscriptView> {
    return asJson(await this.fetchImpl(`${this.baseUrl}/v1/runs/${runId}/transcript`));
  }

  async getArtifacts(runId: string): Promise<ArtifactInfo[]> {
    const body = await asJson<{ artifacts: ArtifactInfo[] }>(
      await this.fetchImpl(`${this.baseUrl}/v1/runs/${runId}/artifacts`),
    );
    return body.artifacts;
  }

  async getReport(runId: string): Promise<ReportView> {
    return asJson(await this.fetchImpl(`${this.baseUrl}/v1/runs/${runId}/report`));
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/v1/health`);
      return response.ok;
    } catch {
      return false;
    }
  }

  artifactUrl(runId: string, name: string): string {
    return `${this.baseUrl}/v1/runs/${runId}/artifacts/${name}`;
  }

  async fetchArtifact(runId: string, name: string): Promise<Response> {
    return this.fetchImpl(this.artifactUrl(runId, name));
  }
}
