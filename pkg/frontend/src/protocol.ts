/** Typed client for the facesearch session protocol (protocol_version 1). */

export const PROTOCOL_VERSION = 1;

export interface CandidatePayload {
  id: string;
  png_b64: string;
}

export interface ResultPayload {
  id: string;
  png_b64: string;
  iterations: number;
}

export interface CreateResponse {
  protocol_version: number;
  session_id: string;
  status: string;
  candidates: CandidatePayload[];
}

export interface SelectionResponse {
  protocol_version: number;
  status: string;
  candidates?: CandidatePayload[];
  result?: ResultPayload;
}

export interface TraceEntry {
  t: number;
  accepted_count: number;
}

export interface SessionView {
  protocol_version: number;
  status: string;
  t: number;
  accepted_count: number;
  trace: TraceEntry[];
  candidates: CandidatePayload[];
  accepted: CandidatePayload[];
  result?: ResultPayload;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ProtocolError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

function checkCandidates(value: unknown, where: string): CandidatePayload[] {
  if (!Array.isArray(value)) {
    throw new ProtocolError(0, `${where}: candidates is not an array`);
  }
  for (const item of value) {
    const c = item as CandidatePayload;
    if (typeof c?.id !== "string" || typeof c?.png_b64 !== "string") {
      throw new ProtocolError(0, `${where}: malformed candidate entry`);
    }
  }
  return value as CandidatePayload[];
}

function checkVersion(body: { protocol_version?: unknown }, where: string): void {
  if (body.protocol_version !== PROTOCOL_VERSION) {
    throw new ProtocolError(
      0,
      `${where}: unsupported protocol_version ${String(body.protocol_version)}`,
    );
  }
}

export class ProtocolClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async call<T extends { protocol_version?: number }>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as T & { error?: string };
    if (!response.ok) {
      throw new ProtocolError(
        response.status,
        payload?.error ?? `HTTP ${response.status}`,
      );
    }
    checkVersion(payload, path);
    return payload;
  }

  async createSession(
    config?: Record<string, number>,
    seed?: number,
  ): Promise<CreateResponse> {
    const body: Record<string, unknown> = {
      protocol_version: PROTOCOL_VERSION,
    };
    if (config !== undefined) body.config = config;
    if (seed !== undefined) body.seed = seed;
    const reply = await this.call<CreateResponse>("POST", "/sessions", body);
    if (typeof reply.session_id !== "string") {
      throw new ProtocolError(0, "create-session: missing session_id");
    }
    reply.candidates = checkCandidates(reply.candidates, "create-session");
    return reply;
  }

  async submitSelection(
    sessionId: string,
    acceptedIds: string[],
    finalId?: string,
  ): Promise<SelectionResponse> {
    const body: Record<string, unknown> = {
      protocol_version: PROTOCOL_VERSION,
      accepted_ids: acceptedIds,
    };
    if (finalId !== undefined) body.final_id = finalId;
    const reply = await this.call<SelectionResponse>(
      "POST",
      `/sessions/${sessionId}/selection`,
      body,
    );
    if (reply.candidates !== undefined) {
      reply.candidates = checkCandidates(reply.candidates, "selection");
    }
    return reply;
  }

  async getSession(sessionId: string): Promise<SessionView> {
    const reply = await this.call<SessionView>("GET", `/sessions/${sessionId}`);
    reply.candidates = checkCandidates(reply.candidates ?? [], "get-session");
    reply.accepted = checkCandidates(reply.accepted ?? [], "get-session");
    return reply;
  }
}
