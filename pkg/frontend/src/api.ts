import type {
  CatalogDoc,
  ChatEventDoc,
  CharacterPick,
  FieldIssue,
  SceneListEntry,
  SessionHandle,
  SessionState,
  TurnCompleteDoc,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly issues: FieldIssue[];

  constructor(status: number, message: string, issues: FieldIssue[] = []) {
    super(message);
    this.status = status;
    this.issues = issues;
  }
}

/** One parsed server-sent event. */
export interface ServerEvent {
  event: string;
  data: string;
}

/**
 * Incremental SSE parser. Feed raw text chunks in any split; completed
 * events come out in order. The server frames every event as
 * `event: <name>\ndata: <json>\n\n`.
 */
export class SseParser {
  private buffer = "";

  push(chunk: string): ServerEvent[] {
    this.buffer += chunk;
    const events: ServerEvent[] = [];
    let boundary = this.buffer.indexOf("\n\n");
    while (boundary >= 0) {
      const block = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const parsed = parseBlock(block);
      if (parsed) {
        events.push(parsed);
      }
      boundary = this.buffer.indexOf("\n\n");
    }
    return events;
  }
}

function parseBlock(block: string): ServerEvent | null {
  let event = "message";
  const dataLines: string[] = [];
  for (const line of block.split("\n")) {
    if (line.startsWith("event:")) {
      event = line.slice(6).trim();
    } else if (line.startsWith("data:")) {
      dataLines.push(line.slice(5).trimStart());
    }
  }
  if (dataLines.length === 0) {
    return null;
  }
  return { event, data: dataLines.join("\n") };
}

export interface TurnHandlers {
  onEvent: (event: ChatEventDoc) => void;
  onServerError: (message: string) => void;
  onTurnComplete: (summary: TurnCompleteDoc) => void;
}

async function throwApiError(response: Response): Promise<never> {
  let detail: unknown;
  try {
    detail = ((await response.json()) as { detail?: unknown }).detail;
  } catch {
    detail = undefined;
  }
  if (Array.isArray(detail)) {
    const issues = detail.filter(
      (d): d is FieldIssue =>
        typeof d === "object" && d !== null && "path" in d && "message" in d,
    );
    const message = issues.map((i) => `${i.path}: ${i.message}`).join("; ");
    throw new ApiError(response.status, message || `HTTP ${response.status}`, issues);
  }
  const message = typeof detail === "string" ? detail : `HTTP ${response.status}`;
  throw new ApiError(response.status, message);
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn: FetchLike = fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) {
      await throwApiError(response);
    }
    return (await response.json()) as T;
  }

  listScenes(): Promise<SceneListEntry[]> {
    return this.getJson("/scenes");
  }

  getCatalog(): Promise<CatalogDoc> {
    return this.getJson("/catalog");
  }

  async createSession(
    scene: string,
    players: CharacterPick[],
    profile = "FG-all",
    seed = 0,
  ): Promise<SessionHandle> {
    const response = await this.fetchFn(this.baseUrl + "/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ scene, players, profile, seed }),
    });
    if (!response.ok) {
      await throwApiError(response);
    }
    return (await response.json()) as SessionHandle;
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.getJson(`/sessions/${sessionId}/state`);
  }

  async getTranscript(sessionId: string): Promise<string> {
    const response = await this.fetchFn(
      this.baseUrl + `/sessions/${sessionId}/transcript`,
    );
    if (!response.ok) {
      await throwApiError(response);
    }
    return response.text();
  }

  /**
   * Send one player message and consume the turn's event stream in order.
   * Resolves once the stream ends; rejects on transport failure or a
   * non-2xx status (409 when the session has already ended).
   */
  async sendMessage(
    sessionId: string,
    player: string,
    text: string,
    handlers: TurnHandlers,
  ): Promise<void> {
    const response = await this.fetchFn(
      this.baseUrl + `/sessions/${sessionId}/message`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ player, text }),
      },
    );
    if (!response.ok) {
      await throwApiError(response);
    }
    if (!response.body) {
      throw new ApiError(0, "response had no body to stream");
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        break;
      }
      for (const item of parser.push(decoder.decode(value, { stream: true }))) {
        dispatchServerEvent(item, handlers);
      }
    }
  }
}

function dispatchServerEvent(item: ServerEvent, handlers: TurnHandlers): void {
  switch (item.event) {
    case "chat":
      handlers.onEvent(JSON.parse(item.data) as ChatEventDoc);
      break;
    case "error":
      handlers.onServerError(
        (JSON.parse(item.data) as { message: string }).message,
      );
      break;
    case "turn_complete":
      handlers.onTurnComplete(JSON.parse(item.data) as TurnCompleteDoc);
      break;
    default:
      // Unknown event names are ignored so the server can add kinds later.
      break;
  }
}
