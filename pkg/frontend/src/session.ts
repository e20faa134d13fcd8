/** DOM-free witness session store.
 *
 * Holds the candidate grid, the history strip (mirror of the accepted
 * set), and the status banner. All mutations flow through the protocol
 * client; the store carries no randomness of its own. At most one
 * selection request is in flight per session, selections can only
 * reference ids from the current grid, and a 409 conflict resolves by
 * refreshing the authoritative view instead of retrying.
 */

import {
  CandidatePayload,
  ProtocolClient,
  ProtocolError,
  ResultPayload,
} from "./protocol.js";

export type Phase =
  | "idle"
  | "connecting"
  | "awaiting_selection"
  | "converged"
  | "exhausted"
  | "error";

export interface Tile {
  id: string;
  pngB64: string;
  selected: boolean;
}

export interface HistoryFace {
  id: string;
  pngB64: string;
}

export interface ViewState {
  phase: Phase;
  sessionId: string | null;
  t: number;
  grid: Tile[];
  history: HistoryFace[];
  result: ResultPayload | null;
  banner: string | null;
  busy: boolean;
}

type Listener = (state: ViewState) => void;

function tiles(candidates: CandidatePayload[]): Tile[] {
  return candidates.map((c) => ({ id: c.id, pngB64: c.png_b64, selected: false }));
}

export class WitnessSession {
  readonly state: ViewState = {
    phase: "idle",
    sessionId: null,
    t: 0,
    grid: [],
    history: [],
    result: null,
    banner: null,
    busy: false,
  };

  private listeners: Listener[] = [];
  private lastConfig: Record<string, number> | undefined;
  private lastSeed: number | undefined;

  constructor(private readonly client: ProtocolClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  selectedIds(): string[] {
    return this.state.grid.filter((t) => t.selected).map((t) => t.id);
  }

  /** Toggle a tile; ids outside the current grid are ignored. */
  toggle(id: string): void {
    const tile = this.state.grid.find((t) => t.id === id);
    if (!tile) return;
    tile.selected = !tile.selected;
    this.notify();
  }

  async start(config?: Record<string, number>, seed?: number): Promise<void> {
    this.lastConfig = config;
    this.lastSeed = seed;
    this.state.phase = "connecting";
    this.state.banner = null;
    this.notify();
    try {
      const reply = await this.client.createSession(config, seed);
      this.state.sessionId = reply.session_id;
      this.state.t = 0;
      this.state.history = [];
      this.state.result = null;
      this.state.grid = tiles(reply.candidates);
      this.state.phase = "awaiting_selection";
    } catch (err) {
      this.state.phase = "error";
      this.state.banner = `cannot reach the session service (${String(
        (err as Error).message,
      )}) — retry?`;
    }
    this.notify();
  }

  /** Retry the last start() after a connection failure. */
  async retry(): Promise<void> {
    await this.start(this.lastConfig, this.lastSeed);
  }

  /** Attach to an existing session (page reload) and rebuild the view. */
  async attach(sessionId: string): Promise<void> {
    this.state.sessionId = sessionId;
    await this.refresh();
  }

  /** Pull the authoritative view; used on reload and after conflicts. */
  async refresh(): Promise<void> {
    if (this.state.sessionId === null) return;
    try {
      const view = await this.client.getSession(this.state.sessionId);
      this.state.t = view.t;
      this.state.grid = tiles(view.candidates);
      this.state.history = view.accepted.map((c) => ({
        id: c.id,
        pngB64: c.png_b64,
      }));
      this.state.result = view.result ?? null;
      this.state.phase = view.status as Phase;
      this.state.banner = null;
    } catch (err) {
      this.state.phase = "error";
      this.state.banner = `lost the session (${String((err as Error).message)})`;
    }
    this.notify();
  }

  /**
   * Send the current selection; `finalId` declares "this is the face".
   * Ignored while another selection is in flight. On conflict (stale or
   * double submission) the view is refreshed, never re-iterated.
   */
  async submit(finalId?: string): Promise<void> {
    if (this.state.busy || this.state.sessionId === null) return;
    if (this.state.phase !== "awaiting_selection") return;
    if (finalId !== undefined && !this.state.grid.some((t) => t.id === finalId)) {
      // the match gesture must land on a tile of the current grid
      return;
    }
    const accepted = this.selectedIds();
    const acceptedTiles = this.state.grid.filter((t) => t.selected);
    // the first selection (empty accepted-set mirror) forms A(0) at t=0;
    // every later selection applies one iteration
    const wasInitial = this.state.history.length === 0;
    this.state.busy = true;
    this.notify();
    try {
      const reply = await this.client.submitSelection(
        this.state.sessionId,
        accepted,
        finalId,
      );
      this.state.history = this.state.history.concat(
        acceptedTiles.map((t) => ({ id: t.id, pngB64: t.pngB64 })),
      );
      if (!wasInitial) this.state.t += 1;
      if (reply.status === "awaiting_selection") {
        this.state.grid = tiles(reply.candidates ?? []);
        this.state.phase = "awaiting_selection";
      } else {
        this.state.grid = [];
        this.state.phase = reply.status as Phase;
        this.state.result = reply.result ?? null;
      }
      this.state.banner = null;
      this.state.busy = false;
      this.notify();
    } catch (err) {
      this.state.busy = false;
      if (err instanceof ProtocolError && err.status === 409) {
        await this.refresh();
        return;
      }
      this.state.banner = `selection failed (${String((err as Error).message)})`;
      this.notify();
    }
  }
}
