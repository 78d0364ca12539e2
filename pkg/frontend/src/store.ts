import { ApiClient, ApiError } from "./api.js";
import type { CompositionAction } from "./api.js";
import type {
  CompositionResponse,
  MutationResponse,
  PrincipalDoc,
  TopologyDoc,
  WorkloadRow,
} from "./types.js";

export type Listener = () => void;

/**
 * Client-side session state fed exclusively by the /v1 API.
 *
 * Composition state advances only from poll responses: a successful mutation
 * records the server-confirmed revision it produced, and the view keeps
 * showing the old state (flagged stale) until the next poll catches up.
 */
export class Store {
  topology: TopologyDoc | null = null;
  composition: CompositionResponse | null = null;
  workloads: WorkloadRow[] = [];
  principal: PrincipalDoc | null = null;
  connection: "ok" | "lost" = "ok";
  /** Revision confirmed by the server but not yet seen by a poll. */
  pendingRevision: number | null = null;

  private listeners: Listener[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(readonly api: ApiClient) {}

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  /** True while a confirmed mutation has not yet been observed by polling. */
  get stale(): boolean {
    const seen = this.composition?.revision ?? -1;
    return this.pendingRevision !== null && this.pendingRevision > seen;
  }

  /**
   * Validate the token against /v1/health and load the initial documents.
   * Throws ApiError(FORBIDDEN) when the service does not echo a principal.
   */
  async connect(token: string): Promise<PrincipalDoc> {
    this.api.token = token;
    const health = await this.api.health();
    if (!health.principal) {
      throw new ApiError(403, "FORBIDDEN", "unknown or missing token");
    }
    this.principal = health.principal;
    const [topo, workloads, composition] = await Promise.all([
      this.api.topology(),
      this.api.workloads(),
      this.api.composition(),
    ]);
    this.topology = topo.topology;
    this.workloads = workloads.workloads;
    this.composition = composition;
    this.connection = "ok";
    this.emit();
    return this.principal;
  }

  /** One poll: refresh the composition, tracking connection health. */
  async tick(): Promise<void> {
    try {
      const composition = await this.api.composition();
      const recovered = this.connection === "lost";
      this.composition = composition;
      this.connection = "ok";
      if (this.pendingRevision !== null && composition.revision >= this.pendingRevision) {
        this.pendingRevision = null;
      }
      if (recovered && this.topology === null) {
        this.topology = (await this.api.topology()).topology;
      }
    } catch {
      this.connection = "lost";
    }
    this.emit();
  }

  start(intervalMs = 1000): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /**
   * Apply a composition mutation. The response's revision is recorded as
   * pending; the rendered composition changes only once a poll returns it.
   */
  async mutate(action: CompositionAction): Promise<MutationResponse> {
    const res = await this.api.mutate(action);
    this.pendingRevision = res.revision;
    this.emit();
    return res;
  }
}
