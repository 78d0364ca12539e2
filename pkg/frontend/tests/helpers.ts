import { vi } from "vitest";
import type {
  CompositionResponse,
  ConfigDoc,
  DeviceDoc,
  MutationResponse,
  OwnershipRow,
  PrincipalDoc,
  SimulateResponse,
  TopologyDoc,
  WorkloadRow,
} from "../src/types.js";

export const FALCON_GPUS = [
  "falcon-gpu-1-0",
  "falcon-gpu-1-1",
  "falcon-gpu-1-2",
  "falcon-gpu-1-3",
  "falcon-gpu-2-0",
  "falcon-gpu-2-1",
  "falcon-gpu-2-2",
  "falcon-gpu-2-3",
] as const;

export const LOCAL_GPUS = [
  "local-gpu-0",
  "local-gpu-1",
  "local-gpu-2",
  "local-gpu-3",
  "local-gpu-4",
  "local-gpu-5",
  "local-gpu-6",
  "local-gpu-7",
] as const;

function gpu(): DeviceDoc {
  return {
    kind: "GPU",
    model: "Tesla V100 SXM2",
    memory_gib: 16.0,
    hbm: true,
    capacity_tb: 0.0,
    rate_gbps: 0.0,
  };
}

function nvme(tb: number): DeviceDoc {
  return { kind: "NVME", model: "", memory_gib: 0.0, hbm: false, capacity_tb: tb, rate_gbps: 0.0 };
}

/** The reference plant exactly as GET /v1/topology serves it. */
export function referenceTopology(): TopologyDoc {
  const devices: Record<string, DeviceDoc> = {};
  for (const id of [...FALCON_GPUS, ...LOCAL_GPUS]) devices[id] = gpu();
  devices["nvme-falcon"] = nvme(4.0);
  devices["nvme-local"] = nvme(2.0);
  return {
    schema: 1,
    devices,
    hosts: [
      {
        id: "host-1",
        cpu_sockets: 2,
        cores_per_socket: 20,
        memory_gib: 756.0,
        local_gpus: [...LOCAL_GPUS],
        local_nvme: "nvme-local",
        adapters: ["H1", "H2"],
      },
    ],
    chassis: [
      {
        id: "falcon-1",
        port_rate_gbps: 400,
        host_ports: ["H1", "H2", "H3", "H4"],
        drawers: [
          {
            id: "drawer-1",
            slots: [
              "falcon-gpu-1-0",
              "falcon-gpu-1-1",
              "falcon-gpu-1-2",
              "falcon-gpu-1-3",
              null,
              null,
              null,
              null,
            ],
            host_ports: ["H1"],
          },
          {
            id: "drawer-2",
            slots: [
              "falcon-gpu-2-0",
              "falcon-gpu-2-1",
              "falcon-gpu-2-2",
              "falcon-gpu-2-3",
              "nvme-falcon",
              null,
              null,
              null,
            ],
            host_ports: ["H2"],
          },
        ],
      },
    ],
    link_classes: {
      "F-F": { protocol: "PCIE-GEN4", bandwidth_gbps: 24.47, latency_us: 2.08 },
      "F-L": { protocol: "PCIE-GEN4", bandwidth_gbps: 19.64, latency_us: 2.66 },
      "HOST-NVME-FALCON": { protocol: "PCIE-GEN4", bandwidth_gbps: 3.0, latency_us: 3.96 },
      "HOST-NVME-LOCAL": { protocol: "PCIE-GEN3", bandwidth_gbps: 3.0, latency_us: 1.3 },
      "L-L": { protocol: "NVLINK", bandwidth_gbps: 72.37, latency_us: 1.85 },
    },
  };
}

export function configDoc(ownership: OwnershipRow[]): ConfigDoc {
  return {
    schema: 1,
    modes: { "drawer-1": "ADVANCED", "drawer-2": "ADVANCED" },
    ownership: [...ownership].sort((a, b) => a.device.localeCompare(b.device)),
  };
}

export function compositionResponse(
  revision: number,
  ownership: OwnershipRow[] = [],
): CompositionResponse {
  return { revision, document: configDoc(ownership), violations: [] };
}

export function falconOwnership(user = "operator"): OwnershipRow[] {
  return FALCON_GPUS.map((device) => ({ device, host: "host-1", user }));
}

export const WORKLOADS: WorkloadRow[] = [
  {
    key: "mobilenetv2",
    name: "MobileNetV2",
    domain: "Computer Vision",
    dataset: "ImageNet",
    parameter_count: 3400000,
    depth: 53,
    per_gpu_batch: 8,
    epochs: 10,
    sequence_length: null,
  },
  {
    key: "bert-l",
    name: "BERT-L",
    domain: "NLP (Q&A)",
    dataset: "SQuAD v1.1",
    parameter_count: 340000000,
    depth: 24,
    per_gpu_batch: 6,
    epochs: 2,
    sequence_length: 384,
  },
];

/**
 * Byte-for-byte copies of live service responses for
 * POST /v1/simulate {workload: bert-l, strategy: DDP+FP16_MIXED, record_steps: 0}
 * against the falconGPUs and localGPUs labels.
 */
export const SIMULATE_FALCON: SimulateResponse = {
  workload: "bert-l",
  label: "falconGPUs",
  strategy: { parallelism: "DDP", precision: "FP16_MIXED", sharded: false },
  n_gpus: 8,
  step: {
    load_s: 0.000916,
    compute_s: 0.027730822398784032,
    comm_s: 0.06066511136456212,
    total_s: 0.08839593376334615,
    bytes_crossing_falcon_ports: 4760000000.0,
  },
  steps_per_epoch: 1825,
  epoch_s: 161.32257911810672,
  total_s: 322.64515823621343,
  pcie_traffic_gbps: 53.848630783668014,
  gpu_util: 0.31371151610915804,
  run_id: null,
  vs_local: { label: "localGPUs", total_pct: 99.99080036956141 },
};

export const SIMULATE_LOCAL: SimulateResponse = {
  workload: "bert-l",
  label: "localGPUs",
  strategy: { parallelism: "DDP", precision: "FP16_MIXED", sharded: false },
  n_gpus: 8,
  step: {
    load_s: 0.000916,
    compute_s: 0.027730822398784032,
    comm_s: 0.01646917760121597,
    total_s: 0.0442,
    bytes_crossing_falcon_ports: 0.0,
  },
  steps_per_epoch: 1825,
  epoch_s: 80.665,
  total_s: 161.33,
  pcie_traffic_gbps: 0.0,
  gpu_util: 0.6273941719181907,
  run_id: null,
  vs_local: { label: "localGPUs", total_pct: 0.0 },
};

const TOKENS: Record<string, PrincipalDoc> = {
  "admin-token": { user: "admin", role: "ADMIN" },
  "user-token": { user: "alice", role: "USER" },
};

interface RecordedCall {
  method: string;
  path: string;
  headers: Record<string, string>;
  body: unknown;
}

type ErrorSpec = { status: number; code: string; message: string };

/**
 * In-memory stand-in for the control service behind `fetch`.
 *
 * Mirrors the /v1 surface the UI touches: token auth (Bearer or X-Auth-Token),
 * open health with principal echo, reads, mutations, simulate, and the
 * admin-only event export.
 */
export class MockService {
  topology = referenceTopology();
  workloads = WORKLOADS;
  composition = compositionResponse(0);
  /** Served for POST /v1/composition unless `mutationError` is set. */
  mutationResponse: MutationResponse | null = null;
  mutationError: ErrorSpec | null = null;
  /** Served for POST /v1/simulate unless `simulateError` is set. */
  simulateResponse: SimulateResponse = SIMULATE_FALCON;
  simulateError: ErrorSpec | null = null;
  eventsText = "[1] 2026-08-23T00:00:00+00:00 admin apply falconGPUs -> ok";
  /** When true every request rejects, as a dropped connection would. */
  offline = false;
  calls: RecordedCall[] = [];

  readonly fetch = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const method = init?.method ?? "GET";
    const headers = Object.fromEntries(
      Object.entries((init?.headers as Record<string, string>) ?? {}),
    );
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.calls.push({ method, path, headers, body });

    if (this.offline) throw new TypeError("fetch failed");

    const principal = this.principalOf(headers);
    const deny = () => this.error(403, "FORBIDDEN", "unknown or missing token");

    if (path === "/v1/health") {
      return this.json({
        status: "ok",
        version: "0.1.0",
        revision: this.composition.revision,
        events: 1,
        ...(principal ? { principal } : {}),
      });
    }
    if (!principal) return deny();

    if (path === "/v1/topology") return this.json({ topology: this.topology });
    if (path === "/v1/workloads") return this.json({ workloads: this.workloads });
    if (path === "/v1/composition" && method === "GET") return this.json(this.composition);
    if (path === "/v1/composition" && method === "POST") {
      if (this.mutationError) {
        const { status, code, message } = this.mutationError;
        return this.error(status, code, message);
      }
      const res =
        this.mutationResponse ??
        ({
          revision: this.composition.revision + 1,
          document: this.composition.document,
        } satisfies MutationResponse);
      return this.json(res);
    }
    if (path === "/v1/simulate") {
      if (this.simulateError) {
        const { status, code, message } = this.simulateError;
        return this.error(status, code, message);
      }
      return this.json(this.simulateResponse);
    }
    if (path.startsWith("/v1/events")) {
      if (principal.role !== "ADMIN") {
        return this.error(403, "FORBIDDEN", "event export is admin-only");
      }
      return new Response(this.eventsText, { status: 200 });
    }
    return this.error(404, "NOT_FOUND", `no route ${path}`);
  });

  private principalOf(headers: Record<string, string>): PrincipalDoc | null {
    const auth = headers["Authorization"] ?? headers["authorization"] ?? "";
    let token = auth.toLowerCase().startsWith("bearer ") ? auth.slice(7).trim() : "";
    token = token || headers["X-Auth-Token"] || headers["x-auth-token"] || "";
    return TOKENS[token] ?? null;
  }

  private json(payload: unknown, status = 200): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private error(status: number, code: string, message: string): Response {
    return this.json({ error: { code, message } }, status);
  }
}

/** Route global fetch into a fresh mock service. */
export function installMockService(): MockService {
  const mock = new MockService();
  vi.stubGlobal("fetch", mock.fetch);
  return mock;
}

/** Flush pending microtasks (resolved fetch promises) under fake timers. */
export async function flush(): Promise<void> {
  for (let i = 0; i < 50; i++) await Promise.resolve();
}
