/** Response shapes of the control service's /v1 API, mirrored verbatim. */

export interface DeviceDoc {
  kind: "GPU" | "NVME" | "NIC";
  model: string;
  memory_gib: number;
  hbm: boolean;
  capacity_tb: number;
  rate_gbps: number;
}

export interface DrawerDoc {
  id: string;
  slots: (string | null)[];
  host_ports: string[];
}

export interface ChassisDoc {
  id: string;
  port_rate_gbps: number;
  host_ports: string[];
  drawers: DrawerDoc[];
}

export interface HostDoc {
  id: string;
  cpu_sockets: number;
  cores_per_socket: number;
  memory_gib: number;
  local_gpus: string[];
  local_nvme: string | null;
  adapters: string[];
}

export interface LinkClassDoc {
  protocol: string;
  bandwidth_gbps: number;
  latency_us: number;
}

export interface TopologyDoc {
  schema: number;
  devices: Record<string, DeviceDoc>;
  hosts: HostDoc[];
  chassis: ChassisDoc[];
  link_classes: Record<string, LinkClassDoc>;
}

export interface OwnershipRow {
  device: string;
  host: string;
  user: string;
}

export interface ConfigDoc {
  schema: number;
  modes: Record<string, string>;
  ownership: OwnershipRow[];
  link_overrides?: Record<string, Partial<LinkClassDoc>>;
}

export interface ViolationRow {
  drawer: string;
  rule: string;
  detail: string;
}

export interface CompositionResponse {
  revision: number;
  document: ConfigDoc;
  violations: ViolationRow[];
}

export interface MutationResponse {
  revision: number;
  document: ConfigDoc;
}

export interface WorkloadRow {
  key: string;
  name: string;
  domain: string;
  dataset: string;
  parameter_count: number;
  depth: number;
  per_gpu_batch: number;
  epochs: number;
  sequence_length: number | null;
}

export interface StrategyDoc {
  parallelism: string;
  precision: string;
  sharded: boolean;
}

export interface StepDoc {
  load_s: number;
  compute_s: number;
  comm_s: number;
  total_s: number;
  bytes_crossing_falcon_ports: number;
}

export interface SimulateResponse {
  workload: string;
  label: string | null;
  strategy: StrategyDoc;
  n_gpus: number;
  step: StepDoc;
  steps_per_epoch: number;
  epoch_s: number;
  total_s: number;
  pcie_traffic_gbps: number;
  gpu_util: number;
  run_id: string | null;
  vs_local: { label: string; total_pct: number } | null;
}

export interface PrincipalDoc {
  user: string;
  role: "ADMIN" | "USER";
}

export interface HealthResponse {
  status: string;
  version: string;
  revision: number;
  events: number;
  principal?: PrincipalDoc;
}

export interface ErrorEnvelope {
  error: { code: string; message: string };
}
