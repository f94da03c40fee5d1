// Payload schema mirrored from the embedded JSON contract. The page owns no
// other data source: everything rendered comes through validatePayload.

export type NodeStatus = "formalize_error" | "formalized_no_tactics" | "proved";

export const NODE_STATUSES: readonly NodeStatus[] = [
  "formalize_error",
  "formalized_no_tactics",
  "proved",
];

export interface GraphNode {
  id: string;
  kind: string;
  nl_original: string;
  nl_self_contained: string;
  deps: string[];
}

export interface PayloadGraph {
  theorem_nl: string;
  proof_nl: string;
  nodes: GraphNode[];
}

export interface Diagnostic {
  severity: string;
  line: number;
  col: number;
  message: string;
}

export interface PerNodeEntry {
  status: NodeStatus;
  f: number;
  error_source: string;
  nl_self_contained: string;
  statement_source: string;
  proof_source: string | null;
  diagnostics: Diagnostic[];
}

export interface Metrics {
  mode: string;
  proofscore: number;
  formalizer_accuracy: number;
  tactic_accuracy: number;
}

export interface ReportPayload {
  graph: PayloadGraph;
  per_node: Record<string, PerNodeEntry>;
  metrics: Metrics;
}

export interface ValidationResult {
  payload: ReportPayload | null;
  errors: string[];
}

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((v) => typeof v === "string");
}

function checkNode(raw: unknown, index: number, errors: string[]): raw is GraphNode {
  if (!isRecord(raw)) {
    errors.push(`graph.nodes[${index}] is not an object`);
    return false;
  }
  if (typeof raw.id !== "string" || raw.id === "") {
    errors.push(`graph.nodes[${index}] has no id`);
    return false;
  }
  if (typeof raw.kind !== "string" || !isStringArray(raw.deps)) {
    errors.push(`node ${String(raw.id)}: kind or deps malformed`);
    return false;
  }
  return true;
}

function checkEntry(id: string, raw: unknown, errors: string[]): raw is PerNodeEntry {
  if (!isRecord(raw)) {
    errors.push(`per_node["${id}"] is not an object`);
    return false;
  }
  if (!NODE_STATUSES.includes(raw.status as NodeStatus)) {
    errors.push(`per_node["${id}"] has unknown status ${JSON.stringify(raw.status)}`);
    return false;
  }
  if (typeof raw.f !== "number" || !(raw.f >= 0 && raw.f <= 1)) {
    errors.push(`per_node["${id}"].f must be a number in [0, 1]`);
    return false;
  }
  if (!Array.isArray(raw.diagnostics)) {
    errors.push(`per_node["${id}"].diagnostics must be an array`);
    return false;
  }
  return true;
}

// Collects every problem instead of stopping at the first: the banner shows
// them all. payload comes back null only when the graph itself is unusable;
// missing per_node coverage is reported but still rendered.
export function validatePayload(data: unknown): ValidationResult {
  const errors: string[] = [];
  if (!isRecord(data)) {
    return { payload: null, errors: ["payload is not a JSON object"] };
  }
  const graph = data.graph;
  if (!isRecord(graph) || !Array.isArray(graph.nodes)) {
    return { payload: null, errors: ["payload.graph.nodes is missing"] };
  }
  const nodes: GraphNode[] = [];
  graph.nodes.forEach((raw, index) => {
    if (checkNode(raw, index, errors)) nodes.push(raw);
  });
  if (nodes.length === 0) {
    errors.push("graph has no usable nodes");
    return { payload: null, errors };
  }

  const perNodeRaw = isRecord(data.per_node) ? data.per_node : {};
  if (!isRecord(data.per_node)) {
    errors.push("payload.per_node is missing");
  }
  const perNode: Record<string, PerNodeEntry> = {};
  const missing: string[] = [];
  for (const node of nodes) {
    const entry = perNodeRaw[node.id];
    if (entry === undefined) {
      missing.push(node.id);
    } else if (checkEntry(node.id, entry, errors)) {
      perNode[node.id] = entry;
    }
  }
  if (missing.length > 0) {
    errors.push(`per_node entries missing for: ${missing.join(", ")}`);
  }

  const metricsRaw = isRecord(data.metrics) ? data.metrics : {};
  const metrics: Metrics = {
    mode: typeof metricsRaw.mode === "string" ? metricsRaw.mode : "?",
    proofscore: typeof metricsRaw.proofscore === "number" ? metricsRaw.proofscore : NaN,
    formalizer_accuracy:
      typeof metricsRaw.formalizer_accuracy === "number" ? metricsRaw.formalizer_accuracy : NaN,
    tactic_accuracy:
      typeof metricsRaw.tactic_accuracy === "number" ? metricsRaw.tactic_accuracy : NaN,
  };

  return {
    payload: {
      graph: {
        theorem_nl: typeof graph.theorem_nl === "string" ? graph.theorem_nl : "",
        proof_nl: typeof graph.proof_nl === "string" ? graph.proof_nl : "",
        nodes,
      },
      per_node: perNode,
      metrics,
    },
    errors,
  };
}
