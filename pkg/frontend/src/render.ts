import { canvasSize, NODE_H, NODE_W, placeNodes, PlacedNode } from "./layout";
import {
  Diagnostic,
  NodeStatus,
  PerNodeEntry,
  ReportPayload,
  validatePayload,
} from "./types";

export const STATUS_COLORS: Record<NodeStatus, string> = {
  formalize_error: "#c62828",
  formalized_no_tactics: "#e8962e",
  proved: "#2e7d32",
};

// contour color carries the status; fill stays neutral so the three states
// survive screenshots and color blindness better than full-fill would
export const STYLE_TEXT = `
.pf-banner { background: #fdecea; border: 1px solid #c62828; color: #5f1412;
  padding: 8px 12px; margin: 0 0 12px; border-radius: 4px; }
.pf-banner ul { margin: 4px 0 0; padding-left: 20px; }
.pf-metrics { margin: 0 0 10px; font-size: 14px; color: #333; }
.pf-metrics span { margin-right: 18px; }
.pf-toolbar { margin: 0 0 12px; }
.pf-search { padding: 4px 8px; font-size: 14px; width: 220px; }
.pf-notice { margin-left: 10px; font-size: 13px; color: #8a6d00; }
.pf-canvas { position: relative; overflow: auto; }
.pf-edges { position: absolute; inset: 0; pointer-events: none; }
.pf-node { position: absolute; box-sizing: border-box; width: ${NODE_W}px;
  height: ${NODE_H}px; border: 3px solid #999; border-radius: 8px;
  background: #fff; cursor: pointer; padding: 3px 8px; font-size: 13px; }
.pf-node .pf-kind { color: #777; font-size: 11px; }
.pf-node.status-formalize_error { border-color: ${STATUS_COLORS.formalize_error}; }
.pf-node.status-formalized_no_tactics { border-color: ${STATUS_COLORS.formalized_no_tactics}; }
.pf-node.status-proved { border-color: ${STATUS_COLORS.proved}; }
.pf-node.status-missing { border-style: dashed; }
.pf-node.dim { opacity: 0.25; }
.pf-node.hit { box-shadow: 0 0 0 3px #64b5f6; }
.pf-node.selected { background: #eef6ff; }
.pf-panel { border: 1px solid #ccc; border-radius: 4px; padding: 10px 14px;
  margin-top: 14px; font-size: 14px; }
.pf-panel h3 { margin: 0 0 8px; }
.pf-panel pre { background: #f6f6f6; padding: 8px; overflow-x: auto; }
.pf-panel .pf-diag { color: #8a1c1c; }
`;

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderBanner(doc: Document, errors: string[]): HTMLElement {
  const banner = el(doc, "div", "pf-banner");
  banner.setAttribute("role", "alert");
  banner.appendChild(el(doc, "strong", undefined, "Report payload problems:"));
  const list = el(doc, "ul");
  for (const message of errors) {
    list.appendChild(el(doc, "li", undefined, message));
  }
  banner.appendChild(list);
  return banner;
}

function renderMetrics(doc: Document, payload: ReportPayload): HTMLElement {
  const box = el(doc, "div", "pf-metrics");
  const m = payload.metrics;
  const cells: Array<[string, string]> = [
    ["mode", m.mode],
    ["proofscore", Number.isNaN(m.proofscore) ? "?" : m.proofscore.toFixed(3)],
    [
      "formalizer",
      Number.isNaN(m.formalizer_accuracy) ? "?" : m.formalizer_accuracy.toFixed(3),
    ],
    ["tactics", Number.isNaN(m.tactic_accuracy) ? "?" : m.tactic_accuracy.toFixed(3)],
  ];
  for (const [label, value] of cells) {
    box.appendChild(el(doc, "span", undefined, `${label}: ${value}`));
  }
  return box;
}

function edgePath(doc: Document, from: PlacedNode, to: PlacedNode): SVGPathElement {
  const x1 = from.x + NODE_W;
  const y1 = from.y + NODE_H / 2;
  const x2 = to.x;
  const y2 = to.y + NODE_H / 2;
  const bend = (x2 - x1) / 2;
  const path = doc.createElementNS(SVG_NS, "path");
  path.setAttribute(
    "d",
    `M ${x1} ${y1} C ${x1 + bend} ${y1}, ${x2 - bend} ${y2}, ${x2} ${y2}`,
  );
  path.setAttribute("fill", "none");
  path.setAttribute("stroke", "#888");
  path.setAttribute("stroke-width", "1.5");
  path.setAttribute("marker-end", "url(#pf-arrow)");
  path.setAttribute("data-edge", `${from.node.id}->${to.node.id}`);
  return path;
}

function renderEdges(doc: Document, placed: PlacedNode[]): SVGSVGElement {
  const byId = new Map(placed.map((p) => [p.node.id, p]));
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "pf-edges");
  const size = canvasSize(placed);
  svg.setAttribute("width", String(size.width));
  svg.setAttribute("height", String(size.height));

  const defs = doc.createElementNS(SVG_NS, "defs");
  const marker = doc.createElementNS(SVG_NS, "marker");
  marker.setAttribute("id", "pf-arrow");
  marker.setAttribute("viewBox", "0 0 10 10");
  marker.setAttribute("refX", "9");
  marker.setAttribute("refY", "5");
  marker.setAttribute("markerWidth", "7");
  marker.setAttribute("markerHeight", "7");
  marker.setAttribute("orient", "auto-start-reverse");
  const tip = doc.createElementNS(SVG_NS, "path");
  tip.setAttribute("d", "M 0 0 L 10 5 L 0 10 z");
  tip.setAttribute("fill", "#888");
  marker.appendChild(tip);
  defs.appendChild(marker);
  svg.appendChild(defs);

  // edge per dep, exactly the deps relation, nothing synthesized
  for (const target of placed) {
    for (const dep of target.node.deps) {
      const source = byId.get(dep);
      if (source) svg.appendChild(edgePath(doc, source, target));
    }
  }
  return svg;
}

function diagnosticLine(d: Diagnostic): string {
  return `L${d.line}:${d.col} ${d.severity}: ${d.message}`;
}

function fillPanel(
  doc: Document,
  panel: HTMLElement,
  nodeId: string,
  kind: string,
  entry: PerNodeEntry | undefined,
): void {
  panel.textContent = "";
  panel.appendChild(el(doc, "h3", undefined, `${nodeId} (${kind})`));
  if (!entry) {
    panel.appendChild(
      el(doc, "p", "pf-diag", "No per-node record in the payload for this node."),
    );
    return;
  }
  const facts = el(doc, "p");
  facts.textContent =
    `status: ${entry.status}   f: ${entry.f.toFixed(2)}   ` +
    `error source: ${entry.error_source || "(none)"}`;
  panel.appendChild(facts);

  panel.appendChild(el(doc, "h4", undefined, "Statement (NL)"));
  panel.appendChild(el(doc, "p", "pf-nl", entry.nl_self_contained));
  panel.appendChild(el(doc, "h4", undefined, "Formal statement"));
  panel.appendChild(el(doc, "pre", "pf-formal", entry.statement_source || "(empty)"));
  panel.appendChild(el(doc, "h4", undefined, "Proof"));
  panel.appendChild(el(doc, "pre", "pf-proof", entry.proof_source ?? "(no proof)"));
  if (entry.diagnostics.length > 0) {
    panel.appendChild(el(doc, "h4", undefined, "Diagnostics"));
    const list = el(doc, "ul");
    for (const d of entry.diagnostics) {
      list.appendChild(el(doc, "li", "pf-diag", diagnosticLine(d)));
    }
    panel.appendChild(list);
  }
}

function matches(query: string, node: { id: string }, entry?: PerNodeEntry): boolean {
  const needle = query.toLowerCase();
  if (node.id.toLowerCase().includes(needle)) return true;
  return entry !== undefined && entry.nl_self_contained.toLowerCase().includes(needle);
}

function wireSearch(
  input: HTMLInputElement,
  notice: HTMLElement,
  placed: PlacedNode[],
  nodeEls: Map<string, HTMLElement>,
  perNode: Record<string, PerNodeEntry>,
): void {
  const apply = () => {
    const query = input.value.trim();
    let hits = 0;
    for (const p of placed) {
      const nodeEl = nodeEls.get(p.node.id)!;
      nodeEl.classList.remove("dim", "hit");
      if (query === "") continue;
      if (matches(query, p.node, perNode[p.node.id])) {
        nodeEl.classList.add("hit");
        hits += 1;
      } else {
        nodeEl.classList.add("dim");
      }
    }
    notice.textContent = query !== "" && hits === 0 ? "no matches" : "";
  };
  input.addEventListener("input", apply);
}

export function renderReport(root: HTMLElement, data: unknown): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  const style = doc.createElement("style");
  style.textContent = STYLE_TEXT;
  root.appendChild(style);

  const { payload, errors } = validatePayload(data);
  if (errors.length > 0) {
    root.appendChild(renderBanner(doc, errors));
  }
  if (!payload) {
    root.appendChild(
      el(doc, "p", "pf-empty", "The embedded payload could not be rendered."),
    );
    return;
  }

  root.appendChild(renderMetrics(doc, payload));

  const toolbar = el(doc, "div", "pf-toolbar");
  const input = el(doc, "input", "pf-search") as HTMLInputElement;
  input.type = "search";
  input.placeholder = "filter by id or statement";
  const notice = el(doc, "span", "pf-notice");
  toolbar.appendChild(input);
  toolbar.appendChild(notice);
  root.appendChild(toolbar);

  const placed = placeNodes(payload.graph.nodes);
  const canvas = el(doc, "div", "pf-canvas");
  const size = canvasSize(placed);
  canvas.style.width = `${size.width}px`;
  canvas.style.height = `${size.height}px`;
  canvas.appendChild(renderEdges(doc, placed));

  const panel = el(doc, "div", "pf-panel");
  panel.appendChild(el(doc, "p", undefined, "Click a node to inspect it."));

  const nodeEls = new Map<string, HTMLElement>();
  for (const p of placed) {
    const entry = payload.per_node[p.node.id];
    const status = entry ? entry.status : "missing";
    const nodeEl = el(doc, "div", `pf-node status-${status}`);
    nodeEl.setAttribute("data-id", p.node.id);
    nodeEl.style.left = `${p.x}px`;
    nodeEl.style.top = `${p.y}px`;
    nodeEl.appendChild(el(doc, "div", "pf-id", p.node.id));
    nodeEl.appendChild(el(doc, "div", "pf-kind", p.node.kind));
    nodeEl.addEventListener("click", () => {
      for (const other of nodeEls.values()) other.classList.remove("selected");
      nodeEl.classList.add("selected");
      fillPanel(doc, panel, p.node.id, p.node.kind, payload.per_node[p.node.id]);
    });
    nodeEls.set(p.node.id, nodeEl);
    canvas.appendChild(nodeEl);
  }
  root.appendChild(canvas);
  root.appendChild(panel);

  wireSearch(input, notice, placed, nodeEls, payload.per_node);
}
