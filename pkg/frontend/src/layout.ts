import type { GraphNode } from "./types";

// Layered left-to-right layout. Rank is the longest dependency chain ending
// at the node; ties inside a rank order by plain string id so the same
// payload always lands on the same pixels.

export interface PlacedNode {
  node: GraphNode;
  rank: number;
  row: number;
  x: number;
  y: number;
}

export const NODE_W = 120;
export const NODE_H = 44;
export const COL_GAP = 72;
export const ROW_GAP = 28;

export function topologicalRanks(nodes: GraphNode[]): Map<string, number> {
  const ranks = new Map<string, number>();
  // valid graphs only reference earlier nodes, so one forward pass settles
  // every rank; unknown or forward deps simply do not raise the rank
  for (const node of nodes) {
    let rank = 0;
    for (const dep of node.deps) {
      const depRank = ranks.get(dep);
      if (depRank !== undefined && depRank + 1 > rank) rank = depRank + 1;
    }
    ranks.set(node.id, rank);
  }
  return ranks;
}

function byId(a: GraphNode, b: GraphNode): number {
  return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
}

export function placeNodes(nodes: GraphNode[]): PlacedNode[] {
  const ranks = topologicalRanks(nodes);
  const buckets = new Map<number, GraphNode[]>();
  for (const node of nodes) {
    const rank = ranks.get(node.id) ?? 0;
    const bucket = buckets.get(rank);
    if (bucket) bucket.push(node);
    else buckets.set(rank, [node]);
  }
  const placed: PlacedNode[] = [];
  for (const rank of [...buckets.keys()].sort((a, b) => a - b)) {
    const bucket = buckets.get(rank)!;
    bucket.sort(byId);
    bucket.forEach((node, row) => {
      placed.push({
        node,
        rank,
        row,
        x: rank * (NODE_W + COL_GAP),
        y: row * (NODE_H + ROW_GAP),
      });
    });
  }
  return placed;
}

export function canvasSize(placed: PlacedNode[]): { width: number; height: number } {
  let width = NODE_W;
  let height = NODE_H;
  for (const p of placed) {
    width = Math.max(width, p.x + NODE_W);
    height = Math.max(height, p.y + NODE_H);
  }
  return { width: width + 16, height: height + 16 };
}
