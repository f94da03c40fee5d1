import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { validatePayload } from "../src/types";

// vitest runs with the package root as cwd; import.meta.url is not a file
// URL under the jsdom environment, so resolve fixtures relative to cwd
const FIXTURE = join(process.cwd(), "tests", "fixtures", "dummy6_payload.json");

function loadFixture(): any {
  return JSON.parse(readFileSync(FIXTURE, "utf8"));
}

describe("validatePayload", () => {
  it("accepts the bundled run payload without errors", () => {
    const { payload, errors } = validatePayload(loadFixture());
    expect(errors).toEqual([]);
    expect(payload).not.toBeNull();
    expect(payload!.graph.nodes).toHaveLength(8);
    expect(Object.keys(payload!.per_node)).toHaveLength(8);
    expect(payload!.metrics.mode).toBe("dag");
    expect(payload!.metrics.proofscore).toBe(1.0);
  });

  it("rejects non-object payloads outright", () => {
    for (const junk of [null, 42, "hi", [1, 2]]) {
      const { payload, errors } = validatePayload(junk);
      expect(payload).toBeNull();
      expect(errors).toEqual(["payload is not a JSON object"]);
    }
  });

  it("rejects a payload whose graph has no node list", () => {
    const { payload, errors } = validatePayload({ graph: {}, per_node: {} });
    expect(payload).toBeNull();
    expect(errors).toEqual(["payload.graph.nodes is missing"]);
  });

  it("rejects a graph where every node is malformed", () => {
    const data = { graph: { nodes: [{ id: "" }, "junk"] }, per_node: {} };
    const { payload, errors } = validatePayload(data);
    expect(payload).toBeNull();
    expect(errors).toContain("graph has no usable nodes");
    expect(errors).toContain("graph.nodes[0] has no id");
    expect(errors).toContain("graph.nodes[1] is not an object");
  });

  it("names every node that lacks a per_node entry but still renders", () => {
    const data = loadFixture();
    delete data.per_node.L3;
    delete data.per_node.TS;
    const { payload, errors } = validatePayload(data);
    expect(payload).not.toBeNull();
    expect(errors).toContain("per_node entries missing for: L3, TS");
    expect(payload!.graph.nodes).toHaveLength(8);
    expect(payload!.per_node.L3).toBeUndefined();
    expect(payload!.per_node.L2).toBeDefined();
  });

  it("flags unknown statuses and out-of-range scores per entry", () => {
    const data = loadFixture();
    data.per_node.L1.status = "exploded";
    data.per_node.L2.f = 1.5;
    const { payload, errors } = validatePayload(data);
    expect(payload).not.toBeNull();
    expect(errors).toContain('per_node["L1"] has unknown status "exploded"');
    expect(errors).toContain('per_node["L2"].f must be a number in [0, 1]');
    expect(payload!.per_node.L1).toBeUndefined();
    expect(payload!.per_node.L2).toBeUndefined();
    expect(payload!.per_node.L3).toBeDefined();
  });

  it("substitutes placeholders for missing metrics", () => {
    const data = loadFixture();
    delete data.metrics;
    const { payload, errors } = validatePayload(data);
    expect(errors).toEqual([]);
    expect(payload!.metrics.mode).toBe("?");
    expect(Number.isNaN(payload!.metrics.proofscore)).toBe(true);
  });
});
