import { readFileSync } from "node:fs";
import { join } from "node:path";
import { afterEach, describe, expect, it } from "vitest";
import { renderReport, STATUS_COLORS, STYLE_TEXT } from "../src/render";

const FIXTURE = join(process.cwd(), "tests", "fixtures", "dummy6_payload.json");

const EXPECTED_EDGES = [
  "TC1->L1",
  "L1->L2",
  "L1->L4",
  "L2->L3",
  "L3->L6",
  "L4->L5",
  "L5->L6",
  "L6->TS",
];

function loadFixture(): any {
  return JSON.parse(readFileSync(FIXTURE, "utf8"));
}

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

function render(data: unknown): HTMLElement {
  const root = mount();
  renderReport(root, data);
  return root;
}

function nodeEl(root: HTMLElement, id: string): HTMLElement {
  const found = root.querySelector(`.pf-node[data-id="${id}"]`);
  expect(found, `node ${id} should be rendered`).not.toBeNull();
  return found as HTMLElement;
}

function fire(target: HTMLElement, type: string): void {
  target.dispatchEvent(new window.Event(type, { bubbles: true }));
}

afterEach(() => {
  document.body.innerHTML = "";
});

describe("renderReport on the bundled run payload", () => {
  it("renders all eight nodes with the proved contour class", () => {
    const root = render(loadFixture());
    const nodes = root.querySelectorAll(".pf-node");
    expect(nodes).toHaveLength(8);
    for (const node of nodes) {
      expect(node.classList.contains("status-proved")).toBe(true);
    }
    expect(root.querySelector(".pf-banner")).toBeNull();
  });

  it("draws exactly the dependency edges, no more and no fewer", () => {
    const root = render(loadFixture());
    const edges = [...root.querySelectorAll("[data-edge]")].map((e) =>
      e.getAttribute("data-edge"),
    );
    expect(edges.slice().sort()).toEqual(EXPECTED_EDGES.slice().sort());
  });

  it("shows the run metrics strip", () => {
    const root = render(loadFixture());
    const text = root.querySelector(".pf-metrics")!.textContent!;
    expect(text).toContain("mode: dag");
    expect(text).toContain("proofscore: 1.000");
    expect(text).toContain("formalizer: 1.000");
    expect(text).toContain("tactics: 1.000");
  });

  it("fills the inspector panel when a node is clicked", () => {
    const root = render(loadFixture());
    fire(nodeEl(root, "L3"), "click");
    const panel = root.querySelector(".pf-panel")!;
    expect(panel.querySelector("h3")!.textContent).toBe("L3 (L)");
    expect(panel.textContent).toContain("status: proved");
    expect(panel.querySelector(".pf-formal")!.textContent).toContain("lemma L3");
    expect(panel.querySelector(".pf-proof")!.textContent).toContain(":= by trivial");
    expect(nodeEl(root, "L3").classList.contains("selected")).toBe(true);

    fire(nodeEl(root, "TC1"), "click");
    expect(panel.querySelector("h3")!.textContent).toBe("TC1 (TC)");
    expect(nodeEl(root, "L3").classList.contains("selected")).toBe(false);
  });

  it("search highlights the match and dims the rest, then restores", () => {
    const root = render(loadFixture());
    const input = root.querySelector(".pf-search") as HTMLInputElement;

    input.value = "L3";
    fire(input, "input");
    expect(nodeEl(root, "L3").classList.contains("hit")).toBe(true);
    expect(nodeEl(root, "L3").classList.contains("dim")).toBe(false);
    for (const id of ["TC1", "L1", "L2", "L4", "L5", "L6", "TS"]) {
      expect(nodeEl(root, id).classList.contains("dim")).toBe(true);
    }
    expect(root.querySelector(".pf-notice")!.textContent).toBe("");

    input.value = "";
    fire(input, "input");
    expect(root.querySelectorAll(".pf-node.dim")).toHaveLength(0);
    expect(root.querySelectorAll(".pf-node.hit")).toHaveLength(0);
  });

  it("search matches statement text as well as ids", () => {
    const root = render(loadFixture());
    const input = root.querySelector(".pf-search") as HTMLInputElement;
    input.value = "there exists an integer";
    fire(input, "input");
    const hits = [...root.querySelectorAll(".pf-node.hit")]
      .map((e) => e.getAttribute("data-id"))
      .sort();
    expect(hits).toEqual(["L1", "L5"]);
  });

  it("announces when nothing matches the search", () => {
    const root = render(loadFixture());
    const input = root.querySelector(".pf-search") as HTMLInputElement;
    input.value = "zebra-crossing";
    fire(input, "input");
    expect(root.querySelector(".pf-notice")!.textContent).toBe("no matches");
    expect(root.querySelectorAll(".pf-node.dim")).toHaveLength(8);
  });

  it("renders identically on repeated calls", () => {
    const a = render(loadFixture());
    const b = render(loadFixture());
    expect(a.innerHTML).toBe(b.innerHTML);
    expect(a.innerHTML).toMatchSnapshot();
  });
});

describe("status contours", () => {
  it("gives each of the three statuses its own contour color", () => {
    const data = loadFixture();
    data.per_node.L4.status = "formalize_error";
    data.per_node.L4.proof_source = null;
    data.per_node.L5.status = "formalized_no_tactics";
    data.per_node.L5.proof_source = null;
    const root = render(data);

    expect(nodeEl(root, "L4").className).toBe("pf-node status-formalize_error");
    expect(nodeEl(root, "L5").className).toBe("pf-node status-formalized_no_tactics");
    expect(nodeEl(root, "TS").className).toBe("pf-node status-proved");

    // the stylesheet must bind each status class to its own border color
    for (const [status, color] of Object.entries(STATUS_COLORS)) {
      const rule = new RegExp(
        `\\.pf-node\\.status-${status}\\s*\\{\\s*border-color:\\s*${color}`,
      );
      expect(STYLE_TEXT).toMatch(rule);
      expect(root.querySelector("style")!.textContent).toMatch(rule);
    }
    expect(new Set(Object.values(STATUS_COLORS)).size).toBe(3);
  });
});

describe("degraded payloads", () => {
  it("flags nodes without per-node records and keeps rendering", () => {
    const data = loadFixture();
    delete data.per_node.L5;
    const root = render(data);
    const banner = root.querySelector(".pf-banner")!;
    expect(banner.getAttribute("role")).toBe("alert");
    expect(banner.textContent).toContain("per_node entries missing for: L5");
    expect(root.querySelectorAll(".pf-node")).toHaveLength(8);
    expect(nodeEl(root, "L5").classList.contains("status-missing")).toBe(true);

    fire(nodeEl(root, "L5"), "click");
    expect(root.querySelector(".pf-panel")!.textContent).toContain(
      "No per-node record",
    );
  });

  it("never leaves the page blank on an unusable payload", () => {
    for (const junk of [undefined, null, 42, { graph: { nodes: [] } }]) {
      const root = render(junk);
      expect(root.querySelector(".pf-banner")).not.toBeNull();
      expect(root.querySelector(".pf-empty")).not.toBeNull();
      expect(root.textContent!.length).toBeGreaterThan(0);
      document.body.innerHTML = "";
    }
  });
});
