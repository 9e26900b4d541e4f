import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { mountDendrogram } from "../src/dendro.js";
import { fakeFetch, makeState } from "./fakeServer.js";

describe("dendrogram pane", () => {
  let container: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="pane"></div>';
    container = document.getElementById("pane") as HTMLElement;
  });

  it("draws one link per merge and labels every leaf", async () => {
    const state = makeState({
      merges: [
        { node_a: 0, node_b: 1, height: 0.12, new_node: 4 },
        { node_a: 3, node_b: 4, height: 0.35, new_node: 5 },
      ],
    });
    const pane = mountDendrogram(container, new ApiClient("", fakeFetch(state)));
    await pane.refresh();
    expect(container.querySelectorAll(".merge-link").length).toBe(2);
    const labels = [...container.querySelectorAll(".leaf-label")].map(
      (n) => n.textContent,
    );
    expect(labels.sort()).toEqual(["0", "1", "3"]);
  });

  it("keeps sibling subtrees adjacent", async () => {
    const state = makeState({
      merges: [
        { node_a: 0, node_b: 1, height: 0.1, new_node: 4 },
        { node_a: 2, node_b: 3, height: 0.15, new_node: 5 },
        { node_a: 4, node_b: 5, height: 0.3, new_node: 6 },
      ],
    });
    const pane = mountDendrogram(container, new ApiClient("", fakeFetch(state)));
    await pane.refresh();
    const xs = new Map(
      [...container.querySelectorAll(".leaf-label")].map((n) => [
        n.textContent,
        Number(n.getAttribute("x")),
      ]),
    );
    // first-merge partners sit next to each other, full-tree extremes apart
    const between = Math.abs(xs.get("0")! - xs.get("1")!);
    const apart = Math.abs(xs.get("0")! - xs.get("3")!);
    expect(between).toBeLessThan(apart);
    const ordered = [...xs.entries()].sort((a, b) => a[1] - b[1]).map((e) => e[0]);
    const i0 = ordered.indexOf("0");
    const i1 = ordered.indexOf("1");
    expect(Math.abs(i0 - i1)).toBe(1);
  });

  it("shows a placeholder when the dendrogram is missing", async () => {
    const failing = new ApiClient("", async () =>
      new Response(JSON.stringify({ detail: "dendrogram not computed" }), {
        status: 404,
      }),
    );
    const pane = mountDendrogram(container, failing);
    await pane.refresh();
    expect(container.querySelector(".dendro-empty")?.textContent).toBe(
      "no dendrogram yet",
    );
  });
});
