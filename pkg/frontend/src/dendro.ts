/** SVG dendrogram over the topic merge sequence.
 *
 * Leaves are ordered by recursively unrolling the merge tree so sibling
 * subtrees sit adjacent; the y axis is merge height, scaled to the tallest
 * merge. Pure rendering, no interaction.
 */

import { ApiClient, Merge } from "./api.js";
import { clear, el, svgEl } from "./dom.js";

const WIDTH = 560;
const HEIGHT = 240;
const PAD = 18;

interface Layout {
  x: number;
  y: number;
}

function leafOrder(merges: Merge[]): number[] {
  if (merges.length === 0) return [];
  const children = new Map<number, [number, number]>();
  const merged = new Set<number>();
  for (const m of merges) {
    children.set(m.new_node, [m.node_a, m.node_b]);
    merged.add(m.node_a);
    merged.add(m.node_b);
  }
  const root = merges[merges.length - 1].new_node;
  const order: number[] = [];
  const walk = (node: number): void => {
    const pair = children.get(node);
    if (pair === undefined) {
      order.push(node);
      return;
    }
    walk(pair[0]);
    walk(pair[1]);
  };
  walk(root);
  // stray leaves (never merged) render on the right at height 0
  for (const m of merges) {
    for (const node of [m.node_a, m.node_b]) {
      if (!children.has(node) && !order.includes(node)) order.push(node);
    }
  }
  return order;
}

export interface DendroHandle {
  refresh(): Promise<void>;
}

export function mountDendrogram(container: HTMLElement, api: ApiClient): DendroHandle {
  async function refresh(): Promise<void> {
    clear(container);
    let merges: Merge[];
    try {
      merges = (await api.getDendrogram()).merges;
    } catch {
      container.append(el("p", { class: "dendro-empty" }, ["no dendrogram yet"]));
      return;
    }
    const svg = svgEl("svg", {
      class: "dendrogram",
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
      width: String(WIDTH),
      height: String(HEIGHT),
    });
    const leaves = leafOrder(merges);
    if (leaves.length === 0) {
      container.append(el("p", { class: "dendro-empty" }, ["single topic"]));
      return;
    }
    const span = WIDTH - 2 * PAD;
    const peak = Math.max(...merges.map((m) => m.height), 1e-12);
    const yOf = (h: number) => HEIGHT - PAD - (h / peak) * (HEIGHT - 2 * PAD);

    const positions = new Map<number, Layout>();
    leaves.forEach((leaf, i) => {
      const x = PAD + (leaves.length === 1 ? span / 2 : (i * span) / (leaves.length - 1));
      positions.set(leaf, { x, y: yOf(0) });
      const label = svgEl("text", {
        x: String(x),
        y: String(HEIGHT - 4),
        class: "leaf-label",
        "text-anchor": "middle",
      });
      label.textContent = String(leaf);
      svg.append(label);
    });

    for (const m of merges) {
      const a = positions.get(m.node_a);
      const b = positions.get(m.node_b);
      if (a === undefined || b === undefined) continue;
      const y = yOf(m.height);
      const path = svgEl("path", {
        class: "merge-link",
        d: `M ${a.x} ${a.y} V ${y} H ${b.x} V ${b.y}`,
        fill: "none",
      });
      svg.append(path);
      positions.set(m.new_node, { x: (a.x + b.x) / 2, y });
    }
    container.append(svg);
  }

  return { refresh };
}
