// View state and the pure selection/geometry helpers behind the UI.
// Everything here is DOM-free so it can be unit tested directly.

import type { CutPayload, EditOptionsPayload } from "./protocol.js";

export type ToolMode = "navigate" | "select" | "drag" | "patch";

export type PaintMode = "vertex" | "edge-path" | "flood";

export interface GeometryArrays {
  positions: Float32Array;
  indices: Uint32Array;
  nodeIds: number[];
}

export class ViewState {
  cut: CutPayload | null = null;
  tool: ToolMode = "navigate";
  paint: PaintMode = "vertex";
  floodRadius = 3;
  selection = new Set<number>(); // node ids
  options: EditOptionsPayload = {
    radius: 2,
    falloff: [1.0, 0.0],
    ancestors: true,
    descendants: "attenuated",
  };
  private adjacency: number[][] | null = null;

  /** The rendered mesh always comes from the latest cut payload. */
  applyCut(cut: CutPayload): void {
    this.cut = cut;
    this.adjacency = null;
    const inCut = new Set(cut.nodes);
    for (const n of [...this.selection]) {
      if (!inCut.has(n)) this.selection.delete(n);
    }
    for (let i = 0; i < cut.nodes.length; i++) {
      if (cut.selected[i]) this.selection.add(cut.nodes[i]);
    }
  }

  get sliderMax(): number {
    return this.cut ? this.cut.order_len : 0;
  }

  get lod(): number {
    return this.cut ? this.cut.lod : 0;
  }

  nodeIndex(node: number): number {
    return this.cut ? this.cut.nodes.indexOf(node) : -1;
  }

  /** Local adjacency (by cut index) derived from the cut faces. */
  cutAdjacency(): number[][] {
    if (!this.cut) return [];
    if (this.adjacency) return this.adjacency;
    const n = this.cut.nodes.length;
    const sets: Array<Set<number>> = Array.from({ length: n },
                                                () => new Set());
    for (const [a, b, c] of this.cut.faces) {
      sets[a].add(b); sets[b].add(a);
      sets[b].add(c); sets[c].add(b);
      sets[c].add(a); sets[a].add(c);
    }
    this.adjacency = sets.map((s) => [...s].sort((x, y) => x - y));
    return this.adjacency;
  }
}

export function geometryArrays(cut: CutPayload): GeometryArrays {
  const positions = new Float32Array(cut.positions.length * 3);
  for (let i = 0; i < cut.positions.length; i++) {
    positions[3 * i] = cut.positions[i][0];
    positions[3 * i + 1] = cut.positions[i][1];
    positions[3 * i + 2] = cut.positions[i][2];
  }
  const indices = new Uint32Array(cut.faces.length * 3);
  for (let i = 0; i < cut.faces.length; i++) {
    indices[3 * i] = cut.faces[i][0];
    indices[3 * i + 1] = cut.faces[i][1];
    indices[3 * i + 2] = cut.faces[i][2];
  }
  return { positions, indices, nodeIds: cut.nodes };
}

/** Shortest edge path between two cut indices (BFS), endpoints included;
 * empty when unreachable. */
export function edgePath(adjacency: number[][], from: number,
                         to: number): number[] {
  if (from === to) return [from];
  const prev = new Map<number, number>();
  prev.set(from, from);
  let frontier = [from];
  while (frontier.length) {
    const next: number[] = [];
    for (const n of frontier) {
      for (const w of adjacency[n]) {
        if (!prev.has(w)) {
          prev.set(w, n);
          if (w === to) {
            const path = [to];
            let cur = to;
            while (cur !== from) {
              cur = prev.get(cur)!;
              path.push(cur);
            }
            return path.reverse();
          }
          next.push(w);
        }
      }
    }
    frontier = next;
  }
  return [];
}

/** All cut indices within `radius` hops of the seed (patch flood fill). */
export function floodFill(adjacency: number[][], seed: number,
                          radius: number): number[] {
  const dist = new Map<number, number>();
  dist.set(seed, 0);
  let frontier = [seed];
  for (let d = 1; d <= radius && frontier.length; d++) {
    const next: number[] = [];
    for (const n of frontier) {
      for (const w of adjacency[n]) {
        if (!dist.has(w)) {
          dist.set(w, d);
          next.push(w);
        }
      }
    }
    frontier = next;
  }
  return [...dist.keys()].sort((a, b) => a - b);
}

/** Resolve a pick to node ids according to the paint mode. `anchor` is the
 * previously picked cut index for edge-path painting. */
export function resolvePaint(state: ViewState, pick: number,
                             anchor: number | null): number[] {
  const cut = state.cut!;
  if (state.paint === "edge-path" && anchor !== null && anchor !== pick) {
    return edgePath(state.cutAdjacency(), anchor, pick)
      .map((i) => cut.nodes[i]);
  }
  if (state.paint === "flood") {
    return floodFill(state.cutAdjacency(), pick, state.floodRadius)
      .map((i) => cut.nodes[i]);
  }
  return [cut.nodes[pick]];
}
