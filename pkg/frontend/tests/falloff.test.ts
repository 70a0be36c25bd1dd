import { describe, expect, it } from "vitest";

import { falloffSamples, falloffValue, falloffWeight } from "../src/falloff";

function deCasteljau(ys: number[], t: number): number {
  let pts = ys.slice();
  while (pts.length > 1) {
    const next = [];
    for (let i = 0; i + 1 < pts.length; i++) {
      next.push((1 - t) * pts[i] + t * pts[i + 1]);
    }
    pts = next;
  }
  return pts[0];
}

describe("falloff", () => {
  it("pins the endpoints", () => {
    for (const [y1, y2] of [[1, 0], [0.4, 0.9], [-0.2, 1.2]]) {
      expect(falloffValue(y1, y2, 0)).toBe(1);
      expect(falloffValue(y1, y2, 1)).toBe(0);
      expect(falloffWeight(y1, y2, 0, 5)).toBe(1);
      expect(falloffWeight(y1, y2, 5, 5)).toBe(0);
      expect(falloffWeight(y1, y2, 9, 5)).toBe(0);
    }
  });

  it("matches de Casteljau inside the guard band", () => {
    for (const [y1, y2] of [[1, 0], [0.5, 0.5], [0.8, 0.1]]) {
      for (let i = 0; i <= 10; i++) {
        const u = i / 10;
        const want = deCasteljau([1, y1, y2, 0], u);
        expect(falloffValue(y1, y2, u)).toBeCloseTo(want, 12);
      }
    }
  });

  it("clamps wild ordinates to the guard band", () => {
    for (const [, v] of falloffSamples(6, -6)) {
      expect(v).toBeGreaterThanOrEqual(-0.25);
      expect(v).toBeLessThanOrEqual(1.25);
    }
  });
});
