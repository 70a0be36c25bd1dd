// Falloff profile used by the edit-options panel: cubic Bezier over hop
// distance, pinned to 1 at the center and 0 at the radius. Mirrors the
// service's evaluation (including the guard band) so the plotted curve is
// what the server applies.

export const GUARD_MIN = -0.25;
export const GUARD_MAX = 1.25;

export function falloffValue(y1: number, y2: number, u: number): number {
  if (u <= 0) return 1;
  if (u >= 1) return 0;
  const s = 1 - u;
  const b = s * s * s + 3 * s * s * u * y1 + 3 * s * u * u * y2;
  return Math.min(Math.max(b, GUARD_MIN), GUARD_MAX);
}

export function falloffWeight(y1: number, y2: number, hop: number,
                              radius: number): number {
  if (hop <= 0) return 1;
  if (hop >= radius) return 0;
  return falloffValue(y1, y2, hop / radius);
}

/** Sampled polyline of the curve for plotting, as [u, value] pairs. */
export function falloffSamples(y1: number, y2: number,
                               n = 64): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (let i = 0; i <= n; i++) {
    const u = i / n;
    out.push([u, falloffValue(y1, y2, u)]);
  }
  return out;
}
