/**
 * Parsing and validation of the core pipeline's graph JSON.
 *
 * Expected schema: { vertices: [{ id, x0: [x, y, z] }], centroids: { frames,
 * data }, edges: [[i, j]], curated: bool }. The editor only needs the frame-0
 * geometry (x0), the edge list, and the curated flag; all other keys are
 * ignored. Any shape mismatch raises GraphSchemaError with a message suitable
 * for the UI error banner.
 */

export class GraphSchemaError extends Error {}

export interface GraphData {
  /** Original per-row ids from the file (display only). */
  vertexIds: number[];
  /** Frame-0 positions, length 3 * vertexCount. */
  positions: Float32Array;
  /** Unordered edge pairs with i < j, referencing row indices. */
  edges: [number, number][];
  curated: boolean;
  frames: number;
}

function isFiniteNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

export function parseGraph(json: unknown): GraphData {
  if (typeof json !== "object" || json === null || Array.isArray(json)) {
    throw new GraphSchemaError("graph JSON must be an object");
  }
  const payload = json as Record<string, unknown>;
  const vertices = payload.vertices;
  if (!Array.isArray(vertices) || vertices.length === 0) {
    throw new GraphSchemaError("graph JSON needs a non-empty 'vertices' array");
  }
  const count = vertices.length;
  const vertexIds: number[] = [];
  const positions = new Float32Array(count * 3);
  vertices.forEach((entry, row) => {
    if (typeof entry !== "object" || entry === null) {
      throw new GraphSchemaError(`vertex ${row} is not an object`);
    }
    const vertex = entry as Record<string, unknown>;
    if (!isFiniteNumber(vertex.id)) {
      throw new GraphSchemaError(`vertex ${row} is missing a numeric 'id'`);
    }
    const x0 = vertex.x0;
    if (!Array.isArray(x0) || x0.length !== 3 || !x0.every(isFiniteNumber)) {
      throw new GraphSchemaError(`vertex ${row} needs x0 = [x, y, z]`);
    }
    vertexIds.push(vertex.id);
    positions.set(x0 as number[], row * 3);
  });

  const rawEdges = payload.edges;
  if (!Array.isArray(rawEdges)) {
    throw new GraphSchemaError("graph JSON needs an 'edges' array");
  }
  const seen = new Set<string>();
  const edges: [number, number][] = rawEdges.map((pair, at) => {
    if (!Array.isArray(pair) || pair.length !== 2 || !pair.every(isFiniteNumber)) {
      throw new GraphSchemaError(`edge ${at} must be a pair of indices`);
    }
    const a = pair[0] as number;
    const b = pair[1] as number;
    if (!Number.isInteger(a) || !Number.isInteger(b)) {
      throw new GraphSchemaError(`edge ${at} has non-integer endpoints`);
    }
    if (a === b) {
      throw new GraphSchemaError(`edge ${at} is a self-loop (${a})`);
    }
    if (a < 0 || b < 0 || a >= count || b >= count) {
      throw new GraphSchemaError(`edge ${at} references a missing vertex`);
    }
    const i = Math.min(a, b);
    const j = Math.max(a, b);
    const key = `${i},${j}`;
    if (seen.has(key)) {
      throw new GraphSchemaError(`duplicate edge (${i}, ${j})`);
    }
    seen.add(key);
    return [i, j];
  });

  if (typeof payload.curated !== "boolean") {
    throw new GraphSchemaError("graph JSON needs a boolean 'curated' flag");
  }
  let frames = 1;
  const centroids = payload.centroids;
  if (typeof centroids === "object" && centroids !== null) {
    const f = (centroids as Record<string, unknown>).frames;
    if (isFiniteNumber(f) && f >= 1) {
      frames = Math.trunc(f);
    }
  }
  return { vertexIds, positions, edges, curated: payload.curated, frames };
}

export function parseGraphText(text: string): GraphData {
  let json: unknown;
  try {
    json = JSON.parse(text);
  } catch (exc) {
    throw new GraphSchemaError(`file is not valid JSON: ${(exc as Error).message}`);
  }
  return parseGraph(json);
}
