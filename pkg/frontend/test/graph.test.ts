import { describe, expect, it } from "vitest";

import { GraphSchemaError, parseGraph, parseGraphText } from "../src/graph";

function validGraph() {
  return {
    vertices: [
      { id: 0, x0: [0, 0, 0] },
      { id: 1, x0: [1, 0, 0] },
      { id: 2, x0: [0, 1, 0] },
    ],
    centroids: { frames: 2, data: [] },
    edges: [
      [0, 1],
      [1, 2],
    ],
    curated: false,
  };
}

describe("parseGraph", () => {
  it("parses the pipeline's schema", () => {
    const graph = parseGraph(validGraph());
    expect(graph.vertexIds).toEqual([0, 1, 2]);
    expect(graph.edges).toEqual([
      [0, 1],
      [1, 2],
    ]);
    expect(graph.curated).toBe(false);
    expect(graph.frames).toBe(2);
    expect(Array.from(graph.positions.subarray(3, 6))).toEqual([1, 0, 0]);
  });

  it("normalizes edge orientation", () => {
    const payload = validGraph();
    payload.edges = [[1, 0], [2, 1]];
    const graph = parseGraph(payload);
    expect(graph.edges).toEqual([
      [0, 1],
      [1, 2],
    ]);
  });

  it("rejects non-objects", () => {
    expect(() => parseGraph(null)).toThrow(GraphSchemaError);
    expect(() => parseGraph([1, 2])).toThrow(GraphSchemaError);
  });

  it("rejects missing or empty vertices", () => {
    expect(() => parseGraph({ edges: [], curated: false })).toThrow(/vertices/);
    expect(() => parseGraph({ vertices: [], edges: [], curated: false })).toThrow(
      /vertices/,
    );
  });

  it("rejects malformed vertex entries", () => {
    const payload = validGraph() as Record<string, unknown>;
    payload.vertices = [{ id: 0, x0: [0, 0] }];
    expect(() => parseGraph(payload)).toThrow(/x0/);
    payload.vertices = [{ x0: [0, 0, 0] }];
    expect(() => parseGraph(payload)).toThrow(/id/);
    payload.vertices = [{ id: 0, x0: [0, 0, Number.NaN] }];
    expect(() => parseGraph(payload)).toThrow(/x0/);
  });

  it("rejects bad edges", () => {
    const base = validGraph();
    expect(() => parseGraph({ ...base, edges: [[0, 0]] })).toThrow(/self-loop/);
    expect(() => parseGraph({ ...base, edges: [[0, 9]] })).toThrow(/missing vertex/);
    expect(() => parseGraph({ ...base, edges: [[0, 1], [1, 0]] })).toThrow(/duplicate/);
    expect(() => parseGraph({ ...base, edges: [[0.5, 1]] })).toThrow(/non-integer/);
    expect(() => parseGraph({ ...base, edges: "nope" })).toThrow(/edges/);
  });

  it("requires the curated flag", () => {
    const payload = validGraph() as Record<string, unknown>;
    delete payload.curated;
    expect(() => parseGraph(payload)).toThrow(/curated/);
  });

  it("reports invalid JSON text", () => {
    expect(() => parseGraphText("{not json")).toThrow(/not valid JSON/);
    expect(parseGraphText(JSON.stringify(validGraph())).vertexIds.length).toBe(3);
  });
});
