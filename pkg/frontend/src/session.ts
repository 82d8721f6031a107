/**
 * The editor's document state: selection, accumulated edits, and undo.
 *
 * The session never mutates the loaded graph. Every mutating operation
 * snapshots state onto an undo stack; undo restores the exact prior state.
 * The export references the originally loaded graph's row indices and is
 * bit-compatible with the core pipeline's curation-edit JSON.
 */

import type { GraphData } from "./graph";

export type EdgeKey = string; // "i,j" with i < j

export function edgeKey(a: number, b: number): EdgeKey {
  return a < b ? `${a},${b}` : `${b},${a}`;
}

export function keyToPair(key: EdgeKey): [number, number] {
  const [i, j] = key.split(",").map(Number);
  return [i, j];
}

export interface OpResult {
  ok: boolean;
  message?: string;
}

export interface CurationEditJson {
  removed_vertices: number[];
  removed_edges: [number, number][];
  added_edges: [number, number][];
}

export type Axis = 0 | 1 | 2;

interface State {
  removedVertices: Set<number>;
  removedEdges: Set<EdgeKey>;
  addedEdges: Set<EdgeKey>;
  selectedVertices: Set<number>;
  selectedEdges: Set<EdgeKey>;
}

function cloneState(state: State): State {
  return {
    removedVertices: new Set(state.removedVertices),
    removedEdges: new Set(state.removedEdges),
    addedEdges: new Set(state.addedEdges),
    selectedVertices: new Set(state.selectedVertices),
    selectedEdges: new Set(state.selectedEdges),
  };
}

function sortedPairs(keys: Iterable<EdgeKey>): [number, number][] {
  return [...keys]
    .map(keyToPair)
    .sort((a, b) => a[0] - b[0] || a[1] - b[1]);
}

export class EditorSession {
  readonly graph: GraphData;
  /** Curated graphs load read-only; all edits are rejected. */
  readonly readOnly: boolean;

  private state: State;
  private undoStack: State[] = [];
  private readonly baseEdges: Set<EdgeKey>;
  private readonly incidentBase: Map<number, EdgeKey[]>;

  constructor(graph: GraphData) {
    this.graph = graph;
    this.readOnly = graph.curated;
    this.baseEdges = new Set(graph.edges.map(([i, j]) => edgeKey(i, j)));
    this.incidentBase = new Map();
    for (const [i, j] of graph.edges) {
      const key = edgeKey(i, j);
      for (const v of [i, j]) {
        const list = this.incidentBase.get(v);
        if (list) list.push(key);
        else this.incidentBase.set(v, [key]);
      }
    }
    this.state = {
      removedVertices: new Set(),
      removedEdges: new Set(),
      addedEdges: new Set(),
      selectedVertices: new Set(),
      selectedEdges: new Set(),
    };
  }

  // -- views ----------------------------------------------------------------

  get vertexCount(): number {
    return this.graph.vertexIds.length;
  }

  isVertexVisible(v: number): boolean {
    return !this.state.removedVertices.has(v);
  }

  visibleVertices(): number[] {
    const out: number[] = [];
    for (let v = 0; v < this.vertexCount; v++) {
      if (this.isVertexVisible(v)) out.push(v);
    }
    return out;
  }

  isEdgeVisible(key: EdgeKey): boolean {
    const [i, j] = keyToPair(key);
    if (!this.isVertexVisible(i) || !this.isVertexVisible(j)) return false;
    if (this.state.addedEdges.has(key)) return true;
    return this.baseEdges.has(key) && !this.state.removedEdges.has(key);
  }

  visibleEdges(): EdgeKey[] {
    const out: EdgeKey[] = [];
    for (const key of this.baseEdges) {
      if (!this.state.removedEdges.has(key) && this.isEdgeVisible(key)) out.push(key);
    }
    for (const key of this.state.addedEdges) {
      if (this.isEdgeVisible(key)) out.push(key);
    }
    return out;
  }

  selectedVertices(): number[] {
    return [...this.state.selectedVertices].sort((a, b) => a - b);
  }

  selectedEdges(): EdgeKey[] {
    return [...this.state.selectedEdges].sort();
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  // -- selection (not undoable, does not change the document) ----------------

  selectVertices(indices: Iterable<number>, additive = false): void {
    if (!additive) this.clearSelection();
    for (const v of indices) {
      if (v >= 0 && v < this.vertexCount && this.isVertexVisible(v)) {
        this.state.selectedVertices.add(v);
      }
    }
  }

  selectEdges(keys: Iterable<EdgeKey>, additive = false): void {
    if (!additive) this.clearSelection();
    for (const key of keys) {
      if (this.isEdgeVisible(key)) this.state.selectedEdges.add(key);
    }
  }

  toggleVertex(v: number): void {
    if (this.state.selectedVertices.has(v)) this.state.selectedVertices.delete(v);
    else if (this.isVertexVisible(v)) this.state.selectedVertices.add(v);
  }

  toggleEdge(key: EdgeKey): void {
    if (this.state.selectedEdges.has(key)) this.state.selectedEdges.delete(key);
    else if (this.isEdgeVisible(key)) this.state.selectedEdges.add(key);
  }

  clearSelection(): void {
    this.state.selectedVertices.clear();
    this.state.selectedEdges.clear();
  }

  // -- document edits ---------------------------------------------------------

  private guardEdit(): OpResult | null {
    if (this.readOnly) {
      return { ok: false, message: "graph is curated; editor is read-only" };
    }
    return null;
  }

  private pushUndo(): void {
    this.undoStack.push(cloneState(this.state));
  }

  private removeVertexInternal(v: number): void {
    this.state.removedVertices.add(v);
    // incidence closure recorded explicitly so the export matches the UI
    for (const key of this.incidentBase.get(v) ?? []) {
      if (!this.state.removedEdges.has(key)) this.state.removedEdges.add(key);
    }
    for (const key of [...this.state.addedEdges]) {
      const [i, j] = keyToPair(key);
      if (i === v || j === v) this.state.addedEdges.delete(key);
    }
    this.state.selectedVertices.delete(v);
  }

  deleteSelection(): OpResult {
    const guard = this.guardEdit();
    if (guard) return guard;
    const { selectedVertices, selectedEdges } = this.state;
    if (selectedVertices.size === 0 && selectedEdges.size === 0) {
      return { ok: false, message: "nothing selected" };
    }
    this.pushUndo();
    for (const key of [...selectedEdges]) {
      if (this.state.addedEdges.has(key)) this.state.addedEdges.delete(key);
      else if (this.baseEdges.has(key)) this.state.removedEdges.add(key);
    }
    for (const v of [...selectedVertices]) {
      this.removeVertexInternal(v);
    }
    this.clearSelection();
    return { ok: true };
  }

  /**
   * Remove every visible vertex strictly on the dropped side of an
   * axis-aligned plane (keepAbove: keep coordinates >= value).
   */
  cropByPlane(axis: Axis, value: number, keepAbove: boolean): OpResult {
    const guard = this.guardEdit();
    if (guard) return guard;
    const doomed: number[] = [];
    for (const v of this.visibleVertices()) {
      const coord = this.graph.positions[v * 3 + axis];
      if (keepAbove ? coord < value : coord > value) doomed.push(v);
    }
    if (doomed.length === 0) {
      return { ok: true, message: "crop removed nothing" };
    }
    if (doomed.length === this.visibleVertices().length) {
      return { ok: false, message: "crop would remove every vertex" };
    }
    this.pushUndo();
    for (const v of doomed) this.removeVertexInternal(v);
    this.clearSelection();
    return { ok: true, message: `cropped ${doomed.length} vertices` };
  }

  /** Connect the two currently selected vertices (edge-addition toggle). */
  addEdgeBetweenSelection(): OpResult {
    const guard = this.guardEdit();
    if (guard) return guard;
    const picked = this.selectedVertices();
    if (picked.length !== 2) {
      return { ok: false, message: "select exactly two vertices to add an edge" };
    }
    const [a, b] = picked;
    if (a === b) {
      return { ok: false, message: "cannot add a self-edge" };
    }
    const key = edgeKey(a, b);
    if (this.isEdgeVisible(key)) {
      return { ok: false, message: `edge (${a}, ${b}) already exists` };
    }
    this.pushUndo();
    if (this.state.removedEdges.has(key)) {
      this.state.removedEdges.delete(key); // restore a previously removed edge
    } else {
      this.state.addedEdges.add(key);
    }
    return { ok: true, message: `added edge (${a}, ${b})` };
  }

  undo(): boolean {
    const prior = this.undoStack.pop();
    if (!prior) return false;
    this.state = prior;
    return true;
  }

  // -- export -----------------------------------------------------------------

  get isEmptyEdit(): boolean {
    return (
      this.state.removedVertices.size === 0 &&
      this.state.removedEdges.size === 0 &&
      this.state.addedEdges.size === 0
    );
  }

  exportEdit(): CurationEditJson {
    return {
      removed_vertices: [...this.state.removedVertices].sort((a, b) => a - b),
      removed_edges: sortedPairs(this.state.removedEdges),
      added_edges: sortedPairs(this.state.addedEdges),
    };
  }

  exportText(): string {
    return JSON.stringify(this.exportEdit(), null, 2) + "\n";
  }
}
