/**
 * Three.js view of the session: vertices as points, edges as line segments,
 * orbit/zoom navigation, raycast picking, and screen-space rectangle queries.
 * Buffers are rebuilt from the session on every refresh; graphs at curation
 * scale (a few thousand vertices) rebuild in well under a frame.
 */

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import type { EdgeKey, EditorSession } from "./session";
import { keyToPair } from "./session";

const VERTEX_COLOR = new THREE.Color(0x4fc3f7);
const VERTEX_SELECTED = new THREE.Color(0xffb300);
const EDGE_COLOR = new THREE.Color(0x607d8b);
const EDGE_SELECTED = new THREE.Color(0xff7043);
const EDGE_ADDED = new THREE.Color(0x66bb6a);

export interface PickHit {
  kind: "vertex" | "edge";
  vertex?: number;
  edge?: EdgeKey;
}

export interface ScreenRect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export class GraphRenderer {
  private readonly renderer: THREE.WebGLRenderer;
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private readonly controls: OrbitControls;
  private readonly raycaster = new THREE.Raycaster();
  private readonly container: HTMLElement;

  private points: THREE.Points | null = null;
  private lines: THREE.LineSegments | null = null;
  private session: EditorSession | null = null;
  private visibleVertexRows: number[] = [];
  private visibleEdgeKeys: EdgeKey[] = [];
  private disposed = false;

  constructor(container: HTMLElement) {
    this.container = container;
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    container.appendChild(this.renderer.domElement);
    this.scene.background = new THREE.Color(0x14181c);
    this.camera = new THREE.PerspectiveCamera(50, 1, 0.01, 5000);
    this.camera.position.set(0, 0, 100);
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.enableDamping = true;
    window.addEventListener("resize", this.handleResize);
    this.handleResize();
    this.renderer.setAnimationLoop(() => {
      if (this.disposed) return;
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    });
  }

  get domElement(): HTMLCanvasElement {
    return this.renderer.domElement;
  }

  /** Disable orbit/zoom while a selection marquee is being dragged. */
  setNavigationEnabled(enabled: boolean): void {
    this.controls.enabled = enabled;
  }

  private handleResize = (): void => {
    const width = this.container.clientWidth || 1;
    const height = this.container.clientHeight || 1;
    this.renderer.setSize(width, height);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  };

  setSession(session: EditorSession): void {
    this.session = session;
    this.refresh();
    this.fitView();
  }

  fitView(): void {
    if (!this.session) return;
    const box = new THREE.Box3();
    const positions = this.session.graph.positions;
    for (const v of this.session.visibleVertices()) {
      box.expandByPoint(
        new THREE.Vector3(positions[v * 3], positions[v * 3 + 1], positions[v * 3 + 2]),
      );
    }
    if (box.isEmpty()) return;
    const center = box.getCenter(new THREE.Vector3());
    const size = box.getSize(new THREE.Vector3()).length() || 1;
    this.controls.target.copy(center);
    this.camera.position.copy(center).add(new THREE.Vector3(0.4, 0.4, 1).normalize().multiplyScalar(size * 1.6));
    this.camera.near = size / 1000;
    this.camera.far = size * 20;
    this.camera.updateProjectionMatrix();
    this.raycaster.params.Points.threshold = size / 150;
    this.raycaster.params.Line.threshold = size / 300;
  }

  /** Rebuild point/line buffers from the session's visible sets. */
  refresh(): void {
    if (!this.session) return;
    const session = this.session;
    const positions = session.graph.positions;
    if (this.points) {
      this.scene.remove(this.points);
      this.points.geometry.dispose();
      (this.points.material as THREE.Material).dispose();
      this.points = null;
    }
    if (this.lines) {
      this.scene.remove(this.lines);
      this.lines.geometry.dispose();
      (this.lines.material as THREE.Material).dispose();
      this.lines = null;
    }

    this.visibleVertexRows = session.visibleVertices();
    const selectedVertices = new Set(session.selectedVertices());
    const pointData = new Float32Array(this.visibleVertexRows.length * 3);
    const pointColors = new Float32Array(this.visibleVertexRows.length * 3);
    this.visibleVertexRows.forEach((row, at) => {
      pointData[at * 3] = positions[row * 3];
      pointData[at * 3 + 1] = positions[row * 3 + 1];
      pointData[at * 3 + 2] = positions[row * 3 + 2];
      const color = selectedVertices.has(row) ? VERTEX_SELECTED : VERTEX_COLOR;
      color.toArray(pointColors, at * 3);
    });
    const pointGeometry = new THREE.BufferGeometry();
    pointGeometry.setAttribute("position", new THREE.BufferAttribute(pointData, 3));
    pointGeometry.setAttribute("color", new THREE.BufferAttribute(pointColors, 3));
    this.points = new THREE.Points(
      pointGeometry,
      new THREE.PointsMaterial({ size: 4, sizeAttenuation: false, vertexColors: true }),
    );
    this.scene.add(this.points);

    this.visibleEdgeKeys = session.visibleEdges();
    const selectedEdges = new Set(session.selectedEdges());
    const added = new Set(session.exportEdit().added_edges.map(([i, j]) => `${i},${j}`));
    const lineData = new Float32Array(this.visibleEdgeKeys.length * 6);
    const lineColors = new Float32Array(this.visibleEdgeKeys.length * 6);
    this.visibleEdgeKeys.forEach((key, at) => {
      const [i, j] = keyToPair(key);
      lineData.set(positions.subarray(i * 3, i * 3 + 3), at * 6);
      lineData.set(positions.subarray(j * 3, j * 3 + 3), at * 6 + 3);
      const color = selectedEdges.has(key)
        ? EDGE_SELECTED
        : added.has(key)
          ? EDGE_ADDED
          : EDGE_COLOR;
      color.toArray(lineColors, at * 6);
      color.toArray(lineColors, at * 6 + 3);
    });
    const lineGeometry = new THREE.BufferGeometry();
    lineGeometry.setAttribute("position", new THREE.BufferAttribute(lineData, 3));
    lineGeometry.setAttribute("color", new THREE.BufferAttribute(lineColors, 3));
    this.lines = new THREE.LineSegments(
      lineGeometry,
      new THREE.LineBasicMaterial({ vertexColors: true }),
    );
    this.scene.add(this.lines);
  }

  private pointerNdc(event: MouseEvent): THREE.Vector2 {
    const rect = this.renderer.domElement.getBoundingClientRect();
    return new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
  }

  /** Nearest vertex or edge under the cursor; vertices take priority. */
  pickAt(event: MouseEvent): PickHit | null {
    if (!this.session) return null;
    this.raycaster.setFromCamera(this.pointerNdc(event), this.camera);
    if (this.points) {
      const hits = this.raycaster.intersectObject(this.points, false);
      if (hits.length > 0 && hits[0].index !== undefined) {
        return { kind: "vertex", vertex: this.visibleVertexRows[hits[0].index] };
      }
    }
    if (this.lines) {
      const hits = this.raycaster.intersectObject(this.lines, false);
      if (hits.length > 0 && hits[0].index !== undefined) {
        const segment = Math.floor(hits[0].index / 2);
        return { kind: "edge", edge: this.visibleEdgeKeys[segment] };
      }
    }
    return null;
  }

  private projectRow(row: number): THREE.Vector3 {
    const positions = this.session!.graph.positions;
    return new THREE.Vector3(
      positions[row * 3],
      positions[row * 3 + 1],
      positions[row * 3 + 2],
    ).project(this.camera);
  }

  /** Visible vertices whose screen projection falls inside the CSS-pixel rect. */
  verticesInRect(rect: ScreenRect): number[] {
    if (!this.session) return [];
    const bounds = this.renderer.domElement.getBoundingClientRect();
    const xMin = Math.min(rect.x0, rect.x1);
    const xMax = Math.max(rect.x0, rect.x1);
    const yMin = Math.min(rect.y0, rect.y1);
    const yMax = Math.max(rect.y0, rect.y1);
    const out: number[] = [];
    for (const row of this.visibleVertexRows) {
      const ndc = this.projectRow(row);
      if (ndc.z < -1 || ndc.z > 1) continue;
      const sx = bounds.left + ((ndc.x + 1) / 2) * bounds.width;
      const sy = bounds.top + ((1 - ndc.y) / 2) * bounds.height;
      if (sx >= xMin && sx <= xMax && sy >= yMin && sy <= yMax) out.push(row);
    }
    return out;
  }

  /** Visible edges with both endpoints inside the rect. */
  edgesInRect(rect: ScreenRect): EdgeKey[] {
    const inside = new Set(this.verticesInRect(rect));
    return this.visibleEdgeKeys.filter((key) => {
      const [i, j] = keyToPair(key);
      return inside.has(i) && inside.has(j);
    });
  }

  dispose(): void {
    this.disposed = true;
    window.removeEventListener("resize", this.handleResize);
    this.renderer.setAnimationLoop(null);
    this.renderer.dispose();
  }
}
