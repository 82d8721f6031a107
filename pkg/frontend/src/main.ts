/**
 * DOM wiring: file load, selection modes, edit buttons, crop controls,
 * undo, and export download. All document logic lives in EditorSession;
 * this file only translates UI events into session calls.
 */

import { GraphSchemaError, parseGraphText } from "./graph";
import { GraphRenderer, type ScreenRect } from "./render";
import { EditorSession, type Axis, type OpResult } from "./session";

type Mode = "click" | "box";

const viewport = document.getElementById("viewport") as HTMLElement;
const fileInput = document.getElementById("file-input") as HTMLInputElement;
const banner = document.getElementById("banner") as HTMLElement;
const status = document.getElementById("status") as HTMLElement;
const marquee = document.getElementById("marquee") as HTMLElement;

const modeClick = document.getElementById("mode-click") as HTMLInputElement;
const modeBox = document.getElementById("mode-box") as HTMLInputElement;
const allowAdd = document.getElementById("allow-add") as HTMLInputElement;
const buttons = {
  del: document.getElementById("btn-delete") as HTMLButtonElement,
  addEdge: document.getElementById("btn-add-edge") as HTMLButtonElement,
  crop: document.getElementById("btn-crop") as HTMLButtonElement,
  undo: document.getElementById("btn-undo") as HTMLButtonElement,
  clear: document.getElementById("btn-clear") as HTMLButtonElement,
  export: document.getElementById("btn-export") as HTMLButtonElement,
};
const cropAxis = document.getElementById("crop-axis") as HTMLSelectElement;
const cropValue = document.getElementById("crop-value") as HTMLInputElement;
const cropSide = document.getElementById("crop-side") as HTMLSelectElement;

const renderer = new GraphRenderer(viewport);
let session: EditorSession | null = null;
let mode: Mode = "click";
let dragStart: { x: number; y: number } | null = null;

function showBanner(message: string, kind: "error" | "warn" | "info"): void {
  banner.textContent = message;
  banner.className = `banner ${kind}`;
  banner.style.display = "block";
}

function hideBanner(): void {
  banner.style.display = "none";
}

function updateStatus(): void {
  if (!session) {
    status.textContent = "no graph loaded";
    return;
  }
  const edit = session.exportEdit();
  status.textContent =
    `${session.visibleVertices().length} vertices, ${session.visibleEdges().length} edges | ` +
    `selected: ${session.selectedVertices().length} vertices, ${session.selectedEdges().length} edges | ` +
    `edit: -${edit.removed_vertices.length} vertices, -${edit.removed_edges.length} edges, ` +
    `+${edit.added_edges.length} edges` +
    (session.readOnly ? " | READ-ONLY" : "");
  buttons.undo.disabled = !session.canUndo || session.readOnly;
  buttons.addEdge.style.display = allowAdd.checked ? "" : "none";
}

function afterOp(result: OpResult): void {
  if (!result.ok) {
    showBanner(result.message ?? "operation rejected", "warn");
  } else if (result.message) {
    showBanner(result.message, "info");
  } else {
    hideBanner();
  }
  renderer.refresh();
  updateStatus();
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  try {
    const text = await file.text();
    const graph = parseGraphText(text);
    session = new EditorSession(graph);
    renderer.setSession(session);
    hideBanner();
    if (session.readOnly) {
      showBanner("graph is marked curated; loaded read-only", "warn");
    }
  } catch (exc) {
    session = null;
    const detail =
      exc instanceof GraphSchemaError ? exc.message : `unexpected error: ${exc}`;
    showBanner(`cannot load graph: ${detail}`, "error");
  }
  updateStatus();
  fileInput.value = "";
});

modeClick.addEventListener("change", () => (mode = "click"));
modeBox.addEventListener("change", () => (mode = "box"));
allowAdd.addEventListener("change", updateStatus);

let pointerDownAt: { x: number; y: number } | null = null;

renderer.domElement.addEventListener("mousedown", (event) => {
  pointerDownAt = { x: event.clientX, y: event.clientY };
  if (mode !== "box" || event.button !== 0) return;
  dragStart = { x: event.clientX, y: event.clientY };
  renderer.setNavigationEnabled(false);
  event.preventDefault();
  event.stopPropagation();
});

window.addEventListener("mousemove", (event) => {
  if (!dragStart) return;
  const x = Math.min(dragStart.x, event.clientX);
  const y = Math.min(dragStart.y, event.clientY);
  marquee.style.display = "block";
  marquee.style.left = `${x}px`;
  marquee.style.top = `${y}px`;
  marquee.style.width = `${Math.abs(event.clientX - dragStart.x)}px`;
  marquee.style.height = `${Math.abs(event.clientY - dragStart.y)}px`;
});

window.addEventListener("mouseup", (event) => {
  renderer.setNavigationEnabled(true);
  if (!dragStart || !session) {
    dragStart = null;
    marquee.style.display = "none";
    return;
  }
  const rect: ScreenRect = {
    x0: dragStart.x,
    y0: dragStart.y,
    x1: event.clientX,
    y1: event.clientY,
  };
  dragStart = null;
  marquee.style.display = "none";
  const additive = event.shiftKey;
  const vertices = renderer.verticesInRect(rect);
  const edges = renderer.edgesInRect(rect);
  if (!additive) session.clearSelection();
  session.selectVertices(vertices, true);
  session.selectEdges(edges, true);
  renderer.refresh();
  updateStatus();
});

renderer.domElement.addEventListener("click", (event) => {
  if (!session || mode !== "click") return;
  // an orbit drag ends with a click event too; only treat short moves as picks
  if (
    pointerDownAt &&
    Math.hypot(event.clientX - pointerDownAt.x, event.clientY - pointerDownAt.y) > 5
  ) {
    return;
  }
  const hit = renderer.pickAt(event);
  if (!hit) {
    if (!event.shiftKey) {
      session.clearSelection();
      renderer.refresh();
      updateStatus();
    }
    return;
  }
  if (!event.shiftKey) session.clearSelection();
  if (hit.kind === "vertex" && hit.vertex !== undefined) session.toggleVertex(hit.vertex);
  if (hit.kind === "edge" && hit.edge !== undefined) session.toggleEdge(hit.edge);
  renderer.refresh();
  updateStatus();
});

buttons.del.addEventListener("click", () => {
  if (session) afterOp(session.deleteSelection());
});

buttons.addEdge.addEventListener("click", () => {
  if (session) afterOp(session.addEdgeBetweenSelection());
});

buttons.crop.addEventListener("click", () => {
  if (!session) return;
  const axis = Number(cropAxis.value) as Axis;
  const value = Number(cropValue.value);
  if (!Number.isFinite(value)) {
    showBanner("crop position must be a number", "warn");
    return;
  }
  afterOp(session.cropByPlane(axis, value, cropSide.value === "above"));
});

buttons.undo.addEventListener("click", () => {
  if (session && session.undo()) {
    hideBanner();
    renderer.refresh();
    updateStatus();
  }
});

buttons.clear.addEventListener("click", () => {
  if (!session) return;
  session.clearSelection();
  renderer.refresh();
  updateStatus();
});

buttons.export.addEventListener("click", () => {
  if (!session) {
    showBanner("load a graph before exporting", "warn");
    return;
  }
  const blob = new Blob([session.exportText()], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = "curation_edit.json";
  anchor.click();
  URL.revokeObjectURL(url);
  showBanner("curation edit exported", "info");
});

window.addEventListener("keydown", (event) => {
  if (!session) return;
  if (event.key === "Delete" || event.key === "Backspace") {
    afterOp(session.deleteSelection());
  } else if ((event.ctrlKey || event.metaKey) && event.key.toLowerCase() === "z") {
    if (session.undo()) {
      renderer.refresh();
      updateStatus();
    }
    event.preventDefault();
  } else if (event.key.toLowerCase() === "b") {
    mode = mode === "box" ? "click" : "box";
    modeBox.checked = mode === "box";
    modeClick.checked = mode === "click";
  }
});

updateStatus();
