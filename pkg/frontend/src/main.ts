/** Thin DOM wiring for the workbench. All state logic lives in the modules
 * this file instantiates; this file only moves values between them and the
 * document. */

import { ApiClient } from "./api.js";
import { CLASS_COLORS, CONTOUR_COLORS, OverlayModel } from "./overlay.js";
import type { ContourLayer } from "./overlay.js";
import { PolygonDraft, wholeFramePolygon } from "./polygon.js";
import { CLASS_LABELS, scorePanelView } from "./score.js";
import { WorkbenchSession } from "./session.js";
import { CELL_CLASSES } from "./types.js";
import type { CellClass, Report } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const api = new ApiClient({
  baseUrl: params.get("api") ?? "http://127.0.0.1:8787",
  token: params.get("token") ?? undefined,
});

const overlay = new OverlayModel();
const draft = new PolygonDraft();
let session: WorkbenchSession | null = null;
let currentFov: string | null = null;
let frameSize: [number, number] = [0, 0];
const exclusions = new Map<string, [number, number][][]>();

const status = el<HTMLDivElement>("status");
const canvas = el<HTMLCanvasElement>("viewer");
const fovList = el<HTMLUListElement>("fov-list");
const scorePanel = el<HTMLDivElement>("score-panel");
const toggles = el<HTMLDivElement>("layer-toggles");

function note(message: string): void {
  status.textContent = message;
}

function renderScore(report: Report): void {
  const view = scorePanelView(report);
  const rows = view.rows
    .map(
      (r) =>
        `<tr><td><span class="swatch" style="background:${CLASS_COLORS[r.cellClass]}"></span>` +
        `${r.label}</td><td>${r.count}</td><td>${r.proportion}</td></tr>`,
    )
    .join("");
  const warnings = view.warnings.map((w) => `<li>${w}</li>`).join("");
  scorePanel.innerHTML =
    `<h2>${view.headline}</h2><p>${view.detail}</p>` +
    `<table><tr><th>Class</th><th>Count</th><th>%</th></tr>${rows}</table>` +
    `<p>${view.total} cells in ${view.includedFovs} FOV(s)</p>` +
    (warnings ? `<ul class="warnings">${warnings}</ul>` : "");
}

function renderFovList(): void {
  if (!session) return;
  fovList.innerHTML = "";
  for (const fov of session.fovList) {
    const li = document.createElement("li");
    const pick = document.createElement("button");
    pick.textContent = `${fov.fov_id} (${fov.total} cells, ${fov.objective})`;
    pick.onclick = () => void selectFov(fov.fov_id);
    const include = document.createElement("input");
    include.type = "checkbox";
    include.checked = fov.included;
    include.onchange = () => void session?.setIncluded(fov.fov_id, include.checked);
    li.append(include, pick);
    fovList.append(li);
  }
}

function draw(): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || !currentFov) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const img = new Image();
  img.onload = () => {
    frameSize = [img.width, img.height];
    canvas.width = img.width;
    canvas.height = img.height;
    ctx.drawImage(img, 0, 0);
    drawGeometry(ctx);
  };
  if (session) img.src = api.overlayPngUrl(session.sessionId, currentFov);
}

function drawGeometry(ctx: CanvasRenderingContext2D): void {
  for (const contour of overlay.visibleContours()) {
    ctx.strokeStyle = CONTOUR_COLORS[contour.complete ? "complete" : "incomplete"];
    ctx.beginPath();
    contour.polyline.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }
  for (const point of overlay.visiblePoints()) {
    ctx.fillStyle = CLASS_COLORS[point.class];
    ctx.beginPath();
    ctx.arc(point.x, point.y, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
  if (draft.active) {
    ctx.strokeStyle = "black";
    ctx.beginPath();
    draft.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }
}

function renderToggles(): void {
  toggles.innerHTML = "";
  const addToggle = (label: string, color: string, visible: boolean, flip: () => void): void => {
    const button = document.createElement("button");
    button.innerHTML = `<span class="swatch" style="background:${color}"></span>${label}`;
    button.classList.toggle("off", !visible);
    button.onclick = () => {
      flip();
      renderToggles();
      draw();
    };
    toggles.append(button);
  };
  for (const c of CELL_CLASSES) {
    addToggle(CLASS_LABELS[c], CLASS_COLORS[c], overlay.isClassVisible(c), () => overlay.toggleClass(c));
  }
  for (const layer of ["complete", "incomplete"] as ContourLayer[]) {
    addToggle(
      `${layer} contours`,
      CONTOUR_COLORS[layer],
      overlay.isContourLayerVisible(layer),
      () => overlay.toggleContourLayer(layer),
    );
  }
}

async function selectFov(fovId: string): Promise<void> {
  currentFov = fovId;
  if (!session) return;
  overlay.setGeometry(await session.refreshOverlay(fovId));
  draw();
}

async function start(): Promise<void> {
  session = await WorkbenchSession.create(api, {
    onFovsChanged: renderFovList,
    onReportChanged: renderScore,
    onOverlayChanged: (fovId, geometry) => {
      if (fovId === currentFov) {
        overlay.setGeometry(geometry);
        draw();
      }
    },
    onError: note,
  });
  note(`session ${session.sessionId}`);

  const bind = (inputId: string, key: "t_weak" | "t_intense" | "d"): void => {
    const input = el<HTMLInputElement>(inputId);
    input.value = String(session?.thresholds.displayValues[key] ?? "");
    input.oninput = () => {
      if (!session?.thresholds.setValue(key, Number(input.value))) {
        input.value = String(session?.thresholds.displayValues[key] ?? "");
      }
    };
  };
  bind("t-weak", "t_weak");
  bind("t-intense", "t_intense");
  bind("d", "d");

  el<HTMLInputElement>("fov-file").onchange = async (ev) => {
    const files = (ev.target as HTMLInputElement).files;
    if (!files || !session) return;
    const objective = el<HTMLSelectElement>("objective").value;
    for (const file of files) {
      note(`processing ${file.name}…`);
      const summary = await session.addFov(file, objective);
      note(`${summary.fov_id}: ${summary.total} cells`);
      await selectFov(summary.fov_id);
    }
  };

  canvas.onclick = async (ev) => {
    if (!session || !currentFov) return;
    const rect = canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    if (el<HTMLInputElement>("draw-mode").checked) {
      draft.addVertex(x, y);
      draw();
      return;
    }
    const hit = overlay.hitTest(x, y, 12);
    if (hit === null) return;
    const cls = el<HTMLSelectElement>("override-class").value;
    await session.overrideCell(currentFov, hit, cls === "clear" ? null : cls);
  };

  el<HTMLButtonElement>("close-polygon").onclick = async () => {
    if (!session || !currentFov || !draft.canClose) return;
    const polys = exclusions.get(currentFov) ?? [];
    polys.push(draft.close());
    exclusions.set(currentFov, polys);
    await session.setExclusions(currentFov, polys);
  };
  el<HTMLButtonElement>("cancel-polygon").onclick = () => {
    draft.cancel();
    draw();
  };
  el<HTMLButtonElement>("exclude-all").onclick = async () => {
    if (!session || !currentFov) return;
    const polys = [wholeFramePolygon(frameSize[0], frameSize[1])];
    exclusions.set(currentFov, polys);
    await session.setExclusions(currentFov, polys);
  };
  el<HTMLButtonElement>("clear-exclusions").onclick = async () => {
    if (!session || !currentFov) return;
    exclusions.set(currentFov, []);
    await session.setExclusions(currentFov, []);
  };

  renderToggles();
  const overrideClass = el<HTMLSelectElement>("override-class");
  overrideClass.innerHTML =
    `<option value="clear">clear override</option>` +
    CELL_CLASSES.map((c: CellClass) => `<option value="${c}">${CLASS_LABELS[c]}</option>`).join("");
}

start().catch((err) => note(String(err)));
