// Browser entry point: folder intake, zoomed canvas, click-to-place
// workflow, autosave, CSV download. All annotation logic lives in the
// DOM-free modules next to this file; this one only wires events.

import { FRAME, LANDMARK_NAMES, ZOOM, captureCoordinate } from './landmarks';
import {
  currentImage,
  isComplete,
  newSession,
  placePoint,
  selectImage,
  selectPoint,
  skipPoint,
  undo,
  type Session,
} from './session';
import { canExport, exportTable } from './csv';
import { STORAGE_KEY, restoreSession, serializeSession } from './storage';
import { parsePgm, toRgba } from './pgm';

const CANVAS_SIZE = FRAME * ZOOM;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>('canvas');
const ctx = canvas.getContext('2d')!;
const picker = el<HTMLInputElement>('picker');
const pointList = el<HTMLOListElement>('points');
const imageLabel = el<HTMLElement>('image-label');
const statusLabel = el<HTMLElement>('status');
const prevButton = el<HTMLButtonElement>('prev');
const nextButton = el<HTMLButtonElement>('next');
const skipButton = el<HTMLButtonElement>('skip');
const undoButton = el<HTMLButtonElement>('undo');
const exportButton = el<HTMLButtonElement>('export');
const clearButton = el<HTMLButtonElement>('clear');

let session: Session = newSession([]);
const bitmaps = new Map<string, HTMLCanvasElement>();

// ------------------------------------------------------------- intake

function stem(name: string): string {
  const dot = name.lastIndexOf('.');
  const base = dot > 0 ? name.slice(0, dot) : name;
  // ids become CSV cells; commas or newlines would shift columns
  return base.replace(/[,\r\n]/g, '_');
}

/** Draw any source size onto a native 96x96 canvas, like the training
 *  pipeline's resize-on-load. */
function toFrame(source: CanvasImageSource, w: number, h: number): HTMLCanvasElement {
  const off = document.createElement('canvas');
  off.width = FRAME;
  off.height = FRAME;
  const c = off.getContext('2d')!;
  c.drawImage(source, 0, 0, w, h, 0, 0, FRAME, FRAME);
  return off;
}

async function loadFile(file: File): Promise<HTMLCanvasElement> {
  if (/\.pgm$/i.test(file.name)) {
    const image = parsePgm(await file.arrayBuffer());
    const raw = document.createElement('canvas');
    raw.width = image.width;
    raw.height = image.height;
    raw.getContext('2d')!.putImageData(
      new ImageData(toRgba(image), image.width, image.height), 0, 0);
    return toFrame(raw, image.width, image.height);
  }
  const bitmap = await createImageBitmap(file);
  return toFrame(bitmap, bitmap.width, bitmap.height);
}

async function onPick(): Promise<void> {
  const files = Array.from(picker.files ?? [])
    .filter((f) => /\.(pgm|png)$/i.test(f.name))
    .sort((a, b) => (a.name < b.name ? -1 : a.name > b.name ? 1 : 0));
  if (!files.length) {
    statusLabel.textContent = 'no .pgm or .png files in that selection';
    return;
  }
  bitmaps.clear();
  const ids: string[] = [];
  const seen = new Map<string, number>();
  for (const file of files) {
    let id = stem(file.name);
    const n = (seen.get(id) ?? 0) + 1;
    seen.set(id, n);
    if (n > 1) id = `${id}_${n}`;
    try {
      bitmaps.set(id, await loadFile(file));
      ids.push(id);
    } catch (err) {
      statusLabel.textContent = `${file.name}: ${(err as Error).message}`;
    }
  }
  session = restoreSession(localStorage.getItem(STORAGE_KEY), ids);
  render();
}

// ------------------------------------------------------------ actions

function autosave(): void {
  localStorage.setItem(STORAGE_KEY, serializeSession(session));
}

function flashReject(): void {
  canvas.classList.add('reject');
  setTimeout(() => canvas.classList.remove('reject'), 180);
}

function onCanvasClick(event: MouseEvent): void {
  const rect = canvas.getBoundingClientRect();
  const cx = (event.clientX - rect.left) * (canvas.width / rect.width);
  const cy = (event.clientY - rect.top) * (canvas.height / rect.height);
  const coords = captureCoordinate(cx, cy);
  if (!coords || !placePoint(session, coords.x, coords.y)) {
    flashReject();
    return;
  }
  autosave();
  render();
}

function onKey(event: KeyboardEvent): void {
  if (event.target instanceof HTMLInputElement) return;
  if (event.key === 's') mutate(skipPoint);
  else if (event.key === 'u' || (event.ctrlKey && event.key === 'z')) mutate(undo);
  else if (event.key === 'ArrowLeft') step(-1);
  else if (event.key === 'ArrowRight') step(1);
}

function mutate(action: (s: Session) => boolean): void {
  if (!action(session)) return;
  autosave();
  render();
}

function step(delta: number): void {
  if (selectImage(session, session.current + delta)) render();
}

function onExport(): void {
  const blob = new Blob([exportTable(session)], { type: 'text/csv' });
  const link = document.createElement('a');
  link.href = URL.createObjectURL(blob);
  link.download = 'landmarks.csv';
  link.click();
  URL.revokeObjectURL(link.href);
}

function onClear(): void {
  localStorage.removeItem(STORAGE_KEY);
  session = newSession(session.images.map((im) => im.id));
  render();
}

// ------------------------------------------------------------- render

const MARK = 5; // crosshair arm length in display pixels

function drawMarker(x: number, y: number, active: boolean): void {
  const dx = x * ZOOM;
  const dy = y * ZOOM;
  ctx.strokeStyle = active ? '#ff3b30' : '#19a84c';
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo(dx - MARK, dy);
  ctx.lineTo(dx + MARK, dy);
  ctx.moveTo(dx, dy - MARK);
  ctx.lineTo(dx, dy + MARK);
  ctx.stroke();
}

function render(): void {
  const image = currentImage(session);
  ctx.clearRect(0, 0, CANVAS_SIZE, CANVAS_SIZE);
  if (!image) {
    imageLabel.textContent = 'no images loaded';
    statusLabel.textContent = 'choose a folder of .pgm or .png crops';
    pointList.replaceChildren();
    exportButton.disabled = true;
    return;
  }
  const bitmap = bitmaps.get(image.id);
  if (bitmap) {
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(bitmap, 0, 0, CANVAS_SIZE, CANVAS_SIZE);
  }
  image.draft.forEach((point, i) => {
    if (point.kind === 'placed') {
      drawMarker(point.x, point.y, i === image.pointIndex);
    }
  });

  imageLabel.textContent =
    `${session.current + 1}/${session.images.length}  ${image.id}` +
    (isComplete(image.draft) ? '  (complete)' : '');
  statusLabel.textContent = image.pointIndex === null
    ? 'all 15 points decided; click a row to adjust one'
    : `place ${image.pointIndex + 1}/15: ${LANDMARK_NAMES[image.pointIndex]}`;

  const rows = image.draft.map((point, i) => {
    const row = document.createElement('li');
    const state = point.kind === 'placed'
      ? `${point.x}, ${point.y}`
      : point.kind === 'skipped' ? 'missing' : '';
    row.textContent = `${LANDMARK_NAMES[i]}  ${state}`;
    if (i === image.pointIndex) row.className = 'active';
    else if (point.kind === 'skipped') row.className = 'skipped';
    row.addEventListener('click', () => {
      selectPoint(session, i);
      render();
    });
    return row;
  });
  pointList.replaceChildren(...rows);

  prevButton.disabled = session.current === 0;
  nextButton.disabled = session.current >= session.images.length - 1;
  exportButton.disabled = !canExport(session);
}

picker.addEventListener('change', () => void onPick());
canvas.addEventListener('click', onCanvasClick);
document.addEventListener('keydown', onKey);
prevButton.addEventListener('click', () => step(-1));
nextButton.addEventListener('click', () => step(1));
skipButton.addEventListener('click', () => mutate(skipPoint));
undoButton.addEventListener('click', () => mutate(undo));
exportButton.addEventListener('click', onExport);
clearButton.addEventListener('click', onClear);

canvas.width = CANVAS_SIZE;
canvas.height = CANVAS_SIZE;
render();
