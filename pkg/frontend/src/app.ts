/*
 * Editor shell: wires the DOM controls, canvas interaction and the
 * session state machine together. Load index.html from any static file
 * server; the session service URL is configurable in the top bar.
 */

import { ServiceClient, ServiceError } from './api.js';
import {
  drawCurve, drawHandles, drawImageLayer, drawTruthOverlay,
} from './canvas.js';
import { EditorSession } from './session.js';
import type { Vec2 } from './spline.js';
import {
  canvasToWorld, fitView, identityView, pan, pickHandle, zoomAt,
  type ViewTransform,
} from './viewport.js';

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const canvas = $<HTMLCanvasElement>('scene');
const ctx = canvas.getContext('2d')!;
const statusLine = $<HTMLElement>('status');

let client: ServiceClient | null = null;
let session: EditorSession | null = null;
let view: ViewTransform = identityView();
let imageBitmap: ImageBitmap | null = null;
let truthBitmap: ImageBitmap | null = null;
let imageDims: [number, number] = [0, 0];
let studyMode = false;

interface DragState {
  index: number;
  lastXy: Vec2;
  moved: boolean;
}
let drag: DragState | null = null;
let panning: { x: number; y: number } | null = null;
let previewSegments: Map<string, Vec2[]> | null = null;

const say = (text: string, isError = false): void => {
  statusLine.textContent = text;
  statusLine.className = isError ? 'error' : '';
};

const fileToBase64 = (file: File): Promise<string> =>
  new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(reader.error);
    reader.onload = () => {
      const url = reader.result as string;
      resolve(url.slice(url.indexOf(',') + 1));
    };
    reader.readAsDataURL(file);
  });

function redraw(): void {
  drawImageLayer(ctx, imageBitmap, view, imageDims[0], imageDims[1]);
  if (studyMode && truthBitmap) {
    drawTruthOverlay(ctx, truthBitmap, view, imageDims[0], imageDims[1]);
  }
  if (session) {
    drawCurve(ctx, session, view, previewSegments);
    drawHandles(ctx, session.masters, session.slaves, view,
                drag ? { index: drag.index, xy: drag.lastXy } : null);
  }
}

function refreshMetrics(): void {
  if (!session) return;
  const live = session.liveMetrics(session.exported ? null : Date.now());
  $('m-moves').textContent = String(live.moves);
  $('m-elapsed').textContent = live.elapsedS.toFixed(1);
  $('m-manip').textContent =
    live.manipulation === null ? '-' : live.manipulation.toFixed(3);
  $('m-effort').textContent =
    live.effort === null ? '-' : live.effort.toFixed(3);
  $('m-eff').textContent =
    live.efficiency === null ? '-' : live.efficiency.toFixed(4);
  const theta = session.thetaBefore;
  $('m-theta').textContent =
    theta === null ? (studyMode ? 'hidden until export' : '-')
                   : theta.toFixed(4);
}

async function connect(): Promise<void> {
  client = new ServiceClient($<HTMLInputElement>('server-url').value);
  const [models, schedules] = await Promise.all([
    client.listModels(), client.listSchedules(),
  ]);
  const modelSel = $<HTMLSelectElement>('model');
  modelSel.innerHTML = '';
  for (const m of models.models) {
    const opt = document.createElement('option');
    opt.value = m.id;
    opt.textContent = `${m.id} (${m.points} pts, g=${m.g})`;
    modelSel.appendChild(opt);
  }
  const schedSel = $<HTMLSelectElement>('schedule');
  schedSel.innerHTML = '<option value="">single level</option>';
  for (const s of schedules.schedules) {
    const opt = document.createElement('option');
    opt.value = s.id;
    opt.textContent = `${s.id} (${s.resolutions.join('/')})`;
    schedSel.appendChild(opt);
  }
  say(`connected: ${models.models.length} models, `
      + `${schedules.schedules.length} schedules`);
}

async function createSession(): Promise<void> {
  if (!client) throw new Error('connect first');
  const imageFile = $<HTMLInputElement>('image-file').files?.[0];
  if (!imageFile) throw new Error('choose an image');
  const truthFile = $<HTMLInputElement>('truth-file').files?.[0];
  studyMode = $<HTMLInputElement>('study-mode').checked;

  const req: Parameters<ServiceClient['createSession']>[0] = {
    image: await fileToBase64(imageFile),
    model: $<HTMLSelectElement>('model').value,
    study_mode: studyMode,
  };
  if (truthFile) req.truth = await fileToBase64(truthFile);
  const channel = $<HTMLInputElement>('channel').value.trim();
  if (channel) req.channel = channel;

  const created = await client.createSession(req);
  session = new EditorSession(client, created.id, created.token,
                              Number($<HTMLInputElement>('density').value));
  session.onConflict = (err) => say(`edit rejected: ${err.detail}`, true);
  imageDims = [created.width, created.height];

  // the service serves the display image (inverted in study mode)
  const imgResp = await fetch(client.imageUrl(created.id));
  imageBitmap = await createImageBitmap(await imgResp.blob());
  truthBitmap = null;
  if (studyMode) {
    const truthResp = await fetch(client.truthUrl(created.id));
    truthBitmap = await createImageBitmap(await truthResp.blob());
  }
  view = fitView(created.width, created.height, canvas.width, canvas.height);
  say(`session ${created.id.slice(0, 8)} created `
      + `(${created.width}x${created.height})`);
  redraw();
}

async function runSegmentation(): Promise<void> {
  if (!session) throw new Error('create a session first');
  const schedule = $<HTMLSelectElement>('schedule').value || null;
  say('segmenting...');
  await session.segment(schedule);
  say('segmentation done; drag master points to correct the contour');
  previewSegments = null;
  redraw();
  refreshMetrics();
}

async function doExport(): Promise<void> {
  if (!session) throw new Error('nothing to export');
  const payload = await session.exportSession(Date.now());
  refreshMetrics();
  if (payload.theta_after !== null) {
    $('m-theta').textContent = `${payload.theta_before?.toFixed(4)} -> `
      + payload.theta_after.toFixed(4);
  }
  const downloads = $('downloads');
  downloads.innerHTML = '';
  const offer = (name: string, blob: Blob): void => {
    const a = document.createElement('a');
    a.href = URL.createObjectURL(blob);
    a.download = name;
    a.textContent = name;
    downloads.appendChild(a);
  };
  offer('contour.json', new Blob([JSON.stringify(payload.contour, null, 2)],
                                 { type: 'application/json' }));
  const maskBytes = Uint8Array.from(atob(payload.mask), (c) => c.charCodeAt(0));
  offer('mask.png', new Blob([maskBytes], { type: 'image/png' }));
  offer('events.log', new Blob([payload.event_log], { type: 'text/plain' }));
  say(`exported after ${payload.moves} moves; session is now read-only`);
  redraw();
}

// -- canvas interaction

canvas.addEventListener('pointerdown', (ev) => {
  if (!session || session.exported || session.masters.length === 0) {
    panning = { x: ev.offsetX, y: ev.offsetY };
    return;
  }
  const picked = pickHandle(session.masters, view, ev.offsetX, ev.offsetY);
  if (picked === null) {
    panning = { x: ev.offsetX, y: ev.offsetY };
    return;
  }
  const m = session.masters[picked];
  drag = { index: m.index, lastXy: [m.x, m.y], moved: false };
  canvas.setPointerCapture(ev.pointerId);
});

canvas.addEventListener('pointermove', (ev) => {
  if (panning) {
    view = pan(view, ev.offsetX - panning.x, ev.offsetY - panning.y);
    panning = { x: ev.offsetX, y: ev.offsetY };
    redraw();
    return;
  }
  if (!drag || !session) return;
  const world = canvasToWorld([ev.offsetX, ev.offsetY], view);
  drag.lastXy = world;
  drag.moved = true;
  previewSegments = session.previewMove(drag.index, world[0], world[1]).segments;
  redraw();
});

canvas.addEventListener('pointerup', () => {
  panning = null;
  if (!drag || !session) return;
  const { index, lastXy, moved } = drag;
  drag = null;
  previewSegments = null;
  if (moved) {
    // a click without displacement sends nothing
    session.releaseDrag(index, lastXy[0], lastXy[1], Date.now());
    void session.flush().then(() => {
      redraw();
      refreshMetrics();
    });
  }
  redraw();
});

canvas.addEventListener('wheel', (ev) => {
  ev.preventDefault();
  view = zoomAt(view, ev.deltaY < 0 ? 1.2 : 1 / 1.2, ev.offsetX, ev.offsetY);
  redraw();
});

const guard = (fn: () => Promise<void>) => (): void => {
  fn().catch((err) => {
    const msg = err instanceof ServiceError ? err.detail : String(err);
    say(msg, true);
  });
};

$('connect').addEventListener('click', guard(connect));
$('create').addEventListener('click', guard(createSession));
$('segment').addEventListener('click', guard(runSegmentation));
$('export').addEventListener('click', guard(doExport));
setInterval(refreshMetrics, 500);
redraw();
