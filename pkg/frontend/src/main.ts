// DOM wiring: forms and buttons drive UiSession flows; the render loop drives
// playback and the three.js viewer.

import { PLAYBACK_FPS } from "./playback";
import { ProtocolClient, WebSocketTransport, type MotionJson } from "./protocol";
import { AVATAR_STYLES, UiSession, type ExportFormat } from "./session";
import { drawThumbnail } from "./thumbnails";
import { Viewer3d } from "./viewer3d";

const STYLE_NAMES = ["angry", "childlike", "depressed", "happy", "proud", "strutting"];
const BODY_PARTS = ["upper_body", "lower_body", "left_arm", "right_arm", "left_leg", "right_leg"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function saveFile(filename: string, mimeType: string, content: string, isBase64: boolean): void {
  const bytes = isBase64
    ? Uint8Array.from(atob(content), (c) => c.charCodeAt(0))
    : new TextEncoder().encode(content);
  const blob = new Blob([bytes], { type: mimeType });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}

function main(): void {
  const wsUrl = `ws://${location.host}/ws`;
  const socket = new WebSocket(wsUrl);
  const client = new ProtocolClient(new WebSocketTransport(socket));
  const session = new UiSession(client);
  session.connection = "connecting";
  socket.addEventListener("open", () => {
    session.connection = "connected";
    void session.refreshGallery().then(renderGallery);
    renderStatus();
  });
  socket.addEventListener("close", () => {
    session.connection = "disconnected";
    renderStatus();
  });

  const viewer = new Viewer3d(el("viewer"));

  const statusBox = el("status");
  const errorBox = el("error-banner");
  const thumbs = el("thumbnails");
  const galleryBox = el("gallery");
  const frameLabel = el("frame-label");
  const seekBar = el<HTMLInputElement>("seek");

  function renderStatus(): void {
    statusBox.textContent = `${session.connection}${session.busy ? " · working…" : ""}`;
  }

  function renderError(): void {
    errorBox.textContent = session.errorBanner ?? "";
    errorBox.style.display = session.errorBanner ? "block" : "none";
  }

  function renderThumbnails(): void {
    thumbs.replaceChildren();
    for (const variant of session.variants) {
      const tile = document.createElement("div");
      tile.className = "thumb";
      const canvas = document.createElement("canvas");
      if (variant.motion) drawThumbnail(canvas, variant.motion);
      tile.appendChild(canvas);
      const label = document.createElement("span");
      label.textContent = `${variant.duration_s.toFixed(1)} s`;
      tile.appendChild(label);
      tile.addEventListener("click", () => {
        void session.select(variant.id).then((ok) => {
          if (ok && session.selectedMotion) loadViewer(session.selectedMotion);
          renderAll();
        });
      });
      thumbs.appendChild(tile);
    }
  }

  function renderGallery(): void {
    galleryBox.replaceChildren();
    for (const item of session.gallery) {
      const entry = document.createElement("div");
      entry.className = "gallery-item";
      if (session.gallerySelection.includes(item.id)) entry.classList.add("selected");
      entry.textContent = `${item.id.slice(0, 8)}… (${item.duration_s.toFixed(1)} s)`;
      entry.addEventListener("click", () => {
        session.toggleGallerySelection(item.id);
        renderGallery();
        renderBlendButton();
      });
      const view = document.createElement("button");
      view.textContent = "view";
      view.addEventListener("click", (event) => {
        event.stopPropagation();
        void session.select(item.id).then((ok) => {
          if (ok && session.selectedMotion) loadViewer(session.selectedMotion);
          renderAll();
        });
      });
      entry.appendChild(view);
      galleryBox.appendChild(entry);
    }
    renderBlendButton();
  }

  function renderBlendButton(): void {
    el<HTMLButtonElement>("blend").disabled = !session.canBlend;
  }

  function loadViewer(motion: MotionJson): void {
    viewer.loadMotion(motion);
    seekBar.max = String(Math.max(0, motion.frames.length - 1));
    seekBar.value = "0";
  }

  function renderAll(): void {
    renderStatus();
    renderError();
    renderThumbnails();
    renderGallery();
  }

  el<HTMLButtonElement>("generate").addEventListener("click", () => {
    const prompt = el<HTMLInputElement>("prompt").value.trim();
    const duration = Number(el<HTMLInputElement>("duration").value);
    if (!prompt) return;
    renderStatus();
    void session.generate(prompt, duration).then(renderAll);
    renderStatus();
  });

  el<HTMLButtonElement>("extend").addEventListener("click", () => {
    const seconds = Number(el<HTMLInputElement>("extend-seconds").value);
    void session.extendSelected(seconds).then(() => {
      if (session.selectedMotion) loadViewer(session.selectedMotion);
      renderAll();
    });
  });

  const styleSelect = el<HTMLSelectElement>("style-name");
  for (const name of STYLE_NAMES) {
    styleSelect.add(new Option(name, name));
  }
  el<HTMLButtonElement>("apply-style").addEventListener("click", () => {
    void session.styleSelected(styleSelect.value).then(() => {
      if (session.selectedMotion) loadViewer(session.selectedMotion);
      renderAll();
    });
  });

  const partSelect = el<HTMLSelectElement>("body-part");
  for (const part of BODY_PARTS) {
    partSelect.add(new Option(part, part));
  }
  el<HTMLButtonElement>("apply-part").addEventListener("click", () => {
    const prompt = el<HTMLInputElement>("part-prompt").value.trim();
    if (!prompt) return;
    void session.partialBodyEdit(partSelect.value, prompt).then(() => {
      if (session.selectedMotion) loadViewer(session.selectedMotion);
      renderAll();
    });
  });

  el<HTMLButtonElement>("blend").addEventListener("click", () => {
    void session.blendSelected().then(() => {
      if (session.selectedMotion) loadViewer(session.selectedMotion);
      renderAll();
    });
  });

  el<HTMLButtonElement>("add-to-gallery").addEventListener("click", () => {
    void session.addSelectedToGallery().then(renderAll);
  });

  el<HTMLButtonElement>("download").addEventListener("click", () => {
    if (!session.selectedId) return;
    const format = el<HTMLSelectElement>("download-format").value as ExportFormat;
    void session.download(session.selectedId, format).then((file) => {
      if (file) saveFile(file.filename, file.mimeType, file.content, file.isBase64);
      renderError();
    });
  });

  el<HTMLInputElement>("import-file").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    void file.text().then((text) => {
      const doc = JSON.parse(text) as MotionJson;
      void session.importPose(doc, file.name).then(() => {
        if (session.selectedMotion) loadViewer(session.selectedMotion);
        renderAll();
      });
    });
  });

  el<HTMLButtonElement>("play").addEventListener("click", () => session.playback.play());
  el<HTMLButtonElement>("pause").addEventListener("click", () => session.playback.pause());
  seekBar.addEventListener("input", () => session.playback.seek(Number(seekBar.value)));

  const meshToggle = el<HTMLInputElement>("show-mesh");
  const skeletonToggle = el<HTMLInputElement>("show-skeleton");
  const avatarSelect = el<HTMLSelectElement>("avatar-style");
  for (const style of AVATAR_STYLES) {
    avatarSelect.add(new Option(style, style));
  }

  let last = performance.now();
  function frame(now: number): void {
    const dt = (now - last) / 1000;
    last = now;
    session.playback.tick(dt);
    session.showMesh = meshToggle.checked;
    session.showSkeleton = skeletonToggle.checked;
    session.avatarStyle = avatarSelect.value as typeof session.avatarStyle;
    if (session.selectedMotion) {
      viewer.showFrame(session.playback.cursor, session.avatarStyle,
                       session.showMesh, session.showSkeleton);
      frameLabel.textContent =
        `frame ${session.playback.cursor}/${Math.max(0, session.playback.frames - 1)}` +
        ` @ ${PLAYBACK_FPS} fps`;
      if (session.playback.playing) seekBar.value = String(session.playback.cursor);
    }
    viewer.render();
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

main();
