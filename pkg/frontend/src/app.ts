/** Browser wiring: image loading, click-to-query, overlay blitting, the
 * articulation scrubber, label editing and export download.
 *
 * All geometry/drawing logic lives in the pure modules; this file only
 * connects them to the DOM.
 */

import { ApiClient, ServiceError } from "./api.js";
import { canvasToNorm, IDENTITY_VIEW, type ViewTransform } from "./coords.js";
import { exportJson } from "./export.js";
import { chipLabel, renderOverlay } from "./overlay.js";
import { Scrubber } from "./scrub.js";
import { SessionState } from "./session.js";
import type { RenderResponse } from "./types.js";

interface Elements {
  photo: HTMLCanvasElement;
  overlay: HTMLCanvasElement;
  chip: HTMLElement;
  toast: HTMLElement;
  scrub: HTMLInputElement;
  frame: HTMLImageElement;
  fileInput: HTMLInputElement;
  exportBtn: HTMLButtonElement;
  offlineToggle: HTMLInputElement;
  baseUrl: HTMLInputElement;
}

export class App {
  session = new SessionState();
  api: ApiClient;
  view: ViewTransform = { ...IDENTITY_VIEW };
  private clip: RenderResponse | null = null;
  private scrubber: Scrubber | null = null;
  private queuedClicks: Array<{ x: number; y: number }> = [];

  constructor(
    private el: Elements,
    baseUrl = "http://localhost:8000",
  ) {
    this.api = new ApiClient({ baseUrl });
    el.fileInput.addEventListener("change", () => void this.onFile());
    el.overlay.addEventListener("click", (e) => void this.onClick(e));
    el.scrub.addEventListener("input", () => this.onScrub());
    el.exportBtn.addEventListener("click", () => this.onExport());
    el.offlineToggle.addEventListener("change", () => void this.onOfflineToggle());
    el.baseUrl.addEventListener("change", () => {
      this.api = new ApiClient({ baseUrl: el.baseUrl.value });
    });
  }

  toast(message: string): void {
    this.el.toast.textContent = message;
    this.el.toast.classList.add("visible");
    setTimeout(() => this.el.toast.classList.remove("visible"), 4000);
  }

  private async onOfflineToggle(): Promise<void> {
    if (this.el.offlineToggle.checked) {
      const canned = await (await fetch("fixtures/canned.json")).json();
      this.api.useCanned(canned);
      this.toast("offline mode: replaying canned responses");
    } else {
      this.api = new ApiClient({ baseUrl: this.el.baseUrl.value });
    }
  }

  private async onFile(): Promise<void> {
    const file = this.el.fileInput.files?.[0];
    if (!file) return;
    const buf = new Uint8Array(await file.arrayBuffer());
    let bin = "";
    for (const b of buf) bin += String.fromCharCode(b);
    const b64 = btoa(bin);
    const img = new Image();
    img.onload = () => {
      this.session.loadImage(file.name, b64, img.width, img.height);
      for (const c of [this.el.photo, this.el.overlay]) {
        c.width = img.width;
        c.height = img.height;
      }
      this.el.photo.getContext("2d")!.drawImage(img, 0, 0);
      this.el.overlay.getContext("2d")!.clearRect(0, 0, img.width, img.height);
      this.el.chip.textContent = "";
    };
    img.src = `data:image/png;base64,${b64}`;
  }

  private async onClick(e: MouseEvent): Promise<void> {
    if (this.session.imageData === null) {
      this.toast("load an image first");
      return;
    }
    const rect = this.el.overlay.getBoundingClientRect();
    const { x, y } = canvasToNorm(
      e.clientX - rect.left,
      e.clientY - rect.top,
      this.view,
      this.session.imageW,
      this.session.imageH,
    );
    const { index, token } = this.session.addQuery(x, y);
    try {
      const res = await this.api.predict(this.session.imageData, [{ x, y }]);
      const fresh = this.session.applyPrediction(index, token, res.points[0]!);
      if (!fresh) return; // a newer click superseded this answer
      this.redraw();
      void this.fetchClip({ x, y });
    } catch (err) {
      if (err instanceof ServiceError) {
        this.toast(`service error ${err.status}: ${err.message}`);
        this.queuedClicks.push({ x, y }); // retried when the service is back
      } else {
        this.toast(String(err));
      }
    }
  }

  redraw(): void {
    const q = this.session.selectedQuery;
    const ctx = this.el.overlay.getContext("2d")!;
    ctx.clearRect(0, 0, this.session.imageW, this.session.imageH);
    if (!q?.prediction) return;
    const layer = renderOverlay(q.prediction, this.session.imageW, this.session.imageH);
    const pixels = new Uint8ClampedArray(layer.data); // fresh non-shared buffer for ImageData
    ctx.putImageData(new ImageData(pixels, layer.width, layer.height), 0, 0);
    this.el.chip.textContent = chipLabel(q.prediction);
  }

  private async fetchClip(point: { x: number; y: number }): Promise<void> {
    try {
      this.clip = await this.api.render(this.session.imageData!, point);
      this.scrubber = new Scrubber(this.clip.frame_urls.length);
      this.el.scrub.value = "0";
      this.showFrame(0);
    } catch {
      this.clip = null; // not articulable here; the scrubber stays inert
      this.scrubber = null;
    }
  }

  private onScrub(): void {
    if (!this.clip || !this.scrubber) return;
    const position = Number(this.el.scrub.value) / Number(this.el.scrub.max || "100");
    this.showFrame(this.scrubber.drag(position));
  }

  private showFrame(index: number): void {
    if (!this.clip) return;
    const url = this.clip.frame_urls[index];
    if (url) this.el.frame.src = this.api.frameUrl(url);
  }

  private onExport(): void {
    try {
      const json = exportJson(this.session);
      const blob = new Blob([json], { type: "application/json" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = `${this.session.imageId ?? "session"}_annotations.json`;
      a.click();
      URL.revokeObjectURL(a.href);
    } catch (err) {
      this.toast(String(err));
    }
  }
}

export function mount(): App {
  const get = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;
  return new App({
    photo: get("photo"),
    overlay: get("overlay"),
    chip: get("chip"),
    toast: get("toast"),
    scrub: get("scrub"),
    frame: get("frame"),
    fileInput: get("file-input"),
    exportBtn: get("export-btn"),
    offlineToggle: get("offline-toggle"),
    baseUrl: get("base-url"),
  });
}
