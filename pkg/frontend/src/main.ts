// DOM wiring for the material editor: open a session, show the channel
// grid, drive the sliders, display composed results, export artifacts.

import { ComposeApi, SessionInfo } from "./api.js";
import { EditorSession } from "./state.js";

const CHANNEL_LEGENDS: Record<string, string> = {
  normal: "surface normals, [-1,1] mapped to RGB",
  depth: "normalized view depth, [0,1]",
  albedo: "base color, [0,1]",
  rmt: "roughness / metallic / transparency pack",
  roughness: "microfacet roughness, [0,1]",
  metallic: "metallic blend, [0,1]",
  transparency: "thin-surface transparency, [0,1]",
  irradiance: "diffuse irradiance (HDR, tonemapped preview)",
  reflection: "mirror reflection image (HDR, tonemapped preview)",
  background: "radiance behind transparent surfaces",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function download(name: string, blob: Blob): void {
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = name;
  a.click();
  URL.revokeObjectURL(a.href);
}

class EditorApp {
  api = new ComposeApi("");
  session: EditorSession | null = null;

  constructor() {
    el<HTMLButtonElement>("open-btn").addEventListener("click", () => void this.open());
    for (const name of ["roughness", "metallic", "transparency"] as const) {
      const slider = el<HTMLInputElement>(`slider-${name}`);
      slider.addEventListener("input", () => {
        this.session?.setParam(name, parseFloat(slider.value));
        this.syncControls();
      });
    }
    el<HTMLInputElement>("albedo-color").addEventListener("input", () => {
      const hex = el<HTMLInputElement>("albedo-color").value;
      const rgb: [number, number, number] = [
        parseInt(hex.slice(1, 3), 16) / 255,
        parseInt(hex.slice(3, 5), 16) / 255,
        parseInt(hex.slice(5, 7), 16) / 255,
      ];
      this.session?.setParam("albedo", rgb);
    });
    el<HTMLInputElement>("mask-file").addEventListener("change", () => void this.loadMask());
    el<HTMLButtonElement>("export-btn").addEventListener("click", () => void this.export());
  }

  private async open(): Promise<void> {
    const path = el<HTMLInputElement>("manifest-path").value.trim();
    const status = el<HTMLElement>("status");
    try {
      const info = await this.api.openSession({ manifestPath: path });
      this.session = new EditorSession(this.api, info, {
        onImage: (png) => this.showImage(png),
        onStale: (stale) => el("viewer").classList.toggle("stale", stale),
        onError: (message) => (status.textContent = message),
      });
      status.textContent = `session ${info.id}: ${info.width}x${info.height}`;
      this.renderChannelGrid(info);
      void this.session.composeNow();
      this.syncControls();
    } catch (err) {
      status.textContent = err instanceof Error ? err.message : String(err);
    }
  }

  private renderChannelGrid(info: SessionInfo): void {
    const grid = el("channel-grid");
    grid.innerHTML = "";
    for (const name of info.channels) {
      const cell = document.createElement("figure");
      const img = document.createElement("img");
      img.src = this.api.channelUrl(info.id, name);
      img.alt = name;
      const caption = document.createElement("figcaption");
      const derived = name === "reflection" && info.reflection_derived;
      caption.textContent =
        `${name}${derived ? " (derived by screen-space tracing)" : ""} — ` +
        (CHANNEL_LEGENDS[name] ?? "");
      cell.append(img, caption);
      grid.append(cell);
    }
  }

  private showImage(png: ArrayBuffer): void {
    const img = el<HTMLImageElement>("composed");
    const old = img.src;
    img.src = URL.createObjectURL(new Blob([png], { type: "image/png" }));
    if (old.startsWith("blob:")) URL.revokeObjectURL(old);
    el<HTMLButtonElement>("export-btn").disabled = false;
  }

  private syncControls(): void {
    const metallic = el<HTMLInputElement>("slider-metallic");
    const note = el("metal-note");
    const locked = this.session?.metallicDisabled ?? false;
    metallic.disabled = locked;
    note.textContent = locked
      ? "metallic forced to 0 while transparency > 0"
      : "";
  }

  private async loadMask(): Promise<void> {
    const input = el<HTMLInputElement>("mask-file");
    const file = input.files?.[0];
    if (!file || !this.session) return;
    const buf = new Uint8Array(await file.arrayBuffer());
    let binary = "";
    buf.forEach((b) => (binary += String.fromCharCode(b)));
    this.session.setParam("maskB64", btoa(binary));
  }

  private async export(): Promise<void> {
    const artifacts = await this.session?.exportArtifacts();
    if (!artifacts) return;
    download("composed.png", new Blob([artifacts.image], { type: "image/png" }));
    download(
      "manifest.json",
      new Blob([JSON.stringify(artifacts.manifest, null, 2)], { type: "application/json" }),
    );
  }
}

new EditorApp();
