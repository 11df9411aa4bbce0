// Editor session state: slider clamping, the transparent-metal rule,
// debounced compose scheduling with a single in-flight request, and the
// export bookkeeping. Pure logic, no DOM; main.ts wires it to elements.

import { ComposeApi, EditRequest, SessionInfo, TonemapOptions } from "./api.js";

export interface Draft {
  albedo: [number, number, number] | null;
  roughness: number | null;
  metallic: number | null;
  transparency: number | null;
  maskB64: string | null;
}

export const EMPTY_DRAFT: Draft = {
  albedo: null,
  roughness: null,
  metallic: null,
  transparency: null,
  maskB64: null,
};

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

// channel value ranges are [0,1] for every editable parameter
export function clampDraft(draft: Draft): Draft {
  return {
    albedo: draft.albedo
      ? [clamp01(draft.albedo[0]), clamp01(draft.albedo[1]), clamp01(draft.albedo[2])]
      : null,
    roughness: draft.roughness === null ? null : clamp01(draft.roughness),
    metallic: draft.metallic === null ? null : clamp01(draft.metallic),
    transparency: draft.transparency === null ? null : clamp01(draft.transparency),
    maskB64: draft.maskB64,
  };
}

// transparent surfaces cannot stay metallic: the metallic slider locks
// and the effective request reports metallic 0
export function metallicLocked(draft: Draft): boolean {
  return draft.transparency !== null && draft.transparency > 0;
}

export function draftToRequest(draft: Draft, tonemap?: TonemapOptions,
                               format?: "png" | "pfm"): EditRequest {
  const d = clampDraft(draft);
  const req: EditRequest = {};
  if (d.albedo) req.albedo = d.albedo;
  if (d.roughness !== null) req.roughness = d.roughness;
  if (d.transparency !== null) req.transparency = d.transparency;
  if (d.metallic !== null) req.metallic = metallicLocked(d) ? 0 : d.metallic;
  if (d.maskB64) req.mask_png_base64 = d.maskB64;
  if (tonemap) req.tonemap = tonemap;
  if (format) req.format = format;
  return req;
}

export interface SchedulerHooks {
  setTimeout: (fn: () => void, ms: number) => unknown;
  clearTimeout: (handle: unknown) => void;
}

export interface EditorEvents {
  onImage?: (png: ArrayBuffer, request: EditRequest) => void;
  onStale?: (stale: boolean) => void;
  onError?: (message: string) => void;
}

export class EditorSession {
  draft: Draft = { ...EMPTY_DRAFT };
  history: EditRequest[] = [];
  lastImage: ArrayBuffer | null = null;
  lastRequest: EditRequest | null = null;
  tonemap: TonemapOptions = { mode: "clamp-srgb", exposure: 1.0 };

  private timer: unknown = null;
  private inFlight: AbortController | null = null;
  private rerunQueued = false;

  constructor(
    public api: ComposeApi,
    public info: SessionInfo,
    private events: EditorEvents = {},
    public debounceMs = 200,
    private hooks: SchedulerHooks = {
      setTimeout: (fn, ms) => setTimeout(fn, ms),
      clearTimeout: (h) => clearTimeout(h as number),
    },
  ) {}

  get metallicDisabled(): boolean {
    return metallicLocked(this.draft);
  }

  get canExport(): boolean {
    return this.lastImage !== null;
  }

  setParam<K extends keyof Draft>(name: K, value: Draft[K]): void {
    this.draft = clampDraft({ ...this.draft, [name]: value });
    this.scheduleCompose();
  }

  scheduleCompose(): void {
    this.events.onStale?.(true);
    if (this.timer !== null) this.hooks.clearTimeout(this.timer);
    this.timer = this.hooks.setTimeout(() => {
      this.timer = null;
      void this.composeNow();
    }, this.debounceMs);
  }

  // single in-flight request: a newer state queues exactly one rerun
  async composeNow(): Promise<void> {
    if (this.inFlight) {
      this.rerunQueued = true;
      return;
    }
    const request = draftToRequest(this.draft, this.tonemap);
    const controller = new AbortController();
    this.inFlight = controller;
    try {
      const png = await this.api.compose(this.info.id, request, controller.signal);
      this.lastImage = png;
      this.lastRequest = request;
      this.history.push(request);
      this.events.onImage?.(png, request);
      this.events.onStale?.(false);
    } catch (err) {
      if (!(err instanceof DOMException && err.name === "AbortError")) {
        this.events.onError?.(err instanceof Error ? err.message : String(err));
      }
    } finally {
      this.inFlight = null;
      if (this.rerunQueued) {
        this.rerunQueued = false;
        void this.composeNow();
      }
    }
  }

  cancel(): void {
    if (this.timer !== null) {
      this.hooks.clearTimeout(this.timer);
      this.timer = null;
    }
    this.inFlight?.abort();
  }

  async replayLast(): Promise<ArrayBuffer | null> {
    if (!this.lastRequest) return null;
    return this.api.compose(this.info.id, this.lastRequest);
  }

  async exportArtifacts(): Promise<{ image: ArrayBuffer; manifest: object } | null> {
    if (!this.lastImage) return null;
    const manifest = await this.api.manifest(this.info.id);
    return { image: this.lastImage, manifest };
  }
}
