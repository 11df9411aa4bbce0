// Typed client for the compose service. All images shown in the UI are
// exactly server responses; nothing is composited client-side.

export interface CameraInfo {
  fov: number;
  near: number;
  far: number;
}

export interface SessionInfo {
  id: string;
  width: number;
  height: number;
  channels: string[];
  reflection_derived: boolean;
  camera: CameraInfo;
  ior: number;
  kernel_distance_px: number;
}

export interface TonemapOptions {
  mode: "clamp-srgb" | "reinhard-srgb";
  exposure: number;
}

export interface EditRequest {
  albedo?: [number, number, number] | null;
  roughness?: number | null;
  metallic?: number | null;
  transparency?: number | null;
  mask_png_base64?: string | null;
  tonemap?: TonemapOptions;
  format?: "png" | "pfm";
}

export interface ManifestState {
  manifest: Record<string, unknown>;
  reflection_derived: boolean;
  effective_overrides: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function raiseForStatus(resp: Response): Promise<Response> {
  if (resp.ok) return resp;
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
    else if (body && body.detail) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, detail);
}

export class ComposeApi {
  constructor(private baseUrl: string, private fetchImpl: typeof fetch = fetch) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async openSession(
    source: { manifestPath: string } | { manifest: object; baseDir?: string },
  ): Promise<SessionInfo> {
    const body =
      "manifestPath" in source
        ? { manifest_path: source.manifestPath }
        : { manifest: source.manifest, base_dir: source.baseDir ?? "." };
    const resp = await this.fetchImpl(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await raiseForStatus(resp)).json();
  }

  channelUrl(sessionId: string, channel: string): string {
    return this.url(`/sessions/${sessionId}/channels/${channel}`);
  }

  async compose(
    sessionId: string,
    edit: EditRequest,
    signal?: AbortSignal,
  ): Promise<ArrayBuffer> {
    const resp = await this.fetchImpl(this.url(`/sessions/${sessionId}/compose`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(edit),
      signal,
    });
    return (await raiseForStatus(resp)).arrayBuffer();
  }

  async manifest(sessionId: string): Promise<ManifestState> {
    const resp = await this.fetchImpl(this.url(`/sessions/${sessionId}/manifest`));
    return (await raiseForStatus(resp)).json();
  }
}
