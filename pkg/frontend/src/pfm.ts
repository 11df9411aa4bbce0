// Minimal PFM reader: the compose endpoint can return the display image
// as raw float32 (format: "pfm"), which the tests use to measure pixel
// changes without a PNG decoder.

export interface FloatImage {
  width: number;
  height: number;
  channels: number;
  data: Float32Array; // row-major, top row first
}

export function parsePfm(buffer: ArrayBuffer): FloatImage {
  const bytes = new Uint8Array(buffer);
  let pos = 0;
  const readToken = (): string => {
    while (pos < bytes.length && /\s/.test(String.fromCharCode(bytes[pos]))) pos++;
    const start = pos;
    while (pos < bytes.length && !/\s/.test(String.fromCharCode(bytes[pos]))) pos++;
    return String.fromCharCode(...bytes.slice(start, pos));
  };
  const magic = readToken();
  if (magic !== "PF" && magic !== "Pf") throw new Error(`not a PFM buffer: ${magic}`);
  const channels = magic === "PF" ? 3 : 1;
  const width = parseInt(readToken(), 10);
  const height = parseInt(readToken(), 10);
  const scale = parseFloat(readToken());
  pos++; // single whitespace after the scale line
  const count = width * height * channels;
  if (bytes.length - pos < count * 4) throw new Error("truncated PFM payload");
  const littleEndian = scale < 0;
  const view = new DataView(buffer, pos);
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = view.getFloat32(i * 4, littleEndian);
  // PFM stores the bottom row first; flip to top-down
  const flipped = new Float32Array(count);
  const rowLen = width * channels;
  for (let y = 0; y < height; y++) {
    flipped.set(data.subarray(y * rowLen, (y + 1) * rowLen), (height - 1 - y) * rowLen);
  }
  return { width, height, channels, data: flipped };
}

export function meanAbsDifference(a: FloatImage, b: FloatImage): number {
  if (a.data.length !== b.data.length) throw new Error("image sizes differ");
  let total = 0;
  for (let i = 0; i < a.data.length; i++) total += Math.abs(a.data[i] - b.data[i]);
  return total / a.data.length;
}
