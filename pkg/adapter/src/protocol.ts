/**
 * Newline-delimited JSON oracle protocol.
 *
 * Requests:
 *   {"type": "hello"}
 *   {"type": "embed", "id": n, "image": {"h", "w", "c", "data_b64"}}
 * Replies:
 *   {"type": "hello", "embed_dim": D, "input": {"h", "w", "c"}}
 *   {"type": "embedding", "id": n, "values": [...]}
 *   {"type": "error", "id"?: n, "message": "..."}
 *
 * One request in flight per connection. A line that is not JSON at all is
 * logged and the connection is closed; a parseable but invalid request gets
 * an error reply (with the request id when present) and the connection
 * stays open.
 */

import { Backend } from "./toy.js";

export interface HandlerResult {
  reply?: string;
  close?: boolean;
  log?: string;
}

function errorReply(message: string, id?: unknown): string {
  const body: Record<string, unknown> = { type: "error", message };
  if (typeof id === "number" || typeof id === "string") body.id = id;
  return JSON.stringify(body);
}

function decodeImage(image: unknown, backend: Backend): Float64Array {
  if (typeof image !== "object" || image === null) {
    throw new Error("embed request missing image object");
  }
  const img = image as Record<string, unknown>;
  const { h, w, c } = backend.input;
  if (img.h !== h || img.w !== w || img.c !== c) {
    throw new Error(
      `oracle expects ${h}x${w}x${c}, got ${img.h}x${img.w}x${img.c}`,
    );
  }
  if (typeof img.data_b64 !== "string") {
    throw new Error("image.data_b64 must be a base64 string");
  }
  const raw = Buffer.from(img.data_b64, "base64");
  const n = h * w * c;
  if (raw.length !== n * 4) {
    throw new Error(`expected ${n * 4} bytes of float32 data, got ${raw.length}`);
  }
  const pixels = new Float64Array(n);
  for (let i = 0; i < n; i++) pixels[i] = raw.readFloatLE(i * 4);
  return pixels;
}

export async function handleLine(
  line: string,
  backend: Backend,
): Promise<HandlerResult> {
  const trimmed = line.trim();
  if (trimmed === "") return {};
  let msg: unknown;
  try {
    msg = JSON.parse(trimmed);
  } catch {
    return { close: true, log: `unparseable request line (${trimmed.length} bytes)` };
  }
  if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
    return { reply: errorReply("request must be a JSON object") };
  }
  const req = msg as Record<string, unknown>;
  const id = req.id;
  try {
    if (req.type === "hello") {
      return {
        reply: JSON.stringify({
          type: "hello",
          embed_dim: backend.embedDim,
          input: backend.input,
        }),
      };
    }
    if (req.type === "embed") {
      if (typeof id !== "number" && typeof id !== "string") {
        return { reply: errorReply("embed request needs a numeric or string id") };
      }
      const pixels = decodeImage(req.image, backend);
      const values = await backend.embed(pixels);
      return {
        reply: JSON.stringify({ type: "embedding", id, values: Array.from(values) }),
      };
    }
    return { reply: errorReply(`unknown request type ${JSON.stringify(req.type)}`, id) };
  } catch (err) {
    return { reply: errorReply((err as Error).message, id) };
  }
}
