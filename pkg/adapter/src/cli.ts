#!/usr/bin/env node
/**
 * advface-oracle: serve the embedding wire protocol.
 *
 *   advface-oracle --backend toy --seed 0 --dims 8x8x3 --embed-dim 128
 *   advface-oracle --backend toy --listen tcp:9470
 *   advface-oracle --backend model --model-path /path/model.json --dims 160x160x3
 */

import { parseArgs } from "node:util";

import { loadModelBackend } from "./model.js";
import { serveStdio, serveTcp } from "./server.js";
import { Backend, InputDims, ToyBackend } from "./toy.js";

function parseDims(spec: string): InputDims {
  const parts = spec.split("x").map(Number);
  if (parts.length !== 3 || parts.some((v) => !Number.isInteger(v) || v <= 0)) {
    throw new Error(`--dims must look like 8x8x3, got ${spec}`);
  }
  return { h: parts[0], w: parts[1], c: parts[2] };
}

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      backend: { type: "string", default: "toy" },
      seed: { type: "string", default: "0" },
      dims: { type: "string", default: "8x8x3" },
      "embed-dim": { type: "string", default: "128" },
      "model-path": { type: "string" },
      listen: { type: "string", default: "stdio" },
    },
  });

  const input = parseDims(values.dims!);
  let backend: Backend;
  if (values.backend === "toy") {
    backend = new ToyBackend(Number(values.seed), input, Number(values["embed-dim"]));
  } else if (values.backend === "model") {
    if (!values["model-path"]) throw new Error("--backend model requires --model-path");
    backend = await loadModelBackend(values["model-path"], input);
  } else {
    throw new Error(`unknown backend ${values.backend}; use toy or model`);
  }

  const listen = values.listen!;
  if (listen === "stdio") {
    await serveStdio(backend);
  } else if (listen.startsWith("tcp:")) {
    const port = Number(listen.slice(4));
    if (!Number.isInteger(port)) throw new Error(`bad port in ${listen}`);
    serveTcp(backend, port);
  } else {
    throw new Error(`unknown listen spec ${listen}; use stdio or tcp:<port>`);
  }
}

main().catch((err) => {
  process.stderr.write(`oracle-adapter: ${(err as Error).message}\n`);
  process.exit(1);
});
