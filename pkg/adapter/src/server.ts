/**
 * Transports for the oracle protocol: stdio (one connection, exits when the
 * peer goes away or sends garbage) and TCP (each connection independent;
 * the listener survives bad connections).
 */

import * as net from "node:net";
import * as readline from "node:readline";

import { handleLine } from "./protocol.js";
import { Backend } from "./toy.js";

export function serveStdio(backend: Backend): Promise<void> {
  return new Promise((resolve) => {
    const rl = readline.createInterface({ input: process.stdin, terminal: false });
    let busy = Promise.resolve();
    rl.on("line", (line) => {
      // serialize: one request in flight
      busy = busy.then(async () => {
        const result = await handleLine(line, backend);
        if (result.log) process.stderr.write(`oracle-adapter: ${result.log}\n`);
        if (result.reply) process.stdout.write(result.reply + "\n");
        if (result.close) {
          rl.close();
          resolve();
        }
      });
    });
    rl.on("close", () => {
      void busy.then(() => resolve());
    });
  });
}

export function serveTcp(backend: Backend, port: number): net.Server {
  const server = net.createServer((socket) => {
    let buffer = "";
    let busy = Promise.resolve();
    socket.on("data", (chunk) => {
      buffer += chunk.toString("utf8");
      const lines = buffer.split("\n");
      buffer = lines.pop() ?? "";
      for (const line of lines) {
        busy = busy.then(async () => {
          const result = await handleLine(line, backend);
          if (result.log) process.stderr.write(`oracle-adapter: ${result.log}\n`);
          if (result.reply && socket.writable) socket.write(result.reply + "\n");
          if (result.close) socket.end();
        });
      }
    });
    socket.on("error", () => socket.destroy());
  });
  server.listen(port);
  return server;
}
