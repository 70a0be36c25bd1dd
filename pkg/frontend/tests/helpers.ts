// Node-side helpers for the tests: a TCP line-delimited transport (the
// service's other framing besides websockets) and a tiny OBJ generator.

import net from "node:net";
import { spawn, ChildProcess } from "node:child_process";

import type { Transport } from "../src/protocol";

export function tcpTransport(host: string, port: number): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const messageCbs: Array<(obj: any) => void> = [];
    const closeCbs: Array<() => void> = [];
    const sock = net.createConnection({ host, port });
    sock.on("error", reject);
    sock.on("connect", () => {
      let buf = "";
      sock.on("data", (chunk) => {
        buf += chunk.toString("utf8");
        let idx;
        while ((idx = buf.indexOf("\n")) >= 0) {
          const line = buf.slice(0, idx).trim();
          buf = buf.slice(idx + 1);
          if (!line) continue;
          const obj = JSON.parse(line);
          for (const cb of messageCbs) cb(obj);
        }
      });
      sock.on("close", () => {
        for (const cb of closeCbs) cb();
      });
      resolve({
        send: (obj) => sock.write(JSON.stringify(obj) + "\n"),
        onMessage: (cb) => messageCbs.push(cb),
        onClose: (cb) => closeCbs.push(cb),
        close: () => sock.end(),
      });
    });
  });
}

/** Wavy grid OBJ text: n*n vertices, 2*(n-1)^2 triangles. */
export function gridObj(n: number): string {
  const lines: string[] = [];
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const z = 0.6 * Math.sin(0.7 * i) * Math.cos(0.7 * j);
      lines.push(`v ${i} ${j} ${z}`);
    }
  }
  for (let i = 0; i < n - 1; i++) {
    for (let j = 0; j < n - 1; j++) {
      const a = i * n + j + 1;
      const b = (i + 1) * n + j + 1;
      const c = (i + 1) * n + j + 2;
      const d = i * n + j + 2;
      lines.push(`f ${a} ${b} ${c}`);
      lines.push(`f ${a} ${c} ${d}`);
    }
  }
  return lines.join("\n") + "\n";
}

export interface ServiceHandle {
  host: string;
  port: number;
  child: ChildProcess;
  stop(): void;
}

/** Start the session service on an ephemeral port and wait for its
 * address line. */
export function startService(modelPath: string,
                             cwd: string): Promise<ServiceHandle> {
  return new Promise((resolve, reject) => {
    const child = spawn("python3",
                        ["-m", "semisimp.cli", "serve", modelPath,
                         "--port", "0"],
                        { cwd, stdio: ["ignore", "pipe", "pipe"] });
    let out = "";
    let errOut = "";
    const timer = setTimeout(() => {
      child.kill();
      reject(new Error(`service did not start: ${out} ${errOut}`));
    }, 60000);
    child.stdout!.on("data", (chunk) => {
      out += chunk.toString();
      const m = out.match(/session service on ([\d.]+):(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve({
          host: m[1],
          port: Number(m[2]),
          child,
          stop: () => child.kill(),
        });
      }
    });
    child.stderr!.on("data", (chunk) => {
      errOut += chunk.toString();
    });
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early (${code}): ${errOut}`));
    });
  });
}

export function runCli(args: string[], cwd: string): Promise<string> {
  return new Promise((resolve, reject) => {
    const child = spawn("python3", ["-m", "semisimp.cli", ...args],
                        { cwd, stdio: ["ignore", "pipe", "pipe"] });
    let out = "";
    let err = "";
    child.stdout!.on("data", (c) => { out += c.toString(); });
    child.stderr!.on("data", (c) => { err += c.toString(); });
    child.on("exit", (code) => {
      if (code === 0) resolve(out);
      else reject(new Error(`cli ${args[0]} failed (${code}): ${err}`));
    });
  });
}
