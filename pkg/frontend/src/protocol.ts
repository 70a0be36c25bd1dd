// Session protocol client. The service speaks JSON messages over either a
// websocket or a line-delimited TCP stream; the client is transport-agnostic
// so the browser UI and node-based tests share it.

export const PROTOCOL_VERSION = "semisimp-session/1";

export interface CutPayload {
  lod: number;
  order_len: number;
  nodes: number[];
  positions: number[][];
  faces: number[][];
  selected: number[];
}

export interface EditOptionsPayload {
  radius: number;
  falloff: [number, number];
  ancestors: boolean;
  descendants: "off" | "direct" | "attenuated";
}

export interface SessionError {
  code: string;
  message: string;
}

export class RequestFailed extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

export interface Transport {
  send(obj: unknown): void;
  onMessage(cb: (obj: any) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

type Pending = {
  resolve: (value: any) => void;
  reject: (err: Error) => void;
};

export class SessionClient {
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private handlers = new Map<string, Set<(payload: any) => void>>();
  private closed = false;

  constructor(private transport: Transport) {
    transport.onMessage((msg) => this.dispatch(msg));
    transport.onClose(() => {
      this.closed = true;
      for (const p of this.pending.values()) {
        p.reject(new RequestFailed("closed", "connection closed"));
      }
      this.pending.clear();
    });
  }

  private dispatch(msg: any): void {
    if (!msg || typeof msg !== "object") return;
    if (msg.id === 0) {
      const cbs = this.handlers.get(msg.kind);
      if (cbs) for (const cb of cbs) cb(msg.payload);
      return;
    }
    const pending = this.pending.get(msg.id);
    if (!pending) return; // stale or duplicate response: discard
    this.pending.delete(msg.id);
    if (msg.error) {
      pending.reject(new RequestFailed(msg.error.code, msg.error.message));
    } else {
      pending.resolve(msg.result ?? {});
    }
  }

  /** Subscribe to a server event kind; returns an unsubscribe function. */
  on(kind: string, cb: (payload: any) => void): () => void {
    let cbs = this.handlers.get(kind);
    if (!cbs) {
      cbs = new Set();
      this.handlers.set(kind, cbs);
    }
    cbs.add(cb);
    return () => cbs!.delete(cb);
  }

  request(kind: string, payload: object = {}): Promise<any> {
    if (this.closed) {
      return Promise.reject(new RequestFailed("closed", "connection closed"));
    }
    const id = this.nextId++;
    const promise = new Promise<any>((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
    });
    this.transport.send({ id, kind, payload });
    return promise;
  }

  // typed conveniences

  hello(): Promise<{ version: string; name: string }> {
    return this.request("hello", { version: PROTOCOL_VERSION });
  }

  getCut(): Promise<CutPayload> {
    return this.request("get_cut");
  }

  setLod(k: number): Promise<{ lod: number }> {
    return this.request("set_lod", { k });
  }

  select(nodes: number[], mode: "set" | "add" | "remove" | "clear" = "set") {
    return this.request("select", { nodes, mode });
  }

  moveVertex(node: number, delta: [number, number, number],
             options: EditOptionsPayload, commit: boolean):
      Promise<{ preview?: boolean; positions?: number[][]; moved?: number }> {
    return this.request("move_vertex", { node, delta, options, commit });
  }

  localSimplify(nodes: number[]) {
    return this.request("local_simplify", { nodes });
  }

  localRefine(nodes: number[]) {
    return this.request("local_refine", { nodes });
  }

  preserveFeature(from: number, to: number, nodes: number[]) {
    return this.request("preserve_feature", { from, to, nodes });
  }

  eliminateFeature(from: number, to: number, nodes: number[]) {
    return this.request("eliminate_feature", { from, to, nodes });
  }

  definePatch(nodes: number[]):
      Promise<{ nodes: number[]; boundary_edges: number[][] }> {
    return this.request("define_patch", { nodes });
  }

  resimplify(): Promise<{ order_len: number }> {
    return this.request("resimplify");
  }

  cancel(): Promise<{ cancelled: boolean }> {
    return this.request("cancel");
  }

  undo(): Promise<{ undone: string }> {
    return this.request("undo");
  }

  saveHierarchy(path?: string) {
    return this.request("save_hierarchy", path ? { path } : {});
  }

  saveLod(args: { path?: string; lod?: number; vertices?: number;
                  faces?: number }) {
    return this.request("save_lod", args);
  }

  recordScript(): Promise<{ script: any }> {
    return this.request("record_script");
  }

  close(): void {
    this.transport.close();
  }
}

/** Browser transport: one JSON message per websocket text frame. */
export function webSocketTransport(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    const messageCbs: Array<(obj: any) => void> = [];
    const closeCbs: Array<() => void> = [];
    ws.onopen = () => resolve({
      send: (obj) => ws.send(JSON.stringify(obj)),
      onMessage: (cb) => messageCbs.push(cb),
      onClose: (cb) => closeCbs.push(cb),
      close: () => ws.close(),
    });
    ws.onerror = () => reject(new Error(`websocket connect failed: ${url}`));
    ws.onmessage = (ev) => {
      let parsed: any;
      try {
        parsed = JSON.parse(ev.data as string);
      } catch {
        return;
      }
      for (const cb of messageCbs) cb(parsed);
    };
    ws.onclose = () => {
      for (const cb of closeCbs) cb();
    };
  });
}
