// Panel and interaction wiring: LOD slider, tool modes, selection painting,
// drag-with-propagation, patch definition and segmented resimplification,
// undo, saving and script recording.

import { falloffSamples } from "./falloff.js";
import type { CutPayload, EditOptionsPayload, SessionClient } from
  "./protocol.js";
import { RequestFailed } from "./protocol.js";
import { ViewState, geometryArrays, resolvePaint } from "./state.js";
import type { Viewer } from "./viewer.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, cls?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  state = new ViewState();
  private slider!: HTMLInputElement;
  private sliderLabel!: HTMLSpanElement;
  private stats!: HTMLSpanElement;
  private progress!: HTMLProgressElement;
  private toasts!: HTMLDivElement;
  private toolButtons = new Map<string, HTMLButtonElement>();
  private falloffCanvas!: HTMLCanvasElement;
  private dragging: { index: number; node: number;
                      startX: number; startY: number;
                      lastDelta: [number, number, number] } | null = null;
  private orbiting: { x: number; y: number; pan: boolean } | null = null;
  private pathAnchor: number | null = null;
  private previewInFlight = false;
  private pendingPreview: [number, number, number] | null = null;

  constructor(private client: SessionClient, private viewer: Viewer,
              panel: HTMLElement) {
    this.buildPanel(panel);
    this.bindViewer();
    client.on("cut_changed", (cut: CutPayload) => this.onCut(cut));
    client.on("progress", (p: { done: number; total: number }) => {
      this.progress.max = p.total;
      this.progress.value = p.done;
    });
  }

  async start(): Promise<void> {
    await this.client.hello();
    this.onCut(await this.client.getCut());
  }

  private onCut(cut: CutPayload): void {
    this.state.applyCut(cut);
    this.viewer.setCut(geometryArrays(cut), this.state.selection);
    this.slider.max = String(this.state.sliderMax);
    this.slider.value = String(cut.lod);
    this.sliderLabel.textContent =
      `${cut.lod} / ${cut.order_len}`;
    this.stats.textContent =
      `${cut.nodes.length} vertices, ${cut.faces.length} faces`;
  }

  private toast(message: string): void {
    const t = el("div", "toast", message);
    this.toasts.appendChild(t);
    setTimeout(() => t.remove(), 4000);
  }

  private async guarded<T>(work: () => Promise<T>): Promise<T | null> {
    try {
      return await work();
    } catch (err) {
      this.toast(err instanceof RequestFailed
                 ? `${err.code}: ${err.message}` : String(err));
      return null;
    }
  }

  // ---- panel ----

  private buildPanel(panel: HTMLElement): void {
    const lodRow = el("div", "row");
    lodRow.appendChild(el("label", "", "LOD"));
    this.slider = el("input");
    this.slider.type = "range";
    this.slider.min = "0";
    this.slider.addEventListener("change", async () => {
      const k = Number(this.slider.value);
      const before = this.state.lod;
      const ok = await this.guarded(() => this.client.setLod(k));
      if (ok === null) this.slider.value = String(before); // revert
    });
    this.sliderLabel = el("span", "mono");
    lodRow.append(this.slider, this.sliderLabel);
    panel.appendChild(lodRow);

    this.stats = el("span", "mono");
    const statsRow = el("div", "row");
    statsRow.appendChild(this.stats);
    panel.appendChild(statsRow);

    const tools = el("div", "row");
    for (const mode of ["navigate", "select", "drag", "patch"] as const) {
      const b = el("button", "", mode);
      b.addEventListener("click", () => {
        this.state.tool = mode;
        this.pathAnchor = null;
        for (const [m, btn] of this.toolButtons) {
          btn.classList.toggle("active", m === mode);
        }
      });
      this.toolButtons.set(mode, b);
      tools.appendChild(b);
    }
    this.toolButtons.get("navigate")!.classList.add("active");
    panel.appendChild(tools);

    const paintRow = el("div", "row");
    paintRow.appendChild(el("label", "", "paint"));
    const paint = el("select") as HTMLSelectElement;
    for (const mode of ["vertex", "edge-path", "flood"]) {
      const o = el("option", "", mode) as HTMLOptionElement;
      o.value = mode;
      paint.appendChild(o);
    }
    paint.addEventListener("change", () => {
      this.state.paint = paint.value as ViewState["paint"];
      this.pathAnchor = null;
    });
    const floodRadius = el("input") as HTMLInputElement;
    floodRadius.type = "number";
    floodRadius.min = "1";
    floodRadius.value = String(this.state.floodRadius);
    floodRadius.addEventListener("change", () => {
      this.state.floodRadius = Math.max(1, Number(floodRadius.value));
    });
    paintRow.append(paint, el("label", "", "hops"), floodRadius);
    panel.appendChild(paintRow);

    panel.appendChild(this.buildOptions());
    panel.appendChild(this.buildReorderButtons());
    panel.appendChild(this.buildPatchAndIo());

    this.progress = el("progress") as HTMLProgressElement;
    this.progress.max = 1;
    this.progress.value = 0;
    panel.appendChild(this.progress);

    this.toasts = el("div", "toasts") as HTMLDivElement;
    panel.appendChild(this.toasts);
  }

  private buildOptions(): HTMLElement {
    const box = el("fieldset");
    box.appendChild(el("legend", "", "propagation"));
    const opts = this.state.options;

    const radiusRow = el("div", "row");
    radiusRow.appendChild(el("label", "", "radius r"));
    const radius = el("input") as HTMLInputElement;
    radius.type = "number";
    radius.min = "0";
    radius.value = String(opts.radius);
    radius.addEventListener("change", () => {
      opts.radius = Math.max(0, Number(radius.value));
    });
    radiusRow.appendChild(radius);
    box.appendChild(radiusRow);

    const curveRow = el("div", "row");
    this.falloffCanvas = el("canvas") as HTMLCanvasElement;
    this.falloffCanvas.width = 180;
    this.falloffCanvas.height = 70;
    curveRow.appendChild(this.falloffCanvas);
    const ords = el("div", "col");
    for (const [i, label] of (["y1", "y2"] as const).entries()) {
      const input = el("input") as HTMLInputElement;
      input.type = "range";
      input.min = "-0.25";
      input.max = "1.25";
      input.step = "0.01";
      input.value = String(opts.falloff[i]);
      input.addEventListener("input", () => {
        opts.falloff[i] = Number(input.value);
        this.drawFalloff();
      });
      const row = el("div", "row");
      row.append(el("label", "", label), input);
      ords.appendChild(row);
    }
    curveRow.appendChild(ords);
    box.appendChild(curveRow);
    this.drawFalloff();

    const ancRow = el("div", "row");
    const anc = el("input") as HTMLInputElement;
    anc.type = "checkbox";
    anc.checked = opts.ancestors;
    anc.addEventListener("change", () => {
      opts.ancestors = anc.checked;
    });
    ancRow.append(anc, el("label", "", "propagate to ancestors"));
    box.appendChild(ancRow);

    const descRow = el("div", "row");
    descRow.appendChild(el("label", "", "descendants"));
    const desc = el("select") as HTMLSelectElement;
    for (const mode of ["off", "direct", "attenuated"]) {
      const o = el("option", "", mode) as HTMLOptionElement;
      o.value = mode;
      desc.appendChild(o);
    }
    desc.value = opts.descendants;
    desc.addEventListener("change", () => {
      opts.descendants = desc.value as EditOptionsPayload["descendants"];
    });
    descRow.appendChild(desc);
    box.appendChild(descRow);
    return box;
  }

  private drawFalloff(): void {
    const ctx = this.falloffCanvas.getContext("2d");
    if (!ctx) return;
    const { width: w, height: h } = this.falloffCanvas;
    ctx.clearRect(0, 0, w, h);
    ctx.strokeStyle = "#455";
    ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
    ctx.strokeStyle = "#7fd";
    ctx.beginPath();
    const [y1, y2] = this.state.options.falloff;
    for (const [u, v] of falloffSamples(y1, y2)) {
      const x = u * (w - 6) + 3;
      const y = h - 3 - ((v + 0.25) / 1.5) * (h - 6);
      if (u === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }

  private selectionArray(): number[] {
    return [...this.state.selection].sort((a, b) => a - b);
  }

  private buildReorderButtons(): HTMLElement {
    const box = el("fieldset");
    box.appendChild(el("legend", "", "order"));
    const row = el("div", "row");
    const simplify = el("button", "", "simplify selection");
    simplify.addEventListener("click", () => this.guarded(
      () => this.client.localSimplify(this.selectionArray())));
    const refine = el("button", "", "refine selection");
    refine.addEventListener("click", () => this.guarded(
      () => this.client.localRefine(this.selectionArray())));
    row.append(simplify, refine);
    box.appendChild(row);

    const featRow = el("div", "row");
    const target = el("input") as HTMLInputElement;
    target.type = "number";
    target.min = "0";
    target.placeholder = "target LOD";
    const preserve = el("button", "", "keep visible at");
    preserve.addEventListener("click", () => this.guarded(
      () => this.client.preserveFeature(this.state.lod,
                                        Number(target.value),
                                        this.selectionArray())));
    const eliminate = el("button", "", "show earlier at");
    eliminate.addEventListener("click", () => this.guarded(
      () => this.client.eliminateFeature(this.state.lod,
                                         Number(target.value),
                                         this.selectionArray())));
    featRow.append(preserve, eliminate, target);
    box.appendChild(featRow);

    const undoRow = el("div", "row");
    const undo = el("button", "", "undo");
    undo.addEventListener("click", () => this.guarded(
      () => this.client.undo()));
    undoRow.appendChild(undo);
    box.appendChild(undoRow);
    return box;
  }

  private buildPatchAndIo(): HTMLElement {
    const box = el("fieldset");
    box.appendChild(el("legend", "", "patch and output"));

    const patchRow = el("div", "row");
    const confirm = el("button", "", "repartition selection");
    confirm.addEventListener("click", async () => {
      const nodes = this.selectionArray();
      const defined = await this.guarded(
        () => this.client.definePatch(nodes));
      if (defined === null) return;
      this.progress.value = 0;
      await this.guarded(() => this.client.resimplify());
      this.progress.value = 0;
    });
    const cancel = el("button", "", "cancel");
    cancel.addEventListener("click", () => this.client.cancel());
    patchRow.append(confirm, cancel);
    box.appendChild(patchRow);

    const saveRow = el("div", "row");
    const path = el("input") as HTMLInputElement;
    path.placeholder = "hierarchy.json";
    const save = el("button", "", "save hierarchy");
    save.addEventListener("click", async () => {
      const result = await this.guarded(
        () => this.client.saveHierarchy(path.value || undefined));
      if (result && result.data) {
        download("hierarchy.json", result.data);
      }
    });
    saveRow.append(save, path);
    box.appendChild(saveRow);

    const scriptRow = el("div", "row");
    const record = el("button", "", "download edit script");
    record.addEventListener("click", async () => {
      const result = await this.guarded(() => this.client.recordScript());
      if (result) {
        download("session-script.json", JSON.stringify(result.script));
      }
    });
    scriptRow.appendChild(record);
    box.appendChild(scriptRow);
    return box;
  }

  // ---- viewer interactions ----

  private bindViewer(): void {
    const canvas = this.viewer.element;
    canvas.addEventListener("pointerdown", (ev) => this.pointerDown(ev));
    canvas.addEventListener("pointermove", (ev) => this.pointerMove(ev));
    canvas.addEventListener("pointerup", (ev) => this.pointerUp(ev));
    canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.viewer.zoomBy(ev.deltaY > 0 ? 1.1 : 0.9);
    }, { passive: false });
    window.addEventListener("resize", () => this.viewer.resize());
  }

  private pointerDown(ev: PointerEvent): void {
    const tool = this.state.tool;
    if (tool === "navigate") {
      this.orbiting = { x: ev.clientX, y: ev.clientY, pan: ev.button === 2 };
      return;
    }
    const index = this.viewer.pickVertex(ev.clientX, ev.clientY);
    if (index === null) {
      this.orbiting = { x: ev.clientX, y: ev.clientY, pan: false };
      return;
    }
    if (tool === "select" || tool === "patch") {
      void this.paintSelect(index, ev.shiftKey);
      return;
    }
    if (tool === "drag") {
      const node = this.state.cut!.nodes[index];
      this.viewer.element.setPointerCapture(ev.pointerId);
      this.dragging = { index, node, startX: ev.clientX, startY: ev.clientY,
                        lastDelta: [0, 0, 0] };
    }
  }

  private async paintSelect(index: number, additive: boolean): Promise<void> {
    const nodes = resolvePaint(this.state, index, this.pathAnchor);
    this.pathAnchor = index;
    const result = await this.guarded(
      () => this.client.select(nodes, additive ? "add" : "set"));
    if (result === null) return;
    this.state.selection = new Set(result.selected as number[]);
    this.viewer.setSelection(this.state.selection);
  }

  private pointerMove(ev: PointerEvent): void {
    if (this.orbiting) {
      const dx = ev.clientX - this.orbiting.x;
      const dy = ev.clientY - this.orbiting.y;
      this.orbiting.x = ev.clientX;
      this.orbiting.y = ev.clientY;
      if (this.orbiting.pan) this.viewer.panBy(dx, dy);
      else this.viewer.rotateBy(dx, dy);
      return;
    }
    if (!this.dragging) return;
    const d = this.viewer.dragDelta(this.dragging.index,
                                    this.dragging.startX, this.dragging.startY,
                                    ev.clientX, ev.clientY);
    this.dragging.lastDelta = d;
    this.schedulePreview(d);
  }

  private schedulePreview(delta: [number, number, number]): void {
    // one preview request in flight; newest delta wins
    this.pendingPreview = delta;
    if (this.previewInFlight) return;
    this.previewInFlight = true;
    const pump = async () => {
      while (this.pendingPreview && this.dragging) {
        const d = this.pendingPreview;
        this.pendingPreview = null;
        const result = await this.guarded(
          () => this.client.moveVertex(this.dragging!.node, d,
                                       this.state.options, false));
        if (result?.positions) this.viewer.updatePositions(result.positions);
      }
      this.previewInFlight = false;
    };
    void pump();
  }

  private async pointerUp(ev: PointerEvent): Promise<void> {
    this.orbiting = null;
    const drag = this.dragging;
    if (!drag) return;
    this.dragging = null;
    this.pendingPreview = null;
    const d = drag.lastDelta;
    if (d[0] === 0 && d[1] === 0 && d[2] === 0) return; // no commit
    const result = await this.guarded(
      () => this.client.moveVertex(drag.node, d, this.state.options, true));
    if (result === null) {
      // rejected: restore the authoritative cut
      const cut = await this.guarded(() => this.client.getCut());
      if (cut) this.onCut(cut);
    }
  }
}

function download(name: string, text: string): void {
  const blob = new Blob([text], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = name;
  a.click();
  URL.revokeObjectURL(a.href);
}
