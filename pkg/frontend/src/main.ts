/** Dashboard entry point: DOM layout, socket wiring, redraw loop. */

import { KNOB_SPECS, KnobController } from "./knobs";
import { Envelope, KnobAck } from "./protocol";
import { drawDiagonals, drawEtaStrip, drawHistogram, drawWigner } from "./render";
import { ReconnectingSocket } from "./socket";
import { TelemetryView } from "./telemetry";

const REDRAW_INTERVAL_MS = 40; // ~25 fps cap, decoupled from message arrival

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, cls?: string, parent?: HTMLElement,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  parent?.appendChild(node);
  return node;
}

function panel(parent: HTMLElement, title: string, w: number, h: number) {
  const box = el("div", "panel", parent);
  el("h2", "", box).textContent = title;
  const canvas = el("canvas", "", box);
  canvas.width = w;
  canvas.height = h;
  return canvas.getContext("2d")!;
}

function main(): void {
  const root = document.getElementById("app")!;
  const header = el("div", "header", root);
  const statusBadge = el("span", "badge", header);
  const etaBig = el("span", "eta-readout", header);
  const rates = el("span", "rates", header);
  const diagStrip = el("span", "diagnostics", header);

  const grid = el("div", "grid", root);
  const etaCtx = panel(grid, "efficiency (var - 1/2)", 560, 180);
  const histCtx = panel(grid, "quadrature histogram + model", 560, 180);
  const diagCtx = panel(grid, "diagonal elements", 560, 180);
  const wigCtx = panel(grid, "Wigner cross-section", 560, 180);

  const knobBox = el("div", "knobs", root);

  const view = new TelemetryView();
  let dirty = true;

  const socket = new ReconnectingSocket(
    `ws://${location.host}/session`,
    {
      onMessage: (msg: Envelope, raw: string) => {
        if (msg.kind === "knob-ack") {
          knobs.onAck(msg.payload as unknown as KnobAck);
          const ack = msg.payload as unknown as KnobAck;
          if (ack.ok) view.resetAccumulators(); // server restarted statistics
          syncKnobs();
        } else {
          view.apply(msg, raw);
        }
        dirty = true;
      },
      onStatus: (status) => {
        statusBadge.textContent = status;
        statusBadge.className = `badge badge-${status}`;
      },
      onGap: () => { dirty = true; },
      onMalformed: () => { view.malformed += 1; },
    },
  );

  const knobs = new KnobController((msg) => socket.send(msg));
  const inputs = new Map<string, { slider: HTMLInputElement; label: HTMLSpanElement }>();
  for (const spec of KNOB_SPECS) {
    const row = el("div", "knob-row", knobBox);
    el("label", "", row).textContent = spec.label;
    const slider = el("input", "", row);
    slider.type = "range";
    slider.min = String(spec.min);
    slider.max = String(spec.max);
    slider.step = String(spec.step);
    slider.value = String(spec.initial);
    const valueLabel = el("span", "knob-value", row);
    valueLabel.textContent = String(spec.initial);
    slider.addEventListener("input", () => {
      knobs.change(spec.name, Number(slider.value));
    });
    inputs.set(spec.name, { slider, label: valueLabel });
  }

  function syncKnobs(): void {
    for (const spec of KNOB_SPECS) {
      const ui = inputs.get(spec.name)!;
      const acked = knobs.displayed(spec.name);
      ui.label.textContent = knobs.locked(spec.name)
        ? "..."
        : knobs.notice(spec.name) ?? String(acked);
      if (!knobs.locked(spec.name)) ui.slider.value = String(acked);
      ui.slider.disabled = knobs.locked(spec.name);
    }
  }

  setInterval(() => {
    knobs.tick();
    syncKnobs();
  }, 50);

  setInterval(() => {
    if (!dirty) return;
    dirty = false;
    etaBig.textContent = view.etaReadout === null ? "η = —" : `η = ${view.etaReadout}`;
    rates.textContent =
      `${Math.round(view.segmentsPerS).toLocaleString()} seg/s | ` +
      `trigger ${Math.round(view.triggerRateHz).toLocaleString()} Hz`;
    diagStrip.textContent =
      socket.gapCount > 0 || view.malformed > 0
        ? `gaps: ${socket.gapCount}, malformed: ${view.malformed}, reconnects: ${socket.reconnects}`
        : "";
    drawEtaStrip(etaCtx, view);
    drawHistogram(histCtx, view);
    drawDiagonals(diagCtx, view);
    drawWigner(wigCtx, view);
  }, REDRAW_INTERVAL_MS);

  socket.connect();
}

main();
