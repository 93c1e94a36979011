/** Browser entry point: wire the console to the DOM and the server socket. */
import { TeleopConsole, drawTelemetryStrip, drawWorkspace } from "./console.js";

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function main(): void {
  const url = `ws://${location.hostname}:8765/ws`;
  const socket = new WebSocket(url);
  const app = new TeleopConsole(socket);

  const workspace = $("workspace") as HTMLCanvasElement;
  const strip = $("telemetry") as HTMLCanvasElement;
  const wsCtx = workspace.getContext("2d")!;
  const stripCtx = strip.getContext("2d")!;

  // drag to move the hand in x/y
  let dragging = false;
  workspace.addEventListener("pointerdown", () => (dragging = true));
  workspace.addEventListener("pointerup", () => (dragging = false));
  workspace.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const rect = workspace.getBoundingClientRect();
    const u = (ev.clientX - rect.left) / rect.width;
    const v = 1 - (ev.clientY - rect.top) / rect.height;
    app.handXY = [(u - 0.1) * 0.6, (v - 0.1) * 0.6];
  });

  ($("z-slider") as HTMLInputElement).addEventListener("input", (ev) => {
    app.handZ = Number((ev.target as HTMLInputElement).value);
  });
  ($("yaw-dial") as HTMLInputElement).addEventListener("input", (ev) => {
    app.yaw = Number((ev.target as HTMLInputElement).value);
  });
  ($("eta") as HTMLInputElement).addEventListener("change", (ev) => {
    app.setEta(Number((ev.target as HTMLInputElement).value));
  });
  $("pinch").addEventListener("click", () => app.togglePinch());
  $("calibrate").addEventListener("click", () => app.beginCalibration());
  $("record").addEventListener("click", () => {
    const task = ($("task-name") as HTMLInputElement).value || "untitled";
    if (app.state === "recording") app.stopRecording();
    else app.startRecording(task);
  });

  function render(): void {
    drawWorkspace(wsCtx, app, workspace.width, workspace.height);
    drawTelemetryStrip(stripCtx, app, strip.width, strip.height);
    const wizard = app.wizard.view();
    $("status").textContent =
      `${app.state} | ${wizard.prompt}` +
      (wizard.done ? "" : ` (hold ${(app.wizard.holdProgress * 100).toFixed(0)}%)`);
    const summary = app.telemetry.summary();
    $("latency").textContent =
      `queue ${summary.meanDelayMs.toFixed(1)} ms mean / ` +
      `${summary.maxDelayMs.toFixed(1)} ms max, drops ${summary.drops}, ` +
      `stale ${summary.stale}`;
    $("error").textContent = app.lastError ?? "";
    ($("record") as HTMLButtonElement).textContent =
      app.state === "recording" ? "Stop recording" : "Start recording";
    requestAnimationFrame(render);
  }
  socket.addEventListener("open", () => requestAnimationFrame(render));
}

window.addEventListener("load", main);
