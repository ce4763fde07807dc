import init, { stability_map, simulate, eso_response } from "./pkg/ductfan_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function guarded(errId, fn) {
  return () => {
    $(errId).textContent = "";
    try {
      fn();
    } catch (e) {
      $(errId).textContent = e.message ?? String(e);
    }
  };
}

function plot(canvas, x, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const ys = series.flatMap((s) => s.y);
  let lo = Math.min(...ys), hi = Math.max(...ys);
  if (hi - lo < 1e-9) { lo -= 1; hi += 1; }
  const x0 = x[0], x1 = x[x.length - 1];
  const px = (v) => pad + ((v - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (v) => h - pad / 2 - ((v - lo) / (hi - lo)) * (h - pad);

  ctx.strokeStyle = "#ccc";
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad, py(lo)); ctx.lineTo(w - pad, py(lo));
  ctx.moveTo(pad, py(lo)); ctx.lineTo(pad, py(hi));
  ctx.stroke();
  ctx.fillText(hi.toPrecision(3), 2, py(hi) + 4);
  ctx.fillText(lo.toPrecision(3), 2, py(lo));
  ctx.fillText(`${x1.toFixed(1)} s`, w - pad - 10, h - 2);
  if (opts.label) ctx.fillText(opts.label, pad + 4, 12);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ? [5, 4] : []);
    ctx.beginPath();
    s.y.forEach((v, i) => (i ? ctx.lineTo(px(x[i]), py(v)) : ctx.moveTo(px(x[i]), py(v))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  for (const t of opts.marks ?? []) {
    ctx.strokeStyle = "#bbb";
    ctx.beginPath(); ctx.moveTo(px(t), py(lo)); ctx.lineTo(px(t), py(hi)); ctx.stroke();
  }
}

function drawMap() {
  const res = 60;
  const m = JSON.parse(stability_map(num("kf"), num("fmax"), num("mmax"), res));
  const c = $("map"), ctx = c.getContext("2d");
  const colors = ["#3a3", "#c33", "#e90"];
  const cw = c.width / res, ch = c.height / res;
  m.outcomes.forEach((row, i) => {
    row.forEach((o, j) => {
      ctx.fillStyle = colors[o];
      ctx.fillRect(j * cw, c.height - (i + 1) * ch, cw + 0.5, ch + 0.5);
    });
  });
  ctx.fillStyle = "#000";
  ctx.font = "12px sans-serif";
  ctx.fillText("magnet force →", c.width - 100, c.height - 4);
  ctx.fillText("↑ mass", 4, 14);
}

function runScenario() {
  const r = JSON.parse(simulate($("scenario").value));
  const marks = r.events.filter(([, m]) => m.startsWith("attach") || m.startsWith("detach")).map(([t]) => t);
  plot($("attitude"), r.time, [
    { y: r.roll, color: "#c33" }, { y: r.pitch, color: "#36c" }, { y: r.yaw, color: "#3a3" },
    { y: r.roll_sp, color: "#c33", dash: true }, { y: r.pitch_sp, color: "#36c", dash: true },
    { y: r.yaw_sp, color: "#3a3", dash: true },
  ], { label: "attitude, deg", marks });
  plot($("vanes"), r.time, [{ y: r.vane_x, color: "#c33" }, { y: r.vane_y, color: "#36c" }],
    { label: "differential vane deflection", marks });
  const s = r.summary;
  const rows = s.stages.map((st) =>
    `<tr><td>${st.label}</td><td>${st.trigger}</td><td>${st.recovery_time_s ?? "not recovered"}</td>` +
    `<td>${st.max_error_deg.map((v) => v.toFixed(2)).join(" / ")}</td><td>${(100 * st.saturation_duty).toFixed(1)}%</td></tr>`);
  $("sim-out").innerHTML =
    `<p>${s.fault ? `fault: ${s.fault.kind} (${s.fault.message})` : s.stable ? "stable" : "not stable"}</p>` +
    `<table><tr><th>stage</th><th>trigger</th><th>recovery, s</th><th>max error, deg</th><th>saturation</th></tr>${rows.join("")}</table>`;
}

function runEso() {
  const r = JSON.parse(eso_response(num("wo"), num("dist"), 1.5));
  plot($("eso"), r.time, [
    { y: r.disturbance, color: "#888", dash: true },
    { y: r.estimate, color: "#c33" },
  ], { label: "disturbance (dashed) and estimate z3" });
}

await init();
$("map-run").onclick = guarded("map-err", drawMap);
$("sim-run").onclick = guarded("sim-err", runScenario);
$("eso-run").onclick = guarded("eso-err", runEso);
guarded("map-err", drawMap)();
guarded("sim-err", runScenario)();
guarded("eso-err", runEso)();
