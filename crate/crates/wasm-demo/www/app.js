import init, { analyze_scale, solve, synthesize } from "./pkg/tsvar_wasm.js";

const $ = (id) => document.getElementById(id);

function fmt(v) {
  if (v === null || v === undefined) return "-";
  if (typeof v === "number") return Number.isInteger(v) ? String(v) : v.toPrecision(10);
  if (Array.isArray(v)) return v.join(" ");
  return String(v);
}

function table(columns, rows) {
  const t = document.createElement("table");
  const head = t.insertRow();
  for (const c of columns) {
    const th = document.createElement("th");
    th.textContent = c;
    head.appendChild(th);
  }
  for (const r of rows) {
    const tr = t.insertRow();
    for (const c of columns) tr.insertCell().textContent = fmt(r[c]);
  }
  return t;
}

function show(prefix, fn) {
  const out = $(prefix + "-out");
  const summary = $(prefix + "-summary");
  out.replaceChildren();
  summary.className = "summary";
  try {
    fn(out, summary);
  } catch (e) {
    summary.className = "summary error";
    summary.textContent = e.message ?? String(e);
  }
}

function runScale() {
  show("scale", (out, summary) => {
    const r = JSON.parse(analyze_scale($("scale-spec").value));
    summary.textContent = `${r.spec}: ${r.kind}, isolated ${r.isolated}, regular ${r.regular}` +
      (r.modeled_regular === null ? "" : `, modelled set regular ${r.modeled_regular}`);
    const cols = ["t", "sigma", "rho", "mu", "nu", "class"];
    if (r.modeled_regular !== null) cols.push("modeled_sigma", "modeled_rho", "modeled_class");
    out.appendChild(table(cols, r.points));
  });
}

function plot(canvas, pts) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (pts.length < 2) return;
  const ts = pts.map((p) => p.t), ys = pts.map((p) => p.y);
  const [t0, t1] = [Math.min(...ts), Math.max(...ts)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const pad = 20;
  const x = (t) => pad + (t - t0) / (t1 - t0) * (canvas.width - 2 * pad);
  const y = (v) => canvas.height - pad - (v - y0) / (y1 - y0) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  pts.forEach((p, i) => (i ? ctx.lineTo(x(p.t), y(p.y)) : ctx.moveTo(x(p.t), y(p.y))));
  ctx.stroke();
  ctx.fillStyle = "#1a5fb4";
  for (const p of pts) {
    ctx.beginPath();
    ctx.arc(x(p.t), y(p.y), 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function runSolve() {
  show("solve", (out, summary) => {
    const r = JSON.parse(solve(
      $("solve-spec").value, $("solve-delta").value, $("solve-nabla").value, $("solve-outer").value,
      $("solve-ya").value, $("solve-yb").value, $("solve-objective").value));
    summary.textContent = `H = ${fmt(r.value)}, F = (${r.components.map(fmt).join(", ")}), ` +
      `Euler-Lagrange residuals ${fmt(r.el_delta_max)} (delta form), ${fmt(r.el_nabla_max)} (nabla form)`;
    plot($("solve-plot"), r.extremal);
    out.appendChild(table(["t", "y"], r.extremal));
  });
}

function runSynth() {
  show("synth", (out, summary) => {
    const r = JSON.parse(synthesize(
      $("synth-spec").value, $("synth-P").value, $("synth-q").value, $("synth-w").value, $("synth-p").value,
      parseFloat($("synth-C").value), parseFloat($("synth-R0").value), $("synth-y0").value));
    summary.textContent = r.verified
      ? `verified: Euler-Lagrange residual ${fmt(r.el_max)}, smallest probe increase ${fmt(r.probe_min_change)}`
      : `not verified: ${r.failures.join("; ")}`;
    const rows = r.t.map((t, i) => ({ t, y0: r.y0[i], Q: r.Q[i], R: r.R[i], legendre: r.legendre[i] }));
    out.appendChild(table(["t", "y0", "Q", "R", "legendre"], rows));
  });
}

await init();
$("scale-run").addEventListener("click", runScale);
$("solve-run").addEventListener("click", runSolve);
$("synth-run").addEventListener("click", runSynth);
runScale();
runSolve();
runSynth();
