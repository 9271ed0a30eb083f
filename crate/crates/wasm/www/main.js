import init, { GaugeView, potentialCurve, fitDemo } from "./pkg/rydlink_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(canvas, xs, ys, pad = 30) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (canvas.width - 2 * pad) / (x1 - x0 || 1);
  const sy = (canvas.height - 2 * pad) / (y1 - y0 || 1);
  return {
    x: (v) => pad + (v - x0) * sx,
    y: (v) => canvas.height - pad - (v - y0) * sy,
    scale: Math.min(sx, sy),
  };
}

let view = null;
let atomsPx = [];

function drawGauge() {
  const canvas = $("g-canvas");
  const ctx = canvas.getContext("2d");
  const s = JSON.parse(view.to_json());
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const xs = s.atoms.map((a) => a.x);
  const ys = s.atoms.map((a) => a.y);
  // Equal aspect so the triangular geometry is not distorted.
  const f = frame(canvas, xs, ys);
  const X = (v) => 30 + (v - Math.min(...xs)) * f.scale;
  const Y = (v) => canvas.height - 30 - (v - Math.min(...ys)) * f.scale;
  for (const l of s.links) {
    ctx.fillStyle = l.frozen ? "#bbb" : l.e > 0 ? "#d33" : "#36c";
    ctx.fillRect(X(l.x) - 2, Y(l.y) - 2, 4, 4);
  }
  for (const site of s.sites) {
    if (site.charge !== 0 || site.static_charge !== 0) {
      ctx.strokeStyle = site.static_charge !== 0 ? "#000" : "#c80";
      ctx.strokeRect(X(site.x) - 5, Y(site.y) - 5, 10, 10);
    }
  }
  atomsPx = s.atoms.map((a, i) => ({ i, px: X(a.x), py: Y(a.y) }));
  for (const [k, a] of s.atoms.entries()) {
    ctx.beginPath();
    ctx.arc(atomsPx[k].px, atomsPx[k].py, 6, 0, 2 * Math.PI);
    ctx.fillStyle = a.removed ? "#fff" : a.rydberg ? "#222" : "#eee";
    ctx.fill();
    ctx.strokeStyle = "#555";
    ctx.stroke();
  }
  $("g-status").textContent = `Gauss violations: ${s.gauss_violations}`;
}

function buildGauge() {
  try {
    view = new GaugeView(num("g-cols"), num("g-rows"), num("g-d"));
    drawGauge();
  } catch (e) {
    $("g-status").textContent = String(e);
  }
}

function drawPotential() {
  const delta = num("p-delta");
  $("p-value").textContent = delta.toFixed(3);
  const c = JSON.parse(potentialCurve(delta, 20, 81));
  const canvas = $("p-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const f = frame(canvas, c.separations, [...c.potential, 0]);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(f.x(0), f.y(0));
  ctx.lineTo(f.x(20), f.y(0));
  ctx.stroke();
  ctx.strokeStyle = "#d33";
  ctx.beginPath();
  c.separations.forEach((r, k) => (k ? ctx.lineTo : ctx.moveTo).call(ctx, f.x(r), f.y(c.potential[k])));
  ctx.stroke();
  const dstar = c.breaking_distance === null ? "none (σ ≤ 0)" : c.breaking_distance.toFixed(3);
  $("p-info").textContent =
    `σ = ${c.sigma.toFixed(5)}   d* = ${dstar}\n` +
    `σ = 0 at Δ/U = ${c.tension_root.toFixed(5)}, 2m = 0 at Δ/U = ${c.mass_root.toFixed(5)}\n` +
    `loop resonances: ${c.string_loop.toFixed(4)} (string), ${c.charged_loop.toFixed(4)} (charged)`;
}

function runFit() {
  const canvas = $("f-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  let d;
  try {
    d = JSON.parse(fitDemo(num("f-sigma"), num("f-gamma"), 2.0, num("f-noise"), num("f-points"), BigInt(num("f-seed"))));
  } catch (e) {
    $("f-info").textContent = String(e);
    return;
  }
  const f = frame(canvas, d.scatter.map((p) => p[0]), d.scatter.map((p) => p[1]));
  ctx.fillStyle = "#36c";
  for (const [s, g] of d.scatter) ctx.fillRect(f.x(s) - 2, f.y(g) - 2, 4, 4);
  const fmt = (e) => `${e.value.toFixed(5)} [${e.lo.toFixed(5)}, ${e.hi.toFixed(5)}]`;
  $("f-info").textContent =
    `${d.windows} windows (γ vs σ per window above)\n` +
    `σ = ${fmt(d.sigma)}\nγ = ${fmt(d.gamma)}\nc = ${fmt(d.c)}`;
}

await init();
$("g-build").onclick = buildGauge;
$("g-reset").onclick = () => { view.reset(); drawGauge(); };
$("g-canvas").onclick = (ev) => {
  const r = ev.target.getBoundingClientRect();
  const [x, y] = [ev.clientX - r.left, ev.clientY - r.top];
  const hit = atomsPx.find((a) => Math.hypot(a.px - x, a.py - y) < 8);
  if (hit && view.flip(hit.i)) drawGauge();
};
$("p-delta").oninput = drawPotential;
$("f-run").onclick = runFit;
buildGauge();
drawPotential();
runFit();
