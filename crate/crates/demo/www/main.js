import init, { theta_field, det_field, hilbert_ranks } from "./pkg/elliptic_qybe_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const status = (msg, bad = false) => {
  $("status").textContent = msg;
  $("status").className = bad ? "bad" : "";
};

function params() {
  return {
    n: num("n"), k: num("k"),
    eta: [num("eta-re"), num("eta-im")],
    tau: [num("tau-re"), num("tau-im")],
    win: [num("re-min"), num("re-max"), num("im-min"), num("im-max")],
    grid: Math.max(2, Math.min(400, Math.round(num("grid")))),
  };
}

// dark blue at the minimum to pale yellow at the maximum; quantiles avoid -inf at exact zeros
function paint(canvas, values, size) {
  canvas.width = size;
  canvas.height = size;
  const finite = Array.from(values).filter(Number.isFinite).sort((a, b) => a - b);
  const lo = finite[Math.floor(0.02 * (finite.length - 1))] ?? 0;
  const hi = finite[Math.floor(0.98 * (finite.length - 1))] ?? 1;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(size, size);
  values.forEach((v, i) => {
    const t = Number.isFinite(v) ? Math.min(1, Math.max(0, (v - lo) / (hi - lo || 1))) : 0;
    img.data[4 * i] = 20 + 235 * t;
    img.data[4 * i + 1] = 30 + 210 * t * t;
    img.data[4 * i + 2] = 90 + 60 * (1 - t);
    img.data[4 * i + 3] = 255;
  });
  ctx.putImageData(img, 0, 0);
}

function timed(label, f) {
  const t0 = performance.now();
  try {
    f();
    status(`${label}: ${(performance.now() - t0).toFixed(0)} ms`);
  } catch (e) {
    status(`${label}: ${e.message ?? e}`, true);
  }
}

function drawTheta() {
  const p = params();
  timed("theta", () => {
    const v = theta_field(p.n, num("alpha"), ...p.eta, ...p.win, p.grid, p.grid);
    paint($("theta"), v, p.grid);
  });
}

function drawDet() {
  const p = params();
  timed("det", () => {
    const v = det_field(p.n, p.k, ...p.eta, ...p.tau, ...p.win, p.grid, p.grid);
    paint($("det"), v, p.grid);
  });
}

function binom(n, k) {
  if (k < 0 || k > n) return 0;
  let r = 1;
  for (let i = 0; i < k; i++) r = (r * (n - i)) / (i + 1);
  return Math.round(r);
}

function ranks() {
  const p = params();
  const dmax = num("dmax");
  timed("ranks", () => {
    const r = hilbert_ranks(p.n, p.k, ...p.eta, ...p.tau, dmax);
    const rows = [];
    for (let d = 0; d <= dmax; d++) {
      const q = r[d], s = r[dmax + 1 + d];
      const eq = binom(p.n + d - 1, d), es = binom(p.n, d);
      const cell = (x, e) => `<td class="${x === e ? "" : "bad"}">${x}</td><td>${e}</td>`;
      rows.push(`<tr><td>${d}</td>${cell(q, eq)}${cell(s, es)}</tr>`);
    }
    $("rank-table").innerHTML =
      "<table><tr><th>d</th><th>rank F<sub>d</sub>(−τ)</th><th>C(n+d−1,d)</th>" +
      "<th>rank F<sub>d</sub>(τ)</th><th>C(n,d)</th></tr>" + rows.join("") + "</table>";
  });
}

await init();
$("draw-theta").onclick = drawTheta;
$("draw-det").onclick = drawDet;
$("ranks").onclick = ranks;
drawTheta();
drawDet();
ranks();
