import init, { simulate, estimate, kernelCurve } from "./pkg/pairpot_web.js";

const RANGE = 1.0;
const $ = (id) => document.getElementById(id);
let points = null;
let pointsSide = 0;

function controls() {
  return {
    kind: $("kind").value,
    beta: +$("beta").value,
    param: +$("param").value,
    side: +$("side").value,
    seed: +$("seed").value,
    kernel: $("kernel").value,
    bw: +$("bw").value,
  };
}

function showValues() {
  for (const id of ["beta", "param", "side", "bw"]) $(id + "-v").textContent = $(id).value;
}

function status(msg) {
  $("status").textContent = msg || "";
}

function drawPattern() {
  const c = $("pattern"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (!points) return;
  const s = c.width / pointsSide;
  g.fillStyle = "#124";
  for (let i = 0; i < points.length; i += 2) {
    g.beginPath();
    g.arc(points[i] * s, c.height - points[i + 1] * s, 2, 0, 2 * Math.PI);
    g.fill();
  }
  g.strokeStyle = "#c60";
  g.setLineDash([4, 4]);
  const m = 2 * RANGE * s;
  g.strokeRect(m, m, c.width - 2 * m, c.height - 2 * m);
  g.setLineDash([]);
}

function axes(g, c, xmax, ymin, ymax) {
  const px = (x) => 30 + (x / xmax) * (c.width - 40);
  const py = (y) => c.height - 20 - ((y - ymin) / (ymax - ymin)) * (c.height - 30);
  g.strokeStyle = "#888";
  g.beginPath();
  g.moveTo(px(0), py(0)); g.lineTo(px(xmax), py(0));
  g.moveTo(px(0), py(ymin)); g.lineTo(px(0), py(ymax));
  g.stroke();
  g.fillStyle = "#444";
  g.fillText(ymax.toFixed(1), 2, py(ymax) + 4);
  g.fillText(ymin.toFixed(1), 2, py(ymin));
  g.fillText("r", px(xmax) - 8, py(0) - 4);
  return [px, py];
}

function line(g, pts, px, py, color, dashed) {
  g.strokeStyle = color;
  g.setLineDash(dashed ? [5, 4] : []);
  g.beginPath();
  let pen = false;
  for (const [x, y] of pts) {
    if (!Number.isFinite(y)) { pen = false; continue; }
    if (pen) g.lineTo(px(x), py(y)); else g.moveTo(px(x), py(y));
    pen = true;
  }
  g.stroke();
  g.setLineDash([]);
}

function drawGamma(rows) {
  const c = $("gamma"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const est = [], truth = [];
  for (let i = 0; i < rows.length; i += 3) {
    est.push([rows[i], rows[i + 1]]);
    truth.push([rows[i], rows[i + 2]]);
  }
  const finite = est.concat(truth).map((p) => p[1]).filter(Number.isFinite);
  const ymax = Math.max(1, ...finite.map((v) => Math.min(v, 4)));
  const ymin = Math.min(-0.5, ...finite.map((v) => Math.max(v, -2)));
  const [px, py] = axes(g, c, RANGE, ymin, ymax);
  line(g, truth, px, py, "#c60", true);
  line(g, est, px, py, "#124", false);
  g.fillStyle = "#124"; g.fillText("γ̂", c.width - 40, 15);
  g.fillStyle = "#c60"; g.fillText("γ", c.width - 20, 15);
}

function drawKernel() {
  const c = $("kernel-plot"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const k = kernelCurve($("kernel").value, 121);
  const pts = [];
  for (let i = 0; i < k.length; i += 2) pts.push([k[i] + 1.2, k[i + 1]]);
  const [px, py] = axes(g, c, 2.4, -0.3, 1.1);
  line(g, pts, px, py, "#124", false);
}

function runSimulate() {
  const v = controls();
  status("simulating…");
  setTimeout(() => {
    try {
      points = simulate(v.kind, v.beta, RANGE, v.param, v.side, v.seed);
      pointsSide = v.side;
      status(`${points.length / 2} points`);
      drawPattern();
      runEstimate();
    } catch (e) {
      status(e.message || String(e));
    }
  }, 0);
}

function runEstimate() {
  if (!points) return;
  const v = controls();
  try {
    drawGamma(estimate(points, pointsSide, v.kind, v.beta, RANGE, v.param, v.kernel, v.bw, 40));
  } catch (e) {
    status(e.message || String(e));
  }
}

await init();
for (const el of document.querySelectorAll("input")) el.addEventListener("input", showValues);
$("simulate").addEventListener("click", runSimulate);
$("estimate").addEventListener("click", runEstimate);
$("bw").addEventListener("change", runEstimate);
$("kernel").addEventListener("change", () => { drawKernel(); runEstimate(); });
showValues();
drawKernel();
runSimulate();
