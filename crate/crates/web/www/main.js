// Expects the output of `wasm-pack build --target web crates/web` in ./pkg
import init, { Simulation, lp_annulus } from "./pkg/relhartree2d_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

let sim = null;
let running = false;

function drawGray(canvas, values, n) {
  canvas.width = n;
  canvas.height = n;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  let max = 0;
  for (const v of values) max = Math.max(max, v);
  const scale = max > 0 ? 255 / max : 0;
  // values are row-major with the first index along x1; draw x1 to the right
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const g = values[i * n + j] * scale;
      const p = 4 * ((n - 1 - j) * n + i);
      img.data[p] = g;
      img.data[p + 1] = g * 0.8;
      img.data[p + 2] = 255 - g;
      img.data[p + 3] = 255;
    }
  }
  ctx.putImageData(img, 0, 0);
}

function drawRate() {
  const canvas = $("rate");
  const ctx = canvas.getContext("2d");
  const rate = sim.phase_rate_axis();
  const xi = sim.axis_frequencies();
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  let max = 0;
  for (const v of rate) max = Math.max(max, v);
  if (max <= 0) return;
  const x0 = xi[0];
  const x1 = xi[xi.length - 1];
  ctx.beginPath();
  rate.forEach((v, k) => {
    const px = ((xi[k] - x0) / (x1 - x0)) * canvas.width;
    const py = canvas.height - (v / max) * (canvas.height - 10) - 5;
    if (k === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.fillText(`max ${max.toExponential(3)}`, 6, 12);
}

function redraw() {
  drawGray($("field"), sim.modulus(), sim.n());
  drawRate();
  $("status").textContent = `t = ${sim.time().toFixed(2)}, mass = ${sim.mass().toFixed(12)}`;
}

function reset() {
  if (sim) sim.free();
  sim = new Simulation(num("n"), num("L"), num("lambda"), num("gamma"),
                       num("amp"), num("width"), num("mom"));
  redraw();
  drawAnnulus();
}

function drawAnnulus() {
  const n = sim.n();
  drawGray($("annulus"), lp_annulus(n, num("L"), num("dyad")), n);
}

function frame() {
  if (!running) return;
  sim.advance(4, num("dt"));
  redraw();
  requestAnimationFrame(frame);
}

await init();
$("reset").onclick = reset;
$("run").onclick = () => {
  running = !running;
  if (running) requestAnimationFrame(frame);
};
$("dyad").onchange = drawAnnulus;
reset();
