import init, { Simulation, gamma_report, logistic_report } from "./pkg/ksgd_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

await init();

let sim = null;
let running = false;
const canvas = $("field");
const ctx = canvas.getContext("2d");

function draw() {
  const n = sim.n();
  canvas.width = n;
  canvas.height = n;
  ctx.putImageData(new ImageData(new Uint8ClampedArray(sim.render_rgba()), n, n), 0, 0);
  $("stats").textContent =
    `t      = ${sim.time().toFixed(4)}\n` +
    `‖u‖∞   = ${sim.linf().toPrecision(6)}\n` +
    `mass   = ${sim.mass().toPrecision(6)}\n` +
    `mass₀  = ${sim.initial_mass().toPrecision(6)}\n` +
    `status = ${sim.status()}`;
}

function frame() {
  if (!running) return;
  const status = sim.step(5);
  draw();
  if (status === "Running") requestAnimationFrame(frame);
  else running = false;
}

$("start").onclick = () => {
  try {
    if (sim) sim.free();
    sim = new Simulation(num("n"), num("chi"), num("c"), num("gamma"), num("tau"), num("seed"));
  } catch (e) {
    $("stats").textContent = String(e);
    sim = null;
    return;
  }
  draw();
  running = true;
  requestAnimationFrame(frame);
};

$("pause").onclick = () => {
  if (!sim) return;
  running = !running;
  if (running) requestAnimationFrame(frame);
};

$("check").onclick = () => {
  $("gamma-out").textContent = gamma_report(num("dim"), num("gamma2"));
};

$("constants").onclick = () => {
  $("logistic-out").textContent =
    logistic_report(num("a"), num("b"), num("alpha"), num("beta"), num("c2"));
};
