import init, { solve, cost_curve, sweep_curves, simulate_cell } from "./pkg/sygen_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

// ---------------------------------------------------------------------------
// canvas plotting
// ---------------------------------------------------------------------------

function frame(canvas, xMin, xMax, yMin, yMax) {
  const ctx = canvas.getContext("2d");
  const pad = { l: 54, r: 12, t: 10, b: 30 };
  const w = canvas.width - pad.l - pad.r;
  const h = canvas.height - pad.t - pad.b;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const sx = (x) => pad.l + ((x - xMin) / (xMax - xMin)) * w;
  const sy = (y) => pad.t + h - ((y - yMin) / (yMax - yMin)) * h;

  ctx.strokeStyle = "#d7dce2";
  ctx.fillStyle = "#68717d";
  ctx.font = "11px system-ui";
  ctx.lineWidth = 1;
  const ticks = 5;
  for (let i = 0; i <= ticks; i++) {
    const x = xMin + ((xMax - xMin) * i) / ticks;
    const y = yMin + ((yMax - yMin) * i) / ticks;
    ctx.beginPath();
    ctx.moveTo(sx(x), pad.t);
    ctx.lineTo(sx(x), pad.t + h);
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(pad.l, sy(y));
    ctx.lineTo(pad.l + w, sy(y));
    ctx.stroke();
    ctx.textAlign = "center";
    ctx.fillText(x.toPrecision(3), sx(x), canvas.height - 12);
    ctx.textAlign = "right";
    ctx.fillText(y.toPrecision(3), pad.l - 6, sy(y) + 4);
  }
  return { ctx, sx, sy };
}

function polyline(ctx, sx, sy, xs, ys, color, width = 2) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  let started = false;
  for (let i = 0; i < xs.length; i++) {
    if (ys[i] === null || !isFinite(ys[i])) continue;
    if (!started) {
      ctx.moveTo(sx(xs[i]), sy(ys[i]));
      started = true;
    } else {
      ctx.lineTo(sx(xs[i]), sy(ys[i]));
    }
  }
  ctx.stroke();
}

const palette = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2", "#be185d", "#4d7c0f"];

// ---------------------------------------------------------------------------
// panel 1: solve + cost curve
// ---------------------------------------------------------------------------

function runSolve() {
  const dist = $("solve-dist").value;
  const scale = num("solve-scale");
  const cs = num("solve-cs");
  const ce = num("solve-ce");
  const m = parseInt($("solve-m").value, 10);
  const sol = JSON.parse(solve(dist, scale, cs, ce, m));
  const out = $("solve-out");
  if (sol.error) {
    out.textContent = sol.error;
    out.classList.add("error");
    return;
  }
  out.classList.remove("error");
  out.textContent =
    `q* = ${sol.q_star.toPrecision(8)}` +
    (sol.u_star !== null ? `   (q*/λ = ${sol.u_star.toPrecision(8)})` : "") +
    `\nexpected cost at q* = ${sol.expected_cost.toPrecision(8)}` +
    `\nstationarity residual = ${sol.residual.toExponential(2)}`;

  const qMax = dist === "unif" ? scale : Math.max(3 * scale, 2.2 * sol.q_star);
  const flat = cost_curve(dist, scale, cs, ce, m, qMax, 241);
  const qs = [], csts = [];
  for (let i = 0; i < flat.length; i += 2) {
    qs.push(flat[i]);
    csts.push(flat[i + 1]);
  }
  const visible = csts.filter((c) => isFinite(c));
  const span = Math.min(Math.max(...visible), 6 * sol.expected_cost);
  const { ctx, sx, sy } = frame($("solve-canvas"), 0, qMax, 0, span * 1.05);
  polyline(ctx, sx, sy, qs, csts.map((c) => (c > span ? null : c)), palette[0]);
  ctx.fillStyle = "#dc2626";
  ctx.beginPath();
  ctx.arc(sx(sol.q_star), sy(sol.expected_cost), 4.5, 0, 2 * Math.PI);
  ctx.fill();
  ctx.fillStyle = "#1c2430";
  ctx.textAlign = "left";
  ctx.fillText(" optimum", sx(sol.q_star) + 4, sy(sol.expected_cost) - 6);
}

// ---------------------------------------------------------------------------
// panel 2: sweep curves
// ---------------------------------------------------------------------------

function runSweep() {
  const data = JSON.parse(
    sweep_curves($("sweep-ms").value, num("sweep-lo"), num("sweep-hi"), parseInt($("sweep-steps").value, 10))
  );
  const out = $("sweep-out");
  if (data.error) {
    out.textContent = data.error;
    out.classList.add("error");
    return;
  }
  out.classList.remove("error");
  const all = data.curves.flat().filter((v) => v !== null);
  const yMax = Math.max(...all) * 1.05;
  const { ctx, sx, sy } = frame($("sweep-canvas"), data.rho[0], data.rho[data.rho.length - 1], 0, yMax);
  const legend = [];
  data.m_values.forEach((m, k) => {
    const color = palette[k % palette.length];
    polyline(ctx, sx, sy, data.rho, data.curves[k], color);
    legend.push(`m=${m}`);
    ctx.fillStyle = color;
    ctx.textAlign = "left";
    const lastIdx = data.curves[k].length - 1;
    ctx.fillText(`m=${m}`, sx(data.rho[lastIdx]) - 34, sy(data.curves[k][lastIdx]) - 5);
  });
  const spreadNote = data.m_values.length > 1
    ? "curves flatten toward a common level as the loss degree grows"
    : "";
  out.textContent = `q*/λ for ${legend.join(", ")} over ρ = cs/ce. ${spreadNote}`;
}

// ---------------------------------------------------------------------------
// panel 3: estimator cell
// ---------------------------------------------------------------------------

function runSim() {
  const out = $("sim-out");
  out.textContent = "running…";
  // let the browser paint before the synchronous wasm call
  setTimeout(() => {
    const res = JSON.parse(
      simulate_cell(
        $("sim-kind").value,
        parseInt($("sim-m").value, 10),
        num("sim-rho"),
        parseInt($("sim-n").value, 10),
        parseInt($("sim-reps").value, 10),
        BigInt($("sim-seed").value)
      )
    );
    if (res.error) {
      out.textContent = res.error;
      out.classList.add("error");
      return;
    }
    out.classList.remove("error");
    out.textContent =
      `true q* = ${res.q_star.toPrecision(8)}\n` +
      `bias = ${res.bias === null ? "n/a" : res.bias.toPrecision(6)}   ` +
      `mse = ${res.mse === null ? "n/a" : res.mse.toPrecision(6)}   ` +
      `rmse = ${res.mse === null ? "n/a" : Math.sqrt(res.mse).toPrecision(6)}\n` +
      `failed replications: ${res.reps_failed}`;
  }, 20);
}

// ---------------------------------------------------------------------------

async function main() {
  await init();
  $("solve-run").addEventListener("click", runSolve);
  $("sweep-run").addEventListener("click", runSweep);
  $("sim-run").addEventListener("click", runSim);
  runSolve();
  runSweep();
}

main();
