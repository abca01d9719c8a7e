import init, { bundled_network, allocate, simulate_counter, run_stream } from "./pkg/bnmon_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const ALGORITHMS = ["baseline", "uniform", "nonuniform"];
const COLORS = { baseline: "#888", uniform: "#1f77b4", nonuniform: "#d62728", exact: "#2ca02c" };

function network() {
  return bundled_network($("network").value);
}

function guarded(outId, fn) {
  return () => {
    $(outId).className = "";
    try {
      fn();
    } catch (e) {
      $(outId).className = "error";
      $(outId).textContent = String(e.message ?? e);
    }
  };
}

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(40, 10);
  ctx.lineTo(40, h - 20);
  ctx.lineTo(w - 10, h - 20);
  ctx.stroke();
}

function budgetExplorer() {
  const views = ALGORITHMS.map((a) => JSON.parse(allocate(network(), a, num("epsilon"))));
  const canvas = $("budget-chart");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  axes(ctx, w, h);
  const n = views[0].nodes.length;
  const max = Math.max(...views.flatMap((v) => v.nodes.map((x) => x.nu)));
  const slot = (w - 60) / n;
  const bar = slot / (views.length + 1);
  views.forEach((v, k) => {
    ctx.fillStyle = COLORS[v.algorithm];
    v.nodes.forEach((node, i) => {
      const y = ((h - 30) * node.nu) / max;
      ctx.fillRect(45 + i * slot + k * bar, h - 20 - y, bar, y);
    });
  });
  ctx.fillStyle = "#222";
  ctx.fillText(max.toExponential(2), 2, 14);
  ctx.fillText("node →", w - 50, h - 5);
  $("budget-out").innerHTML =
    "<table><tr><th>scheme</th><th>objective Σ JK/ν + Σ K/μ</th></tr>" +
    views
      .map((v) => `<tr><td style="color:${COLORS[v.algorithm]}">${v.algorithm}</td><td>${v.objective.toExponential(3)}</td></tr>`)
      .join("") +
    "</table>";
}

function counterSimulation() {
  const count = num("counter-count");
  const trace = JSON.parse(simulate_counter(num("epsilon"), num("sites"), count, num("counter-seed")));
  const canvas = $("counter-chart");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  axes(ctx, w, h);
  const maxRel = Math.max(num("epsilon") * 3, ...trace.map((p) => Math.abs(p.estimate / p.count - 1)));
  const x = (c) => 40 + ((w - 50) * c) / count;
  const y = (rel) => (h - 20) / 2 - (((h - 40) / 2) * rel) / maxRel;
  ctx.strokeStyle = "#ccc";
  for (const r of [-num("epsilon"), 0, num("epsilon")]) {
    ctx.beginPath();
    ctx.moveTo(40, y(r));
    ctx.lineTo(w - 10, y(r));
    ctx.stroke();
  }
  ctx.strokeStyle = COLORS.nonuniform;
  ctx.beginPath();
  trace.forEach((p, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, x(p.count), y(p.estimate / p.count - 1)));
  ctx.stroke();
  ctx.fillStyle = "#222";
  ctx.fillText("relative error (lines at ±ε)", 45, 14);
  const last = trace[trace.length - 1];
  $("counter-out").textContent =
    `after ${last.count} increments: estimate ${last.estimate.toFixed(1)}, ` +
    `${last.messages} messages (${((100 * last.messages) / last.count).toFixed(2)}% of an exact counter)`;
}

function streamRun() {
  const rows = JSON.parse(
    run_stream(network(), ["exact", ...ALGORITHMS].join(","), num("epsilon"), num("sites"), num("stream-events"), num("stream-seed")),
  );
  $("stream-out").innerHTML =
    "<table><tr><th>algorithm</th><th>update messages</th><th>control messages</th><th>probes within e<sup>±ε</sup> of exact</th></tr>" +
    rows
      .map(
        (r) =>
          `<tr><td style="color:${COLORS[r.algorithm]}">${r.algorithm}</td><td>${r.update_messages}</td>` +
          `<td>${r.control_messages}</td><td>${(100 * r.band_fraction).toFixed(1)}%</td></tr>`,
      )
      .join("") +
    "</table>";
}

await init();
$("budget-run").onclick = guarded("budget-out", budgetExplorer);
$("counter-run").onclick = guarded("counter-out", counterSimulation);
$("stream-run").onclick = guarded("stream-out", streamRun);
guarded("budget-out", budgetExplorer)();
