// Build with: wasm-pack build crates/wasm --target web --out-dir www/pkg
import init, { distances, saturation, validate, fixture } from "./pkg/quantalg_wasm.js";

const $ = (id) => document.getElementById(id);
const KINDS = ["FRel", "PSMet", "PQMet", "DMet", "MMet", "SMet", "QMet", "PMet", "Met", "UMet"];
const EXAMPLES = ["lk", "semilattice", "convex_kantorovich", "discrete", "empty"];

function show(out, json, render) {
  const r = JSON.parse(json);
  out.classList.toggle("err", "error" in r);
  out.textContent = "error" in r ? r.error : render(r.ok);
}

function table(rows) {
  const width = Math.max(...rows.flat().map((c) => c.length));
  return rows.map((r) => r.map((c) => c.padStart(width)).join("  ")).join("\n");
}

await init();

for (const k of KINDS) $("d-kind").add(new Option(k, k, k === "DMet", k === "DMet"));
for (const e of EXAMPLES) $("s-example").add(new Option(e));
$("s-theory").value = fixture("lk");
$("s-example").onchange = (e) => ($("s-theory").value = fixture(e.target.value));

$("d-run").onclick = () =>
  show($("d-out"), distances($("d-kind").value, $("d-space").value, $("d-mu").value, $("d-nu").value), (r) =>
    [
      `ŁK          ${r.lk}`,
      `Kantorovich ${r.kantorovich}`,
      "",
      "optimal coupling",
      table([["", ...r.cols], ...r.coupling.map((row, i) => [r.rows[i], ...row])]),
    ].join("\n"));

$("d-check").onclick = () =>
  show($("d-out"), validate($("d-kind").value, $("d-space").value), (r) =>
    r.valid ? `valid ${r.kind} space` : r.violations.join("\n"));

$("s-run").onclick = () => {
  $("s-out").textContent = "saturating...";
  // let the message paint before the synchronous call
  setTimeout(() =>
    show($("s-out"), saturation($("s-theory").value, Number($("s-depth").value), $("s-lhs").value, $("s-rhs").value), (r) => {
      const lines = [];
      if (r.query !== null) lines.push(`d(s, t) = ${r.query}`, "");
      lines.push(`${r.classes.length} classes, fixpoint ${r.fixpoint ? "reached" : "not reached"}`);
      r.classes.forEach((c, i) => lines.push(`  k${i}: ${c}`));
      lines.push("", table([["", ...r.classes.map((_, i) => `k${i}`)], ...r.matrix.map((row, i) => [`k${i}`, ...row])]));
      for (const w of r.warnings) lines.push(`warning: ${w}`);
      return lines.join("\n");
    }), 0);
};
