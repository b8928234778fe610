const { Demo } = require(process.argv[2] || "./s2c_web.js");
const d = new Demo("box_room", 7n);
const rgba = d.render_rgba(30, -10);
console.log("gaussians", d.gaussian_count(), "rgba", rgba.length, "alpha", rgba[3]);
const plan = JSON.parse(d.plan(0.1));
console.log("plan cameras", plan.cameras.length, "coverage", plan.input_coverage.toFixed(3), "->", plan.final_coverage.toFixed(3));
const w = d.warp(20, 40, 0);
console.log("warp energy", w.energy().toFixed(4), "valid", w.valid_fraction().toFixed(3));
try { new Demo("attic", 1n); } catch (e) { console.log("error:", e); }
