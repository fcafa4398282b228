"""Runge-pair and P-convexity verdicts on rasterized planar domains."""
from rungekit.domains import p_convexity_check, rasterize, runge_pair_check

window = {"lo": [-2, -2], "hi": [2, 2]}
shapes = {
    "plane": {"plane": {}},
    "upper half-plane": {"halfspace": {"normal": [0, 1], "offset": 0}},
    "punctured plane": {"difference": [{"plane": {}}, {"ball": {"center": [0, 0], "radius": 0}}]},
    "disc": {"ball": {"center": [0, 0], "radius": 1.5}},
}
grids = {k: rasterize({"shape": v, "window": window, "spacing": 0.1}) for k, v in shapes.items()}

for inner, outer in [("upper half-plane", "plane"), ("punctured plane", "plane")]:
    v = runge_pair_check(grids[inner], grids[outer])
    print(f"runge pair ({inner}, {outer}): {v.outcome}", v.witness or "")

for name in ("disc", "punctured plane"):
    v = p_convexity_check(grids[name])
    print(f"P-convex {name}: {v.outcome}")
