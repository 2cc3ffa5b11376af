"""
Tangent planes for the Weymouth equation
========================================

The flow through a pipe grows with the square root of the difference of
squared end pressures. The market models replace it by tangent planes
placed at fixed pressure pairs; this shows how close the envelope gets.
"""
import numpy as np

from gaslight.gas import oa_coefficients, pressure_points, weymouth_flow

k = 12.0
bounds = (30.0, 60.0)

for count in (2, 5, 10, 20):
    pts = pressure_points(bounds, bounds, count)
    planes = [oa_coefficients(k, pt) for pt in pts.forward]
    hi, lo = np.meshgrid(np.linspace(*bounds, 200), np.linspace(*bounds, 200))
    mask = hi >= lo
    env = np.min([c.ki * hi - c.ko * lo for c in planes], axis=0)
    exact = k * np.sqrt(np.maximum(hi**2 - lo**2, 0))
    worst = (env - exact)[mask].max()
    print(f"{count:3d} planes per direction: worst overestimate {worst:8.3f} kcf/h "
          f"({100 * worst / weymouth_flow(k, 60, 30):.2f}% of the largest flow)")

# every plane touches the surface at its own pressure pair
pt = pressure_points(bounds, bounds, 20).forward[7]
c = oa_coefficients(k, pt)
print("at", (round(pt.high, 3), round(pt.low, 3)), "plane", c.plane(pt.high, pt.low),
      "exact", weymouth_flow(k, pt.high, pt.low))
