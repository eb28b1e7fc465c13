"""One exact path of the indicator drift on [0, 2], refined on a 1e-3 grid."""
import numpy as np

from skewexact import SimConfig, drift_b1, fill_path, simulate
from skewexact.grs import theta_from_drift
from skewexact.sim import write_skeletons_csv

spec = drift_b1()
skeleton = simulate(spec, 0.5, SimConfig(T=2.0, T_el=0.55, seed=7), 1)[0]
print(f"skeleton: {len(skeleton.times)} points, restarts {skeleton.restarts}")
path = fill_path(skeleton, np.arange(1e-3, 2.0, 1e-3), theta_from_drift(spec), np.random.default_rng(8),
                 shift=spec.z1)
write_skeletons_csv("path.csv", [path])
print(f"refined path: {len(path.times)} points written to path.csv")
