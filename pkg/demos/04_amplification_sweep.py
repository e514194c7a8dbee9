"""
Amplification against post-selection probability
=================================================

Sweep the rotation angle through the configuration the command line
uses, and print the weak value and success probability for each point.
"""

from pathlib import Path

from dataclasses import replace

from atomwva import load, run_sweep
from atomwva.config import SweepSpec, with_value

cfg = load(Path(__file__).with_name("cavity.ini"))
# theta = pi/2 makes the weak value real; it diverges as eta approaches 3 pi / 4
cfg = with_value(cfg, "qubit.theta", 3.141592653589793 / 2)
cfg = replace(cfg, sweep=SweepSpec("postselect.eta", 1.6, 2.34, 9))
rows = run_sweep(cfg)

print(" eta     Re A_w    Im A_w       P     p shift  status")
for r in rows:
    print(f"{r['value']:5.2f}  {r['re_weak_value']:8.3f}  {r['im_weak_value']:8.3f}  {r['probability']:8.2e}"
          f"  {r['measured_p_shift']: .2e}  {r['status']}")

# the same table from the shell:
#   atomwva sweep --config demos/cavity.ini --format csv --out sweep.csv
