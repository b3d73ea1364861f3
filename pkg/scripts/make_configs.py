"""Regenerate the example configs in configs/."""
import json
from pathlib import Path

import numpy as np

from meqoc.algebra import S_X, exp_anti_hermitian, matrix_to_pairs

OUT = Path(__file__).resolve().parent.parent / "configs"


def term(pauli, scale=0.5, pinned=None, label=""):
    t = {"matrix": {"pauli": pauli, "scale": scale}, "label": label or pauli}
    if pinned is not None:
        t["pinned"] = pinned
    return t


def base(dim, terms, T, K, **kw):
    cfg = {"schema_version": 1, "system": {"dim": dim, "terms": terms}, "horizon": {"T": T, "K": K}}
    cfg.update(kw)
    return cfg


def transmon(with_zz: bool):
    delta, J = 1.0, 0.2
    terms = [
        term("z0", pinned=-delta, label="T_z0"),
        term("xx", pinned=J, label="T_xx"),
        term("yy", pinned=J, label="T_yy"),
        term("x0", label="T_x0"),
    ]
    forward = {"3": [0.4, -0.2, 0.1, 0.3]}
    if with_zz:
        terms.append(term("zz", label="T_zz"))
        forward["4"] = [0.2, 0.2, -0.1, 0.0]
    return base(
        4, terms, 1.0, 4,
        description="two transmons in the rotating frame, detuning 1, exchange 0.2"
        + (", tunable zz coupling" if with_zz else ""),
        magnus_order=2, relax_order=2, bounds=[-1.0, 1.0],
        target={"forward_controls": forward, "via": "magnus"},
    )


CONFIGS = {
    "drift_drive.json": base(
        2, [term("z", pinned=1.0, label="drift"), term("x", label="drive")], 1.0, 2,
        description="qubit with unit drift and a bounded x drive; reachable target from b = (0.3, 0.7)",
        magnus_order=2, relax_order=2, bounds=[-1.0, 1.0],
        target={"forward_controls": {"1": [0.3, 0.7]}, "via": "magnus"},
    ),
    "rotation.json": base(
        2, [term("x", label="drive")], 4.0, 4,
        description="pi/2 rotation about x with a single commuting control",
        magnus_order=1, relax_order=1, bounds=[0.0, 1.0],
        target={"matrix": {"pairs": matrix_to_pairs(exp_anti_hermitian(-1j * np.pi / 2 * S_X))}},
    ),
    "identity.json": base(
        2, [term("x", label="x drive"), term("y", label="y drive")], 1.0, 2,
        description="identity target with an energy penalty; the optimum is the zero pulse",
        magnus_order=2, relax_order=2, bounds=[-1.0, 1.0], lambda_energy=0.1,
        target={"identity": True},
    ),
    "linear_drive.json": base(
        2, [term("z", pinned=0.5, label="drift"), term("x", label="drive")], 1.0, 4,
        description="linear ramp b t with a = b = 0.5, T = 1; target from fine propagation of the ramp samples",
        magnus_order=2, relax_order=2, bounds=[0.0, 0.5],
        target={"forward_controls": {"1": [0.5 * (k + 0.5) / 4 for k in range(4)]}, "via": "propagation"},
        modes={"substeps": 50},
    ),
    "two_transmon.json": transmon(False),
    "two_transmon_zz.json": transmon(True),
    "divergent_qubit.json": base(
        2, [term("z", pinned=1.0, label="drift"), term("x", label="drive")], 7.0, 4,
        description="horizon beyond the Magnus convergence bound (a T / 2 >= pi)",
        magnus_order=2, relax_order=2, bounds=[-0.1, 0.1], target={"identity": True},
    ),
}


def main():
    OUT.mkdir(exist_ok=True)
    for name, cfg in CONFIGS.items():
        (OUT / name).write_text(json.dumps(cfg, indent=2) + "\n")
        print("wrote", OUT / name)


if __name__ == "__main__":
    main()
