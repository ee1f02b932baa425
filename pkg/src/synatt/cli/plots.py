"""Plot emission: four SVG panels per scenario, derived purely from traces.

Panels: scalar part eta(t), logic index q(t), |omega(t)|, |tau(t)|. Each
panel overlays all controller legs of the scenario. Rendering is headless
(Agg) and deterministic: fixed svg hash salt, no embedded dates.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "synatt"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["write_plots", "PANELS"]

PANELS = ("eta", "q", "omega", "tau")

_YLABEL = {
    "eta": r"$\eta(t)$",
    "q": r"$q(t)$",
    "omega": r"$|\omega(t)|$ [rad/s]",
    "tau": r"$|\tau_c(t)|$ [N m]",
}


def _panel_series(trace, panel: str) -> np.ndarray:
    if panel == "eta":
        return trace.eta
    if panel == "q":
        return trace.q.astype(float)
    if panel == "omega":
        return np.linalg.norm(trace.omega, axis=1)
    if panel == "tau":
        return np.linalg.norm(trace.tau, axis=1)
    raise ValueError(f"unknown panel {panel!r}")


def write_plots(out_dir, scenario_name: str, traces: dict) -> list:
    """Write one SVG per panel; `traces` maps leg label -> SimTrace."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for panel in PANELS:
        fig, ax = plt.subplots(figsize=(6.0, 3.2))
        for label, trace in traces.items():
            y = _panel_series(trace, panel)
            if panel == "q":
                ax.step(trace.t, y, where="post", label=label)
            else:
                ax.plot(trace.t, y, label=label)
        ax.set_xlabel("t [s]")
        ax.set_ylabel(_YLABEL[panel])
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best")
        if panel == "q":
            ax.set_yticks([-1, 1])
            ax.set_ylim(-1.5, 1.5)
        fig.tight_layout()
        path = out_dir / f"{scenario_name}_{panel}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
