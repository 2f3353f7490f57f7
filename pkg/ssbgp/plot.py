"""
Plotting routines.
"""
import tempfile
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402

from ssbgp.sim import Metrics, Scenario  # noqa: E402

ROLE_COLORS = {"HONEST": "tab:blue", "TRUNCATOR": "tab:red", "REPEATER": "tab:orange"}


def plot_scenario(
    scenario: Scenario,
    metrics: Optional[Metrics] = None,
    path: Optional[Path] = None,
    destination: Optional[str] = None,
) -> Path:
    """
    Draw the coverage disks and nodes of a scenario.

    If metrics are given, each node's next hop towards destination (the
    first initiator by default) is drawn as an arrow.

    Parameters
    ----------
    scenario
        The scenario to draw.
    metrics
        The outcome of running the scenario.
    path
        Output image; a temporary png if None.
    destination
        The route destination whose next hops are drawn.
    """
    path = Path(path or Path(tempfile.mkdtemp()) / f"{scenario.name or 'scenario'}.png")
    destination = destination or scenario.initiators[0]
    positions = {x.id: (x.x, x.y) for x in scenario.nodes}
    fig, ax = plt.subplots(1, 1, figsize=(8, 7))
    for node in scenario.nodes:
        color = ROLE_COLORS[node.role]
        disk = Circle((node.x, node.y), scenario.radius, alpha=0.08, color=color)
        ax.add_patch(disk)
        ax.scatter([node.x], [node.y], color=color, zorder=3)
        ax.annotate(node.id, (node.x, node.y), xytext=(4, 4), textcoords="offset points")
    if metrics is not None:
        for node, table in metrics.tables.items():
            entry = table.get(destination)
            if entry is None:
                continue
            start, end = positions[node], positions[entry["next_hop"]]
            ax.annotate(
                "",
                xy=end,
                xytext=start,
                arrowprops=dict(arrowstyle="->", color="gray", lw=1.5),
            )
    ax.set_aspect("equal")
    ax.autoscale_view()
    title = f"{scenario.name or 'scenario'} ({scenario.protocol})"
    if metrics is not None:
        title = f"{title}, next hops to {destination}"
    ax.set_title(title)
    path.parent.mkdir(exist_ok=True, parents=True)
    fig.savefig(path)
    plt.close(fig)
    return path
