"""
Reach-tube visualization utilities using Plotly.
"""
from typing import Optional, Sequence

import numpy as np
import plotly.graph_objects as go

from models.ellipsoid import Ellipsoid
from utils.linalg import sqrt_psd


def ellipsoid_surface(e: Ellipsoid, resolution: int = 24):
    """
    Mesh of a 3-D ellipsoid boundary q + Q^{1/2} s over the unit sphere.

    Returns:
        (x, y, z) arrays of shape (resolution, resolution)
    """
    if e.dim != 3:
        raise ValueError(f"Surface plots need a 3-D ellipsoid, got dimension {e.dim}")
    theta = np.linspace(0.0, np.pi, resolution)
    phi = np.linspace(0.0, 2.0 * np.pi, resolution)
    theta, phi = np.meshgrid(theta, phi)
    sphere = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
    points = e.center + sphere @ sqrt_psd(e.shape)
    return points[..., 0], points[..., 1], points[..., 2]


def plot_reach_tube(ellipsoids: Sequence[Ellipsoid], times: Optional[Sequence[float]] = None,
                    samples: Optional[np.ndarray] = None, title: str = "Reach tube",
                    axis_labels: Sequence[str] = ("x", "y", "z"), opacity: float = 0.25) -> go.Figure:
    """
    Projected reach tube: one translucent surface per snapshot, centers in red.

    Args:
        ellipsoids: 3-D ellipsoids, one per snapshot
        times: Snapshot times used for hover labels
        samples: Optional sampled states of shape (count, snapshots, 3)
        title: Plot title
        axis_labels: Names of the three coordinates
        opacity: Surface opacity

    Returns:
        Plotly figure
    """
    if not ellipsoids:
        raise ValueError("No ellipsoids to plot")
    if times is None:
        times = list(range(len(ellipsoids)))

    fig = go.Figure()
    for t, e in zip(times, ellipsoids):
        x, y, z = ellipsoid_surface(e)
        fig.add_trace(go.Surface(
            x=x, y=y, z=z,
            opacity=opacity,
            showscale=False,
            colorscale='Blues',
            name=f"t = {t:g}",
            hoverinfo='name',
        ))

    centers = np.array([e.center for e in ellipsoids])
    fig.add_trace(go.Scatter3d(
        x=centers[:, 0], y=centers[:, 1], z=centers[:, 2],
        mode='lines+markers',
        marker=dict(size=4, color='red'),
        line=dict(width=2, color='red'),
        text=[f"t = {t:g}" for t in times],
        hoverinfo='text',
        name='Centers',
    ))

    if samples is not None:
        points = np.asarray(samples, dtype=float).reshape(-1, 3)
        fig.add_trace(go.Scatter3d(
            x=points[:, 0], y=points[:, 1], z=points[:, 2],
            mode='markers',
            marker=dict(size=1.5, color='black', opacity=0.4),
            name='Sampled states',
        ))

    fig.update_layout(
        title=title,
        showlegend=True,
        scene=dict(
            xaxis_title=axis_labels[0],
            yaxis_title=axis_labels[1],
            zaxis_title=axis_labels[2],
            aspectmode='data',
        ),
        height=700,
    )
    return fig


def save_reach_tube(fig: go.Figure, path: str) -> None:
    """Write the figure as a self-contained HTML file."""
    fig.write_html(path, include_plotlyjs=True)
