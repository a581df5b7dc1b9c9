"""
Seeded random streams and unit-ball sampling.

Streams use the counter-based Philox bit generator keyed by (seed, stream id),
so independent consumers (trajectory sampler, direction generator, rejection
sampler) never share state and results do not depend on call order.
"""
import numpy as np

SAMPLE_MODES = ("interior", "boundary")


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for one named stream derived from a user seed."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))


def sample_unit_ball(rng: np.random.Generator, count: int, dim: int,
                     mode: str = "interior") -> np.ndarray:
    """
    Draw points from the d-dimensional unit ball.

    Directions are normalized Gaussian draws. In interior mode the radius is
    u^(1/d), which makes the points uniform in volume; boundary mode keeps
    every point on the unit sphere.

    Returns:
        Array of shape (count, dim)
    """
    if mode not in SAMPLE_MODES:
        raise ValueError(f"Unknown sample mode '{mode}', expected one of {SAMPLE_MODES}")
    if dim == 0:
        return np.zeros((count, 0))
    points = rng.standard_normal((count, dim))
    norms = np.linalg.norm(points, axis=1)
    norms[norms == 0.0] = 1.0
    points /= norms[:, None]
    if mode == "interior":
        points *= rng.random(count)[:, None] ** (1.0 / dim)
    return points
