"""
Linearized quadrotor about hover, closed with a finite-horizon LQ tracking law.

State ordering follows the block layout of the model matrices:
(x, y, z, phi, theta, psi, u, v, w, p, q, r), i.e. positions, Euler angles,
translational velocities, body rates. Inputs are the deviations of the squared
rotor speeds from their hover values; the disturbance is a wind acceleration
acting on the translational velocity channels.
"""
from dataclasses import dataclass, fields
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from algorithms.lq_tracking import LqTracking
from models.ellipsoid import Ellipsoid
from models.system import (
    ConstantFunction,
    EllipsoidalSignal,
    GridFunction,
    LtvSystem,
    TimeFunction,
    UncertaintySpec,
    as_time_function,
)
from utils.errors import ConfigError
from utils.logging_utils import get_logger

logger = get_logger("quadrotor")

STATE_NAMES = ("x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r")
POSITION_COORDS = (0, 1, 2)

DEFAULT_X0 = np.array([1.0] + [0.0] * 11)
DEFAULT_X0_SHAPE = np.diag([0.8147, 0.4854, 0.7431, 0.0344, 0.6551, 0.9593,
                            0.6160, 0.0540, 0.1656, 0.9961, 0.4314, 0.5132])
DEFAULT_W_SHAPE = 0.01 * np.eye(3)


@dataclass(frozen=True)
class QuadrotorParams:
    """Physical parameters (SI units)."""
    mass: float = 0.468
    arm_length: float = 0.225
    j_xx: float = 5e-3
    j_yy: float = 5e-3
    j_zz: float = 9e-3
    thrust_coeff: float = 7.2e-5
    drag_coeff: float = 1.1e-5
    gravity: float = 9.81

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0.0:
                raise ConfigError(f"Quadrotor parameter '{f.name}' must be positive, got {value}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "QuadrotorParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown quadrotor parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


def _mixer(params: QuadrotorParams) -> np.ndarray:
    ct, cd, arm = params.thrust_coeff, params.drag_coeff, params.arm_length
    return np.array([
        [ct, ct, ct, ct],
        [arm * ct, 0.0, -arm * ct, 0.0],
        [0.0, arm * ct, 0.0, -arm * ct],
        [cd, -cd, cd, -cd],
    ])


def nominal_rotor_speeds(params: QuadrotorParams) -> np.ndarray:
    """Squared hover rotor speeds: total thrust equals weight, torques vanish."""
    rhs = np.array([params.mass * params.gravity, 0.0, 0.0, 0.0])
    return np.linalg.solve(_mixer(params), rhs)


def build_open_loop(params: QuadrotorParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Hover linearization (A, B, G) with n=12, m=4, p=3.

    Returns:
        A (12 x 12), B (12 x 4), G (12 x 3)
    """
    g = params.gravity
    a = np.zeros((12, 12))
    a[0:3, 6:9] = np.eye(3)
    a[3:6, 9:12] = np.eye(3)
    a[6:9, 3:6] = np.array([[0.0, -g, 0.0],
                            [g, 0.0, 0.0],
                            [0.0, 0.0, 0.0]])

    roll = params.arm_length * params.thrust_coeff / params.j_xx
    pitch = params.arm_length * params.thrust_coeff / params.j_yy
    yaw = params.drag_coeff / params.j_zz
    b = np.zeros((12, 4))
    b[8, :] = params.thrust_coeff / params.mass
    b[9:12, :] = np.array([[roll, 0.0, -roll, 0.0],
                           [0.0, pitch, 0.0, -pitch],
                           [yaw, -yaw, yaw, -yaw]])

    gw = np.zeros((12, 3))
    gw[6:9, :] = np.eye(3)
    return a, b, gw


def desired_state(t: float) -> np.ndarray:
    """Helix reference (cos t, sin t, t) with matching velocities."""
    x_d = np.zeros(12)
    x_d[0:3] = (np.cos(t), np.sin(t), t)
    x_d[6:9] = (-np.sin(t), np.cos(t), 1.0)
    return x_d


def default_weights() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Q, R, M) used for the tracking design."""
    q = np.diag([1000.0] * 3 + [1.0, 1.0, 10.0] + [1.0] * 6)
    r = 0.1 * np.eye(4)
    m = np.diag([1000.0] * 3 + [1.0] * 9)
    return q, r, m


def design_tracking(params: QuadrotorParams, horizon: float = 1.0, intervals: int = 2000,
                    reference: Callable[[float], np.ndarray] = desired_state) -> LqTracking:
    a, b, _ = build_open_loop(params)
    q, r, m = default_weights()
    return LqTracking.design(a, b, q, r, m, reference, horizon, intervals)


def default_disturbance() -> EllipsoidalSignal:
    """w_c(t) = (cos t, sin t, cos t), W = 0.01 I."""
    return EllipsoidalSignal(
        lambda t: np.array([np.cos(t), np.sin(t), np.cos(t)]),
        ConstantFunction(DEFAULT_W_SHAPE),
    )


def build_closed_loop(params: QuadrotorParams, tracking: LqTracking,
                      estimation_error: Optional[TimeFunction] = None,
                      disturbance: Optional[EllipsoidalSignal] = None,
                      initial: Optional[Ellipsoid] = None) -> Tuple[LtvSystem, UncertaintySpec]:
    """
    Closed loop x' = A_cl(t) x + B_cl eta + G w.

    A_cl = A + B K(t) is sampled on the tracking grid, B_cl = B R^{-1} B^T, and the
    estimation error xi in E(0, E(t)) enters through eta = P xi + v, so that
    eta(t) lies in E(v(t), P(t) E(t) P(t)^T).

    Raises:
        ValueError: the estimation error is defined on a different time grid
    """
    a, b, g = build_open_loop(params)
    times = tracking.times
    if estimation_error is None:
        estimation_error = ConstantFunction(np.eye(12))
    estimation_error = as_time_function(estimation_error)
    if isinstance(estimation_error, GridFunction) and not np.array_equal(estimation_error.times, times):
        raise ValueError("Estimation error grid does not match the tracking grid")

    a_cl = a[None, :, :] + np.einsum("ij,tjk->tik", b, tracking.gains)
    b_cl = b @ tracking.input_map
    eta_shapes = np.array([p @ np.atleast_2d(estimation_error(t)) @ p.T
                           for t, p in zip(times, tracking.riccati)])
    eta_shapes = 0.5 * (eta_shapes + np.transpose(eta_shapes, (0, 2, 1)))

    system = LtvSystem(GridFunction(times, a_cl), ConstantFunction(b_cl), ConstantFunction(g))
    uncertainty = UncertaintySpec(
        x0=initial if initial is not None else Ellipsoid(DEFAULT_X0, DEFAULT_X0_SHAPE),
        u=EllipsoidalSignal(GridFunction(times, tracking.feedforward), GridFunction(times, eta_shapes)),
        w=disturbance if disturbance is not None else default_disturbance(),
    )
    uncertainty.validate(system, float(times[0]))
    return system, uncertainty


@dataclass
class QuadrotorCaseStudy:
    """Everything needed to run the hover-tracking reachability case study."""
    params: QuadrotorParams
    tracking: LqTracking
    system: LtvSystem
    uncertainty: UncertaintySpec
    coords: Tuple[int, ...] = POSITION_COORDS


def build_case_study(params: Optional[QuadrotorParams] = None, horizon: float = 1.0,
                     intervals: int = 2000) -> QuadrotorCaseStudy:
    """Default case study: tracking design, closed loop and uncertainty sets."""
    params = params or QuadrotorParams()
    tracking = design_tracking(params, horizon, intervals)
    system, uncertainty = build_closed_loop(params, tracking)
    logger.info("Quadrotor closed loop built on [0, %g] with %d grid intervals", horizon, intervals)
    return QuadrotorCaseStudy(params, tracking, system, uncertainty)
