import logging
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from app.errors import DimensionError, DomainError, NumericalError
from app.models.schemas import PropagatorConfig, SignConvention

logger = logging.getLogger(__name__)

EIGEN_RECONSTRUCTION_TOL = 1e-10
UNITARY_INPUT_TOL = 1e-8


def build_laplacian(order: int) -> np.ndarray:
    if order < 1:
        raise DomainError(f"Laplacian order must be >= 1, got {order}")
    laplacian = -2.0 * np.eye(order)
    off = np.ones(order - 1)
    laplacian += np.diag(off, 1) + np.diag(off, -1)
    return laplacian


def build_hamiltonian(cfg: PropagatorConfig, laplacian: np.ndarray, potential: np.ndarray) -> np.ndarray:
    if laplacian.shape != potential.shape or laplacian.ndim != 2 or laplacian.shape[0] != laplacian.shape[1]:
        raise DimensionError(
            f"Laplacian {laplacian.shape} and potential {potential.shape} must be square of equal order"
        )
    hamiltonian = cfg.sigma1 * laplacian + cfg.sigma2 * potential
    # Both terms are symmetric; averaging removes rounding asymmetry from the inputs.
    return 0.5 * (hamiltonian + hamiltonian.T)


def unitarity_residual(matrix: np.ndarray) -> float:
    gram = matrix @ matrix.conj().T
    return float(np.max(np.abs(gram - np.eye(matrix.shape[0]))))


def time_one_map(hamiltonian: np.ndarray, sign: SignConvention = SignConvention.PLUS) -> np.ndarray:
    """exp(+-iH) through a symmetric eigendecomposition, so the result stays unitary."""
    order = hamiltonian.shape[0]
    h_max = float(np.max(np.abs(hamiltonian))) if hamiltonian.size else 0.0
    if h_max == 0.0:
        return np.eye(order, dtype=np.complex128)

    try:
        eigvals, eigvecs = np.linalg.eigh(hamiltonian)
    except np.linalg.LinAlgError as e:
        raise NumericalError(
            "symmetric eigendecomposition did not converge",
            {"order": order, "h_max": h_max, "cause": str(e)},
        ) from e

    residual = float(np.max(np.abs((eigvecs * eigvals) @ eigvecs.T - hamiltonian)))
    if residual > EIGEN_RECONSTRUCTION_TOL * h_max:
        raise NumericalError(
            "eigendecomposition failed the reconstruction gate",
            {"order": order, "residual": residual, "h_max": h_max},
        )

    phases = np.exp(1j * sign.factor * eigvals)
    propagator = (eigvecs * phases) @ eigvecs.T
    logger.debug(
        f"Time-one map: order={order}, spectrum=[{eigvals[0]:.4f}, {eigvals[-1]:.4f}], "
        f"eig residual={residual:.2e}"
    )
    return propagator


def expm_oracle(hamiltonian: np.ndarray, sign: SignConvention = SignConvention.PLUS) -> np.ndarray:
    # Pade scaling-and-squaring; reference only, unitarity is not structurally guaranteed.
    return expm(1j * sign.factor * hamiltonian)


def evolve_ode(
    hamiltonian: np.ndarray,
    u0: np.ndarray,
    t: float,
    dt: float,
    sign: SignConvention = SignConvention.PLUS,
    on_step: Optional[Callable[[float, np.ndarray], None]] = None,
) -> np.ndarray:
    """Classical RK4 integration of u' = +-iHu, matching time_one_map's sign at t = 1."""
    if dt <= 0 or t < 0:
        raise DomainError(f"need dt > 0 and t >= 0, got t={t}, dt={dt}")
    if dt >= t:
        raise DomainError(f"step dt={dt} must be smaller than horizon t={t}")
    state = np.asarray(u0, dtype=np.complex128).copy()
    if state.shape != (hamiltonian.shape[0],):
        raise DimensionError(f"state length {state.shape} does not match order {hamiltonian.shape[0]}")
    if not np.all(np.isfinite(state)):
        raise DomainError("initial state must be finite")

    generator = 1j * sign.factor * hamiltonian
    steps = int(np.ceil(t / dt - 1e-9))
    h = t / steps
    for step in range(steps):
        k1 = generator @ state
        k2 = generator @ (state + 0.5 * h * k1)
        k3 = generator @ (state + 0.5 * h * k2)
        k4 = generator @ (state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if on_step is not None:
            on_step((step + 1) * h, state)
    return state


def spreading_metric(propagator: np.ndarray) -> float:
    """Mean column participation ratio; 1.0 for a phased permutation."""
    residual = unitarity_residual(propagator)
    if residual > UNITARY_INPUT_TOL:
        raise DomainError(f"spreading metric needs a unitary matrix, residual={residual:.2e}")
    fourth = np.sum(np.abs(propagator) ** 4, axis=0)
    return float(np.mean(1.0 / fourth))
