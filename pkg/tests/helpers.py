import numpy as np


def random_unitary(rng, order: int) -> np.ndarray:
    z = rng.standard_normal((order, order)) + 1j * rng.standard_normal((order, order))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_symmetric(rng, order: int) -> np.ndarray:
    m = rng.standard_normal((order, order))
    return 0.5 * (m + m.T)


def data_rows(path) -> list[str]:
    return [line for line in path.read_text().splitlines() if line and not line.startswith("#")]
