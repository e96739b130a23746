"""Container for the averaged quantities of a wave packet."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYM_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def sym_to_vec6(Q) -> np.ndarray:
    Q = np.asarray(Q)
    return np.array([Q[i, j] for i, j in SYM_INDEX])


def vec6_to_sym(q) -> np.ndarray:
    Q = np.empty((3, 3), dtype=np.asarray(q).dtype)
    for v, (i, j) in zip(q, SYM_INDEX):
        Q[i, j] = Q[j, i] = v
    return Q


@dataclass(frozen=True)
class MomentState:
    """Energy E, centroid X, momentum P, angular momentum Jang, quadrupole Q."""

    E: float
    X: np.ndarray
    P: np.ndarray
    Jang: np.ndarray
    Q: np.ndarray

    def as_dict(self) -> dict:
        return {"E": float(self.E), "X": self.X.tolist(), "P": self.P.tolist(),
                "J": self.Jang.tolist(), "Q": self.Q.tolist()}
