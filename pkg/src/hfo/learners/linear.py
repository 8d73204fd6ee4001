"""L2-regularized logistic regression trained with Newton steps.

Features are standardized to zero mean and unit variance before fitting;
constant features are zeroed out rather than divided by a zero sigma. The
penalty applies to the weights only, never the bias. Training stops when the
L2 norm of the full gradient drops below LR_GRAD_TOL or after LR_MAX_ITER
Newton iterations, whichever comes first, with step halving whenever a full
step fails to lower the objective.

logistic_objective and logistic_gradient are module-level functions of the
stacked parameter vector (weights then bias) so the gradient can be checked
against finite differences of the objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import LR_GRAD_TOL, LR_L2, LR_MAX_ITER


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_objective(wb: np.ndarray, x: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Penalized negative log-likelihood; wb stacks weights then bias."""
    w, b = wb[:-1], wb[-1]
    z = x @ w + b
    # log(1 + exp(z)) - y*z, evaluated without overflow
    loss = float(np.sum(np.logaddexp(0.0, z) - y * z))
    return loss + 0.5 * lam * float(w @ w)


def logistic_gradient(wb: np.ndarray, x: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    w, b = wb[:-1], wb[-1]
    r = _sigmoid(x @ w + b) - y
    return np.concatenate([x.T @ r + lam * w, [float(np.sum(r))]])


@dataclass
class LogisticModel:
    w: np.ndarray
    b: float
    mu: np.ndarray
    inv_sigma: np.ndarray
    dim: int
    n_iter: int
    converged: bool
    grad_norm: float

    @classmethod
    def fit(
        cls,
        x: np.ndarray,
        y: np.ndarray,
        lam: float = LR_L2,
        max_iter: int = LR_MAX_ITER,
        tol: float = LR_GRAD_TOL,
    ) -> "LogisticModel":
        n, d = x.shape
        mu = x.mean(axis=0)
        sigma = x.std(axis=0)
        inv_sigma = np.where(sigma > 0.0, 1.0 / np.where(sigma > 0.0, sigma, 1.0), 0.0)
        xs = (x - mu) * inv_sigma
        yf = y.astype(np.float64)

        wb = np.zeros(d + 1, dtype=np.float64)
        obj = logistic_objective(wb, xs, yf, lam)
        grad = logistic_gradient(wb, xs, yf, lam)
        n_iter = 0
        while n_iter < max_iter and float(np.linalg.norm(grad)) >= tol:
            n_iter += 1
            z = xs @ wb[:-1] + wb[-1]
            s = _sigmoid(z)
            weight = s * (1.0 - s)
            h = np.empty((d + 1, d + 1), dtype=np.float64)
            h[:d, :d] = (xs * weight[:, None]).T @ xs + lam * np.eye(d)
            h[:d, d] = xs.T @ weight
            h[d, :d] = h[:d, d]
            # tiny diagonal keeps the unpenalized bias block invertible
            h[d, d] = float(np.sum(weight)) + 1e-10
            try:
                step = np.linalg.solve(h, grad)
            except np.linalg.LinAlgError:
                step = grad
            scale = 1.0
            for _ in range(60):
                cand = wb - scale * step
                cand_obj = logistic_objective(cand, xs, yf, lam)
                if cand_obj <= obj:
                    break
                scale *= 0.5
            else:
                break
            wb, obj = cand, cand_obj
            grad = logistic_gradient(wb, xs, yf, lam)

        grad_norm = float(np.linalg.norm(grad))
        return cls(
            w=wb[:-1].copy(),
            b=float(wb[-1]),
            mu=mu,
            inv_sigma=inv_sigma,
            dim=d,
            n_iter=n_iter,
            converged=grad_norm < tol,
            grad_norm=grad_norm,
        )

    def decision_values(self, x: np.ndarray) -> np.ndarray:
        return ((x - self.mu) * self.inv_sigma) @ self.w + self.b

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_values(x))

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        # probability exactly one half votes completed
        return (self.decision_values(x) > 0.0).astype(np.int64)

    def to_payload(self) -> dict:
        return {
            "w": self.w.tolist(),
            "b": self.b,
            "mu": self.mu.tolist(),
            "inv_sigma": self.inv_sigma.tolist(),
            "dim": self.dim,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "LogisticModel":
        return cls(
            w=np.asarray(payload["w"], dtype=np.float64),
            b=float(payload["b"]),
            mu=np.asarray(payload["mu"], dtype=np.float64),
            inv_sigma=np.asarray(payload["inv_sigma"], dtype=np.float64),
            dim=int(payload["dim"]),
            n_iter=int(payload["n_iter"]),
            converged=bool(payload["converged"]),
            grad_norm=float(payload["grad_norm"]),
        )
