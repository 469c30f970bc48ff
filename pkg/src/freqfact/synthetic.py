"""Synthetic data generators and closed-form reference solutions.

The cosine-mixture dataset couples a main series (sum of cosines over the
configured cycle counts) with one auxiliary series per cycle, each carrying a
single cosine.  Spatial profiles are uniform[0, 1) so the nonnegative code
structure stays clean.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, SingularGramError
from .spectral import dft_rows, idft_rows

__all__ = [
    "SyntheticSpec",
    "gen_cosine_mixture",
    "CodeDecomposition",
    "closed_form_code",
    "NormDescentResult",
    "norm_descent_experiment",
]


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator configuration.

    ``sigma`` is the auxiliary-noise std; ``x_sigma`` the main-series noise
    std (default 1.0, the base construction).  Set both to zero for exact
    band-limited data.
    """

    d: int
    T: int = 163
    freqs: tuple[int, ...] = (14, 6)
    sigma: float = 1.0
    x_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.T < 2:
            raise ValueError("need d >= 1 and T >= 2")
        if not self.freqs:
            raise ValueError("freqs must be nonempty")
        if any(not 0 < f < self.T / 2 for f in self.freqs):
            raise ValueError(f"each cycle count must lie in (0, T/2), got {self.freqs}")
        if self.sigma < 0 or self.x_sigma < 0:
            raise ValueError("noise levels must be nonnegative")
        object.__setattr__(self, "freqs", tuple(int(f) for f in self.freqs))


def gen_cosine_mixture(spec: SyntheticSpec) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
    """Generate (X, (Y_0, ..., Y_{S-1})) with S = len(spec.freqs).

    X[i, j] = u_i * sum_f cos(2 pi f j / T) + x_sigma * noise, and each
    auxiliary Y_k carries only cycle freqs[k] plus sigma-scaled noise.
    Draw order is fixed (profiles, then X noise, then each Y's noise; zero
    noise levels draw nothing), so a seed pins the output bit-for-bit.
    """
    rng = np.random.default_rng(spec.seed)
    j = np.arange(spec.T)
    u = rng.random(spec.d)
    vs = [rng.random(spec.d) for _ in spec.freqs]
    x = np.outer(u, sum(np.cos(2 * np.pi * f * j / spec.T) for f in spec.freqs))
    if spec.x_sigma:
        x = x + spec.x_sigma * rng.standard_normal((spec.d, spec.T))
    ys = []
    for v, f in zip(vs, spec.freqs):
        yk = np.outer(v, np.cos(2 * np.pi * f * j / spec.T))
        if spec.sigma:
            yk = yk + spec.sigma * rng.standard_normal((spec.d, spec.T))
        ys.append(yk)
    return x, tuple(ys)


@dataclass(frozen=True)
class CodeDecomposition:
    """Unconstrained least-squares code split into a main-data-driven term
    and the auxiliary/main spectral-mismatch term; code == x_term + mismatch."""

    code: np.ndarray
    x_term: np.ndarray
    mismatch: np.ndarray


def closed_form_code(
    w: np.ndarray,
    wp: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    xi: float,
) -> CodeDecomposition:
    """Normal-equation solution of the stacked least-squares code problem.

    With Wbar = [W; sqrt(xi) Wp], Xbar = [X; sqrt(xi) Y] and
    M = (Wbar^T Wbar)^{-1} Wbar^T, the minimizer M Xbar splits into

      * x_term: the main data X weighted by M's X-block plus sqrt(xi) times
        each auxiliary block, and
      * mismatch: the sqrt(xi)-weighted auxiliary blocks applied to the
        inverse transform of (spectrum(Y_p) - spectrum(X)).

    A zero mismatch means the auxiliaries carry exactly the main data's
    spectral content, so supervision cannot distort the inferred code.
    The auxiliary stack must be S * d rows for integer S.
    """
    w = np.asarray(w, dtype=float)
    wp = np.asarray(wp, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    d = x.shape[0]
    if wp.shape[0] != y.shape[0] or wp.shape[0] % d != 0:
        raise ValueError(
            f"auxiliary rows ({wp.shape[0]}, {y.shape[0]}) must equal S*{d} for integer S"
        )
    S = wp.shape[0] // d
    sq = np.sqrt(xi)
    wbar = np.vstack([w, sq * wp])
    xbar = np.vstack([x, sq * y])
    gram = wbar.T @ wbar
    evals = np.linalg.eigvalsh(gram)
    if evals[-1] <= 0.0 or evals[0] <= 1e-13 * evals[-1]:
        raise SingularGramError("stacked dictionary Gram is singular")
    m = np.linalg.solve(gram, wbar.T)
    code = m @ xbar

    mx = m[:, :d]
    blocks = [m[:, d + p * d : d + (p + 1) * d] for p in range(S)]
    x_term = (mx + sq * sum(blocks)) @ x if S else mx @ x
    spec_x = dft_rows(x)
    mismatch = np.zeros_like(code)
    for p, mp in enumerate(blocks):
        yp = y[p * d : (p + 1) * d]
        mismatch = mismatch + sq * (mp @ idft_rows(dft_rows(yp) - spec_x))
    return CodeDecomposition(code, x_term, mismatch)


@dataclass
class NormDescentResult:
    trajectory: list[np.ndarray] = field(default_factory=list)
    steps_taken: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.trajectory[-1]

    @property
    def final_spectrum(self) -> np.ndarray:
        return dft_rows(self.final)


_DEFAULT_RATES = {"frobenius": 0.1, "l1": 0.1, "minkowski": 0.5}


def norm_descent_experiment(
    h0: np.ndarray,
    norm: str,
    threshold: float,
    max_steps: int,
    rate: float | None = None,
) -> NormDescentResult:
    """Projected (sub)gradient descent on a bare norm until ||H||_F drops
    below ``threshold``.

    Update rules (rates default to 0.1 / 0.1 / 0.5):

      * frobenius:  H <- max{0, H - a H}
      * l1:         H <- max{0, H - a sign(H)}
      * minkowski:  H <- max{0, H - a Re(sign(Re spectrum(H)) @ Finv)}

    The minkowski rule uses the raw real-sign descent direction (constant
    factors absorbed into the rate).  Trajectory includes H0 and every
    iterate; exceeding ``max_steps`` raises :class:`ConvergenceError`.
    """
    if norm not in _DEFAULT_RATES:
        raise ValueError(f"norm must be one of {sorted(_DEFAULT_RATES)}, got {norm!r}")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    a = _DEFAULT_RATES[norm] if rate is None else rate
    h = np.atleast_2d(np.asarray(h0, dtype=float)).copy()
    result = NormDescentResult(trajectory=[h.copy()])
    for step in range(max_steps):
        if np.linalg.norm(h) < threshold:
            result.steps_taken = step
            return result
        if norm == "frobenius":
            g = h
        elif norm == "l1":
            g = np.sign(h)
        else:
            signs = np.sign(np.fft.fft(h, axis=1).real)
            g = np.fft.ifft(signs, axis=1).real
        h = np.maximum(h - a * g, 0.0)
        result.trajectory.append(h.copy())
    if np.linalg.norm(h) < threshold:
        result.steps_taken = max_steps
        return result
    raise ConvergenceError(
        f"||H||_F = {np.linalg.norm(h):.3e} still above {threshold} after {max_steps} steps"
    )
