"""Operation-projection reconstruction of low-rank, sparse density matrices.

The solver alternates two stages until the step size stalls below tolerance:

* a structural stage that enforces the expected characteristics of the
  solution (eigenvalue thresholding for low rank, entrywise thresholding for
  sparsity, trace normalization), and
* a projection stage that returns the iterate to the solution space of the
  measurement system by sweeping sequential orthogonal projections onto the
  hyperplane of each orthonormalized measurement row.

Row convention: each measurement contributes the row u = conj(vec(Â)), so the
plain (non-conjugating) dot product ``u · vec(ρ)`` equals Tr[Â ρ]. The
hyperplane normal of row u under the standard complex inner product is
conj(u).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateIterateError, DegenerateSystemError, InvariantViolation
from .linalg import eig_hermitian, frob_norm, hermiticity_error, mat, vec
from .simulate import MeasurementSet, Projector

__all__ = [
    "ReconstructionConfig",
    "OrthoSystem",
    "ReconstructionReport",
    "CorrectionDiagnostics",
    "vectorize_projector",
    "measurement_rows",
    "orthogonalize",
    "threshold_eigs",
    "threshold_elements",
    "normalize_trace",
    "clip_to_psd",
    "enforce_structure",
    "project_hyperplane",
    "kaczmarz_sweep",
    "reconstruct",
]

THRESHOLD_MODES = ("relative", "absolute")


@dataclass
class ReconstructionConfig:
    """Solver knobs.

    tau: eigenvalue threshold, as a fraction of the largest eigenvalue in
        "relative" mode (default; scale-invariant before trace normalization)
        or an absolute cut in "absolute" mode.
    tau_ell: entrywise threshold, same two modes against the largest entry
        modulus.
    step_tol_rel: convergence when the Frobenius step between consecutive
        iterates falls below step_tol_rel × (norm of the current iterate).
    k_max: iteration cap; hitting it is reported, not raised.
    init: optional starting matrix; the maximally mixed state I/D when None.
    """

    tau: float = 0.4
    tau_ell: float = 0.04
    step_tol_rel: float = 1e-3
    k_max: int = 500
    init: np.ndarray | None = None
    threshold_mode: str = "relative"

    def __post_init__(self):
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if self.threshold_mode == "relative":
            if not 0.0 < self.tau < 1.0:
                raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
            if not 0.0 < self.tau_ell < 1.0:
                raise ValueError(f"tau_ell must lie in (0, 1), got {self.tau_ell}")
        else:
            if not self.tau > 0 or not self.tau_ell > 0:
                raise ValueError("absolute thresholds must be positive")
        if not self.step_tol_rel > 0:
            raise ValueError("step_tol_rel must be positive")
        if int(self.k_max) < 1:
            raise ValueError("k_max must be at least 1")
        self.k_max = int(self.k_max)


@dataclass(eq=False)
class OrthoSystem:
    """An orthonormalized measurement system with the same solution set as
    the original one.

    ``rows`` are orthonormal under the standard complex inner product;
    ``probs_prime`` carries the right-hand side through the identical
    elimination coefficients. ``probs_prime`` is real: for rows derived from
    Hermitian operators the elimination coefficients are real up to rounding
    (orthogonalize enforces this).
    """

    rows: np.ndarray
    probs_prime: np.ndarray
    n_dropped: int = 0
    origin: object = None

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass(eq=False)
class CorrectionDiagnostics:
    """Outcome of the subset-based probability correction (see correction
    module); attached to the report of the corrected run."""

    applied: bool
    n_subsets: int = 0
    subset_sizes: list[int] = field(default_factory=list)
    subset_converged: list[bool] = field(default_factory=list)
    subset_delta_norms: list[float] = field(default_factory=list)
    delta_norm: float = 0.0
    n_clamped: int = 0
    reason: str = ""
    raw_report: "ReconstructionReport | None" = None


@dataclass(eq=False)
class ReconstructionReport:
    """Recovered matrix plus convergence diagnostics.

    ``rho`` is the final iterate with the structural stage applied once more,
    so it is Hermitian, PSD, trace 1; ``rho_pre_gamma`` (the wire-format name)
    is the raw converged sweep output, which still sits on the measurement
    hyperplanes.
    """

    rho: np.ndarray
    rho_pre_gamma: np.ndarray
    iterations: int
    final_step: float
    final_step_tol: float
    converged: bool
    per_iteration_residuals: list[float]
    per_iteration_steps: list[float]
    n_dropped_rows: int = 0
    correction: CorrectionDiagnostics | None = None


def vectorize_projector(a: Projector) -> np.ndarray:
    """Measurement row for a projector: conj(vec(Â)), so that the plain dot
    product with vec(ρ) equals Tr[Â ρ] exactly."""
    w = a.joint_vector()
    # vec(|w><w|) = kron(conj(w), w) under column stacking; conjugate it.
    return np.kron(w, w.conj())


def measurement_rows(ms: MeasurementSet) -> np.ndarray:
    """Stack the vectorized rows of a measurement set into the M×N matrix A.

    Filled row by row into a preallocated array; at d=17 the matrix is
    ~3.4 GB and a list-then-stack would transiently double that.
    """
    if len(ms) == 0:
        raise DegenerateSystemError("measurement set is empty")
    dim = ms.d**2
    rows = np.empty((len(ms), dim * dim), dtype=complex)
    for i, a in enumerate(ms.projectors):
        rows[i] = vectorize_projector(a)
    return rows


def orthogonalize(
    a_rows: np.ndarray,
    probs: np.ndarray,
    *,
    drop_tol: float = 1e-10,
    origin: object = None,
    overwrite: bool = False,
) -> OrthoSystem:
    """Gram-Schmidt orthonormalization of measurement rows, carrying the
    probabilities through the identical elimination/scaling coefficients.

    Rows whose residual norm after elimination falls below ``drop_tol`` times
    their original norm are dropped together with their probability entry;
    the count is reported on the returned system. Elimination runs twice per
    row (classical Gram-Schmidt with reorthogonalization) so the output rows
    are orthonormal to machine precision.

    With ``overwrite`` the input array is consumed as workspace (the returned
    rows view into it), which halves peak memory for large systems.
    """
    work = np.array(a_rows, dtype=complex, copy=not overwrite)
    if work.ndim != 2:
        raise ValueError(f"expected an M×N row matrix, got shape {work.shape}")
    p = np.asarray(probs, dtype=float)
    m_in, _ = work.shape
    if p.shape != (m_in,):
        raise ValueError(f"{m_in} rows but {p.size} probabilities")

    pp = np.empty(m_in, dtype=complex)
    kept = 0
    for i in range(m_in):
        v = work[i].copy()
        beta = complex(p[i])
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            continue
        for _ in range(2):
            if kept:
                # ⟨q_j, v⟩ for all previous rows, conjugating the small
                # vector rather than the row block (no M×N temporaries)
                coef = (work[:kept] @ v.conj()).conj()
                v -= coef @ work[:kept]
                beta -= coef @ pp[:kept]
        r = np.linalg.norm(v)
        if r < drop_tol * norm0:
            continue
        work[kept] = v / r
        pp[kept] = beta / r
        kept += 1

    dropped = m_in - kept
    if kept == 0:
        raise DegenerateSystemError("every measurement row was dropped as dependent")
    pp = pp[:kept]
    worst_imag = float(np.abs(pp.imag).max())
    if worst_imag > 1e-9:
        raise ValueError(
            "transformed probabilities acquired imaginary parts up to "
            f"{worst_imag:.3e}; rows do not derive from Hermitian operators"
        )
    return OrthoSystem(
        rows=work[:kept],
        probs_prime=pp.real.copy(),
        n_dropped=dropped,
        origin=origin,
    )


def _eig_threshold_cut(w: np.ndarray, tau: float, mode: str) -> float:
    if mode == "relative":
        lam_max = float(w[0])
        if lam_max <= 0.0:
            raise DegenerateIterateError(
                f"largest eigenvalue {lam_max!r} is not positive; thresholding "
                "would zero the matrix"
            )
        return tau * lam_max
    return float(tau)


def threshold_eigs(rho: np.ndarray, tau: float, mode: str = "relative") -> np.ndarray:
    """Zero every eigenvalue below the threshold and recompose.

    In "relative" mode the cut is tau × (largest eigenvalue). Negative
    eigenvalues are always below the (positive) cut, so the output is PSD.
    """
    if mode not in THRESHOLD_MODES:
        raise ValueError(f"mode must be one of {THRESHOLD_MODES}")
    w, v = eig_hermitian(rho)
    cut = _eig_threshold_cut(w, tau, mode)
    keep = w >= cut
    if not keep.any():
        raise DegenerateIterateError("no eigenvalue at or above the threshold")
    w = np.where(keep, w, 0.0)
    return (v * w) @ v.conj().T


def threshold_elements(rho: np.ndarray, tau_ell: float, mode: str = "relative") -> np.ndarray:
    """Zero every entry whose modulus falls below the threshold.

    In "relative" mode the cut is tau_ell × (largest entry modulus). The
    decision uses the larger modulus of each (r,c)/(c,r) pair so zeroing is
    conjugate-symmetric and Hermiticity is preserved even for inputs with
    rounding-level asymmetry.
    """
    if mode not in THRESHOLD_MODES:
        raise ValueError(f"mode must be one of {THRESHOLD_MODES}")
    a = np.asarray(rho)
    mod = np.abs(a)
    mod = np.maximum(mod, mod.T)
    if mode == "relative":
        peak = float(mod.max())
        if peak == 0.0:
            return a.copy()
        cut = tau_ell * peak
    else:
        cut = float(tau_ell)
    return np.where(mod >= cut, a, 0.0)


def normalize_trace(rho: np.ndarray) -> np.ndarray:
    """Divide by the trace so the output has trace exactly 1."""
    a = np.asarray(rho)
    tr = complex(np.trace(a))
    if abs(tr) <= 1e-12:
        raise DegenerateIterateError(f"trace {tr!r} too small to normalize")
    return a / tr


def clip_to_psd(rho: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """Project onto the PSD cone by zeroing negative eigenvalues.

    Exact no-op for matrices whose spectrum sits above ``-floor``; the default
    floor tolerates eigensolver rounding on genuinely PSD inputs while staying
    an order of magnitude inside the -1e-10 validity band demanded of
    structural-stage outputs.
    """
    w, v = eig_hermitian(rho)
    if w[-1] >= -floor:
        return np.asarray(rho)
    w = np.maximum(w, 0.0)
    return (v * w) @ v.conj().T


def enforce_structure(rho: np.ndarray, cfg: ReconstructionConfig) -> np.ndarray:
    """The combined structural stage: rank thresholding, then entrywise
    sparsification, then trace normalization, in that order.

    Zeroing individual entries of a PSD matrix can push a few eigenvalues
    slightly negative; the result is projected back onto the PSD cone before
    normalization so that every structural output is a valid density matrix
    (Hermitian, PSD, trace 1).
    """
    out = threshold_eigs(rho, cfg.tau, cfg.threshold_mode)
    out = threshold_elements(out, cfg.tau_ell, cfg.threshold_mode)
    out = clip_to_psd(out)
    return normalize_trace(out)


def project_hyperplane(x: np.ndarray, normal: np.ndarray, target: float) -> np.ndarray:
    """Orthogonal projection of ``x`` onto the hyperplane ⟨normal, y⟩ = target
    (standard complex inner product, conjugating the normal).

    The update x + k·normal with k = target − ⟨normal, x⟩ is the minimum-norm
    correction; requires a unit normal.
    """
    n = np.asarray(normal)
    x = np.asarray(x)
    if n.shape != x.shape:
        raise ValueError(f"dimension mismatch: {n.shape} vs {x.shape}")
    nrm = np.linalg.norm(n)
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError(f"normal must be unit length, got norm {nrm!r}")
    k = target - np.vdot(n, x)
    return x + k * n


def kaczmarz_sweep(x: np.ndarray, system: OrthoSystem) -> np.ndarray:
    """Project sequentially onto the hyperplane of every row, in stored order.

    Row u with right-hand side p' defines the hyperplane u·y = p', whose unit
    normal is conj(u). Because the rows are orthonormal, one pass lands on the
    intersection of all hyperplanes: the result satisfies every constraint
    simultaneously and equals the orthogonal projection of ``x`` onto the
    solution affine subspace.
    """
    x = np.array(x, dtype=complex)
    if x.shape != (system.dim,):
        raise ValueError(f"iterate has shape {x.shape}, system dimension {system.dim}")
    rows = system.rows
    pp = system.probs_prime
    for i in range(system.n_rows):
        row = rows[i]
        k = pp[i] - np.dot(row, x)
        x += k * row.conj()
    return x


def _initial_iterate(cfg: ReconstructionConfig, dim: int) -> np.ndarray:
    if cfg.init is None:
        return np.eye(dim, dtype=complex) / dim
    init = np.asarray(cfg.init, dtype=complex)
    if init.shape != (dim, dim):
        raise ValueError(f"init has shape {init.shape}, expected {(dim, dim)}")
    return init.copy()


def reconstruct(
    ms: MeasurementSet,
    cfg: ReconstructionConfig | None = None,
    *,
    system: OrthoSystem | None = None,
    on_iteration: Callable[[int, float, float], None] | None = None,
) -> ReconstructionReport:
    """Run the full operation-projection loop on a measurement set.

    Per iteration: structural stage, vectorize, sequential hyperplane sweep,
    reshape, then stop once the Frobenius step between consecutive iterates
    falls below step_tol_rel × (norm of the current iterate). The reported
    ``rho`` has the structural stage applied once more so it carries the
    desired characteristics; the raw sweep output is kept as
    ``rho_pre_gamma``.

    Two runtime invariants are checked after every sweep and raise
    InvariantViolation on failure: the iterate stays Hermitian to 1e-9 and
    satisfies every orthonormalized constraint to 1e-9.

    ``on_iteration(k, step, step_tol)`` is invoked once per iteration for
    progress streaming.
    """
    if cfg is None:
        cfg = ReconstructionConfig()
    dim = ms.d**2
    if system is None:
        rows = measurement_rows(ms)
        system = orthogonalize(rows, ms.probs, origin=ms, overwrite=True)
    if system.dim != dim * dim:
        raise ValueError(
            f"system dimension {system.dim} does not match D²={dim * dim} for d={ms.d}"
        )

    prev = _initial_iterate(cfg, dim)
    steps: list[float] = []
    residuals: list[float] = []
    converged = False
    final_step = float("nan")
    final_tol = float("nan")
    iterations = 0

    for k in range(1, cfg.k_max + 1):
        shaped = enforce_structure(prev, cfg)
        xv = kaczmarz_sweep(vec(shaped), system)
        cur = mat(xv)

        herm_err = hermiticity_error(cur)
        if herm_err > 1e-9:
            raise InvariantViolation(
                f"iterate lost Hermiticity after sweep {k}: {herm_err:.3e}"
            )
        res = float(np.abs(system.rows @ xv - system.probs_prime).max())
        residuals.append(res)
        if res > 1e-9:
            raise InvariantViolation(
                f"sweep {k} left constraint residual {res:.3e} > 1e-9"
            )

        final_step = frob_norm(cur - prev)
        final_tol = cfg.step_tol_rel * frob_norm(cur)
        steps.append(final_step)
        iterations = k
        prev = cur
        if on_iteration is not None:
            on_iteration(k, final_step, final_tol)
        if final_step <= final_tol:
            converged = True
            break

    rho_pre = prev
    rho = enforce_structure(rho_pre, cfg)
    return ReconstructionReport(
        rho=rho,
        rho_pre_gamma=rho_pre,
        iterations=iterations,
        final_step=final_step,
        final_step_tol=final_tol,
        converged=converged,
        per_iteration_residuals=residuals,
        per_iteration_steps=steps,
        n_dropped_rows=system.n_dropped,
    )
