"""Maximum-likelihood reconstruction of the cloner's Choi matrix.

The estimate is parametrized through an upper-triangular 8x8 complex factor C
with S = C^dag C, which keeps every iterate positive semidefinite. The trace
constraint enters as a penalty mu * Tr[C^dag C] with mu = K/2, and the search
runs a from-scratch Nelder-Mead simplex over the 64 real parameters of C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .channel import ChoiMatrix, clone_choi, tp_residual
from .experiment import Dataset, MeasurementRecord, MeasurementSetting, Outcome, PureState, generate_dataset
from .matlin import as_cmat

DIM_IN = 2
DIM_OUT = 4
DIM = DIM_IN * DIM_OUT
N_PARAMS = DIM * DIM  # 8 real diagonal + 28 complex upper entries

PROB_FLOOR = 1e-12

# Parameter layout: params[:8] = real diagonal, then (re, im) pairs for the
# strictly-upper entries in row-major order.
_IU, _JU = np.triu_indices(DIM, k=1)

# Fixed stream for restart perturbations; estimation stays deterministic.
_RESTART_SEED = 0x5EED


@dataclass
class EstimatorConfig:
    mu_override: float | None = None
    max_evals: int = 200_000
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    initial_step: float = 0.05
    value_tolerance: float = 1e-8
    restarts: int = 3
    restart_rel_improvement: float = 1e-6
    prob_floor: float = PROB_FLOOR


@dataclass
class EstimationResult:
    choi_est: ChoiMatrix
    log_likelihood: float
    penalized_value: float
    evaluations: int
    restarts_used: int
    tp_residual: float
    trace_of_s: float
    error_vs_truth: float | None = None
    converged: bool = True

    def diagnostics_dict(self) -> dict:
        return {
            "log_likelihood": self.log_likelihood,
            "penalized_value": self.penalized_value,
            "evaluations": self.evaluations,
            "restarts_used": self.restarts_used,
            "tp_residual": self.tp_residual,
            "trace_of_s": self.trace_of_s,
            "error_vs_truth": self.error_vs_truth,
            "converged": self.converged,
        }

    def to_json_dict(self) -> dict:
        d = self.choi_est.to_json_dict()
        d["diagnostics"] = self.diagnostics_dict()
        return d


def pack_params(c: np.ndarray) -> np.ndarray:
    """Flatten an upper-triangular factor into the 64-real parameter vector."""
    c = as_cmat(c)
    params = np.empty(N_PARAMS)
    params[:DIM] = c.diagonal().real
    params[DIM::2] = c[_IU, _JU].real
    params[DIM + 1::2] = c[_IU, _JU].imag
    return params


def unpack_params(params: np.ndarray) -> np.ndarray:
    """Rebuild the upper-triangular complex factor from the parameter vector."""
    params = np.asarray(params, dtype=float)
    if params.shape != (N_PARAMS,):
        raise ValueError(f"parameter vector must have length {N_PARAMS}")
    c = np.zeros((DIM, DIM), dtype=complex)
    c[np.arange(DIM), np.arange(DIM)] = params[:DIM]
    c[_IU, _JU] = params[DIM::2] + 1j * params[DIM + 1::2]
    return c


def _unpack_planar(params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Hot-path variant: real/imag planes without a complex intermediate.
    cr = np.zeros((DIM, DIM))
    ci = np.zeros((DIM, DIM))
    cr[np.arange(DIM), np.arange(DIM)] = params[:DIM]
    cr[_IU, _JU] = params[DIM::2]
    ci[_IU, _JU] = params[DIM + 1::2]
    return cr, ci


def _shifted(angle: float, outcome: int) -> float:
    return 0.5 * angle + math.pi * (outcome - 1) / 4.0


def _factor_1q(polar: float, azimuth: float, outcome: int) -> np.ndarray:
    t = _shifted(polar, outcome)
    return np.array(
        [[math.cos(t), np.exp(-1j * azimuth) * math.sin(t)], [0.0, 0.0]], dtype=complex
    )


def chol_R(s: PureState) -> np.ndarray:
    """Triangular factor of rho^T: first row (cos(theta/2), e^{i phi} sin(theta/2))."""
    return np.array(
        [
            [math.cos(s.theta / 2), np.exp(1j * s.phi) * math.sin(s.theta / 2)],
            [0.0, 0.0],
        ],
        dtype=complex,
    )


def chol_A(m: MeasurementSetting, o: Outcome) -> np.ndarray:
    """Triangular factor of the POVM element, a Kronecker pair of 2x2 factors."""
    return np.kron(_factor_1q(m.alpha, m.beta, o.a), _factor_1q(m.gamma, m.delta, o.b))


def q_column(r: MeasurementRecord) -> np.ndarray:
    """Unit 8-vector q with q q^dag = rho^T (x) F, the per-record likelihood kernel.

    q is the only nonzero column of R^dag (x) A^dag, i.e. the conjugated first
    rows of the two factors tensored together.
    """
    return np.kron(chol_R(r.state)[0].conj(), chol_A(r.setting, r.outcome)[0].conj())


def q_matrix(d: Dataset) -> np.ndarray:
    """Stack all per-record q vectors into a C-contiguous (K, 8) array."""
    k = len(d.records)
    theta = np.empty(k)
    phi = np.empty(k)
    at = np.empty(k)
    beta = np.empty(k)
    gt = np.empty(k)
    delta = np.empty(k)
    for i, r in enumerate(d.records):
        theta[i] = r.state.theta
        phi[i] = r.state.phi
        at[i] = _shifted(r.setting.alpha, r.outcome.a)
        beta[i] = r.setting.beta
        gt[i] = _shifted(r.setting.gamma, r.outcome.b)
        delta[i] = r.setting.delta

    s0 = np.cos(theta / 2)
    s1 = np.exp(-1j * phi) * np.sin(theta / 2)
    a0 = np.cos(at)
    a1 = np.exp(1j * beta) * np.sin(at)
    g0 = np.cos(gt)
    g1 = np.exp(1j * delta) * np.sin(gt)

    q = np.empty((k, DIM), dtype=complex)
    q[:, 0] = s0 * a0 * g0
    q[:, 1] = s0 * a0 * g1
    q[:, 2] = s0 * a1 * g0
    q[:, 3] = s0 * a1 * g1
    q[:, 4] = s1 * a0 * g0
    q[:, 5] = s1 * a0 * g1
    q[:, 6] = s1 * a1 * g0
    q[:, 7] = s1 * a1 * g1
    return q


def log_likelihood(c: np.ndarray, d: Dataset, floor: float = PROB_FLOOR) -> float:
    """Sum of log ||C q_l||^2 over the dataset (any square factor matrix)."""
    if len(d.records) == 0:
        raise ValueError("log_likelihood requires a nonempty dataset")
    cr, ci = _kernels.planar_c(as_cmat(c))
    qr, qi = _kernels.planar_q(q_matrix(d))
    p = _kernels.probs_full(cr, ci, qr, qi)
    return float(np.log(np.maximum(p, floor)).sum())


def log_likelihood_s(s: np.ndarray, d: Dataset, floor: float = 0.0) -> float:
    """Likelihood evaluated directly on a Choi-matrix candidate S."""
    if len(d.records) == 0:
        raise ValueError("log_likelihood_s requires a nonempty dataset")
    q = q_matrix(d)
    p = np.einsum("li,ij,lj->l", q.conj(), as_cmat(s), q).real
    return float(np.log(np.maximum(p, floor)).sum())


def mu_default(k: int) -> float:
    """Trace-penalty multiplier at the stationary point: K / dim_in."""
    return k / DIM_IN


def penalized_objective(c: np.ndarray, d: Dataset, cfg: EstimatorConfig | None = None) -> float:
    """log-likelihood minus mu * Tr[C^dag C], the functional the search maximizes."""
    cfg = cfg or EstimatorConfig()
    mu = cfg.mu_override if cfg.mu_override is not None else mu_default(len(d.records))
    return log_likelihood(c, d, cfg.prob_floor) - mu * float((np.abs(as_cmat(c)) ** 2).sum())


class NelderMeadResult(NamedTuple):
    x: np.ndarray
    value: float
    evaluations: int
    converged: bool


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    init: np.ndarray,
    cfg: EstimatorConfig | None = None,
) -> NelderMeadResult:
    """Maximize ``objective`` with a downhill simplex on the negated function.

    The initial simplex is ``init`` plus ``initial_step`` along each
    coordinate. Terminates when the spread of vertex values drops below
    ``value_tolerance`` or the evaluation budget is exhausted (budget is
    checked between iterations, so the last iteration may finish).
    """
    cfg = cfg or EstimatorConfig()
    init = np.asarray(init, dtype=float)
    n = init.size
    if cfg.max_evals < n + 1:
        raise ValueError(f"max_evals must cover the initial simplex ({n + 1} evaluations)")

    def g(x):
        return -objective(x)

    verts = np.tile(init, (n + 1, 1))
    for i in range(n):
        verts[i + 1, i] += cfg.initial_step
    vals = np.array([g(v) for v in verts])
    evals = n + 1
    if not np.all(np.isfinite(vals)):
        raise ValueError("objective is not finite on the initial simplex")

    converged = False
    while True:
        order = np.argsort(vals, kind="stable")
        verts = verts[order]
        vals = vals[order]
        if vals[-1] - vals[0] < cfg.value_tolerance:
            converged = True
            break
        if evals >= cfg.max_evals:
            break

        centroid = verts[:-1].mean(axis=0)
        xr = centroid + cfg.reflection * (centroid - verts[-1])
        gr = g(xr)
        evals += 1
        if gr < vals[0]:
            xe = centroid + cfg.expansion * (xr - centroid)
            ge = g(xe)
            evals += 1
            if ge < gr:
                verts[-1], vals[-1] = xe, ge
            else:
                verts[-1], vals[-1] = xr, gr
        elif gr < vals[-2]:
            verts[-1], vals[-1] = xr, gr
        else:
            shrink = False
            if gr < vals[-1]:
                xc = centroid + cfg.contraction * (xr - centroid)
                gc = g(xc)
                evals += 1
                if gc <= gr:
                    verts[-1], vals[-1] = xc, gc
                else:
                    shrink = True
            else:
                xc = centroid - cfg.contraction * (centroid - verts[-1])
                gc = g(xc)
                evals += 1
                if gc < vals[-1]:
                    verts[-1], vals[-1] = xc, gc
                else:
                    shrink = True
            if shrink:
                for i in range(1, n + 1):
                    verts[i] = verts[0] + cfg.shrink * (verts[i] - verts[0])
                    vals[i] = g(verts[i])
                evals += n

    best = int(np.argmin(vals))
    return NelderMeadResult(verts[best].copy(), -float(vals[best]), evals, converged)


def initial_params() -> np.ndarray:
    """Trace-correct full-rank start: C0 = I/2 so Tr[C^dag C] = 2."""
    c0 = 0.5 * np.eye(DIM, dtype=complex)
    return pack_params(c0)


def estimate(
    d: Dataset,
    cfg: EstimatorConfig | None = None,
    truth: ChoiMatrix | None = None,
) -> EstimationResult:
    """Run the full reconstruction: simplex search with perturbed restarts.

    The returned Choi matrix is S = C^dag C rescaled to trace 2 a posteriori;
    trace preservation is reported through ``tp_residual``, not enforced.
    """
    cfg = cfg or EstimatorConfig()
    k = len(d.records)
    if k == 0:
        raise ValueError("estimate requires a nonempty dataset")
    qr, qi = _kernels.planar_q(q_matrix(d))
    mu = cfg.mu_override if cfg.mu_override is not None else mu_default(k)
    floor = cfg.prob_floor

    def objective(params):
        cr, ci = _unpack_planar(params)
        p = _kernels.probs_tri(cr, ci, qr, qi)
        np.maximum(p, floor, out=p)
        # The parameter vector holds exactly the re/im parts of C, so the
        # penalty Tr[C^dag C] is its squared norm.
        return float(np.log(p).sum()) - mu * float(params @ params)

    rng = np.random.default_rng(_RESTART_SEED)
    x = initial_params()
    best: NelderMeadResult | None = None
    evals_total = 0
    restarts_used = 0
    converged = True
    while True:
        res = nelder_mead(objective, x, cfg)
        evals_total += res.evaluations
        improved = best is None or res.value > best.value
        improvement = math.inf if best is None else res.value - best.value
        if improved:
            best = res
        if not res.converged:
            converged = False
            break
        if improvement < cfg.restart_rel_improvement * abs(best.value):
            break
        if restarts_used >= cfg.restarts:
            break
        restarts_used += 1
        x = best.x + rng.uniform(-cfg.initial_step, cfg.initial_step, N_PARAMS)

    c = unpack_params(best.x)
    s = c.conj().T @ c
    trace_of_s = float(np.trace(s).real)
    if trace_of_s <= 0:
        raise RuntimeError("estimated Choi matrix has non-positive trace")
    s_est = ChoiMatrix(DIM_IN, DIM_OUT, DIM_IN * s / trace_of_s)
    err = error_metric(s_est, truth) if truth is not None else None
    return EstimationResult(
        choi_est=s_est,
        log_likelihood=best.value + mu * trace_of_s,
        penalized_value=best.value,
        evaluations=evals_total,
        restarts_used=restarts_used,
        tp_residual=tp_residual(s_est),
        trace_of_s=trace_of_s,
        error_vs_truth=err,
        converged=converged,
    )


def error_metric(s_est: ChoiMatrix, s_true: ChoiMatrix) -> float:
    """Mean elementwise complex-modulus deviation between two Choi matrices."""
    if s_est.mat.shape != s_true.mat.shape:
        raise ValueError("Choi matrices have different dimensions")
    return float(np.abs(s_est.mat - s_true.mat).mean())


def error_metric_real(s_est: ChoiMatrix, s_true: ChoiMatrix) -> float:
    """Real-part-only variant of the elementwise error."""
    if s_est.mat.shape != s_true.mat.shape:
        raise ValueError("Choi matrices have different dimensions")
    return float(np.abs((s_est.mat - s_true.mat).real).mean())


@dataclass
class ScalingStudy:
    rows: list[tuple[int, float, float]]  # (K, mean error, std error)
    per_trial: list[tuple[int, int, float]] = field(default_factory=list)
    slope: float = float("nan")


def trial_seed(seed: int, k: int, trial: int) -> int:
    """Derive the per-trial dataset seed from (study seed, K, trial index)."""
    return int(np.random.SeedSequence([seed, k, trial]).generate_state(1, np.uint64)[0])


def scaling_study(
    k_values: list[int],
    trials: int,
    seed: int,
    cfg: EstimatorConfig | None = None,
) -> ScalingStudy:
    """Error of generate+estimate cycles versus K, with a log-log slope fit."""
    if not k_values:
        raise ValueError("scaling_study requires a nonempty K grid")
    if trials < 1:
        raise ValueError("scaling_study requires at least one trial")
    truth = clone_choi()
    out = ScalingStudy(rows=[])
    for k in k_values:
        errs = []
        for t in range(trials):
            d = generate_dataset(k, trial_seed(seed, k, t))
            res = estimate(d, cfg, truth=truth)
            errs.append(res.error_vs_truth)
            out.per_trial.append((k, t, res.error_vs_truth))
        errs = np.array(errs)
        std = float(errs.std(ddof=1)) if trials > 1 else 0.0
        out.rows.append((k, float(errs.mean()), std))
    ks = np.array([row[0] for row in out.rows], dtype=float)
    means = np.array([row[1] for row in out.rows])
    if len(ks) >= 2:
        out.slope = float(np.polyfit(np.log(ks), np.log(means), 1)[0])
    return out
