"""Temporal smoothing of feature sequences.

Two smoothers operate column-wise on a feature tensor:

* :func:`moving_average` -- centered windowed mean, truncated at the ends.
* :func:`lds_smooth` / :func:`fit_lds` -- an independent scalar linear
  dynamical system per column,

      observation   x_t = z_t + w_t,        w_t ~ N(wbar, Q)
      state         z_t = A z_{t-1} + v_t,  v_t ~ N(vbar, R)
      initial       z_1 ~ N(pi0, S0)

  fitted by EM (forward filter + fixed-interval backward smoother for the
  E-step, closed-form M-step) and applied by replacing each column with
  the posterior state means E(z_t | x_{1:T}).

Note the variance naming: Q is the observation-noise variance and R the
process-noise variance throughout this module.

All recursions are vectorized across columns; columns never interact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .tensor import FeatureTensor

# Variances are floored at VAR_FLOOR_REL times the column variance (plus a
# tiny absolute floor for constant columns) to keep recursions finite.
VAR_FLOOR_REL = 1e-10
VAR_FLOOR_ABS = 1e-12


@dataclass
class LdsParams:
    """Per-column parameters {A, Q, R, wbar, vbar, pi0, S0}, one scalar each.

    ``identity_cols`` flags degenerate (constant) columns that fall back to
    identity smoothing.
    """

    a: np.ndarray
    q: np.ndarray
    r: np.ndarray
    wbar: np.ndarray
    vbar: np.ndarray
    pi0: np.ndarray
    s0: np.ndarray
    identity_cols: np.ndarray = None

    def __post_init__(self):
        fields = ["a", "q", "r", "wbar", "vbar", "pi0", "s0"]
        arrays = [np.atleast_1d(np.asarray(getattr(self, f), dtype=np.float64))
                  for f in fields]
        n = arrays[0].shape[0]
        for name, arr in zip(fields, arrays):
            if arr.shape != (n,):
                raise ValueError(f"parameter {name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)
        if self.identity_cols is None:
            self.identity_cols = np.zeros(n, dtype=bool)
        else:
            self.identity_cols = np.asarray(self.identity_cols, dtype=bool)
            if self.identity_cols.shape != (n,):
                raise ValueError("identity_cols shape mismatch")
        for name, arr in (("q", self.q), ("r", self.r), ("s0", self.s0)):
            if not np.all(arr > 0):
                raise ValueError(f"{name} must be strictly positive")
        for name in fields:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"parameter {name} contains non-finite values")

    @property
    def n_columns(self) -> int:
        return self.a.shape[0]

    def to_dict(self) -> dict:
        return {
            "a": self.a.tolist(), "q": self.q.tolist(), "r": self.r.tolist(),
            "wbar": self.wbar.tolist(), "vbar": self.vbar.tolist(),
            "pi0": self.pi0.tolist(), "s0": self.s0.tolist(),
            "identity_cols": self.identity_cols.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LdsParams":
        return cls(
            a=np.array(doc["a"]), q=np.array(doc["q"]), r=np.array(doc["r"]),
            wbar=np.array(doc["wbar"]), vbar=np.array(doc["vbar"]),
            pi0=np.array(doc["pi0"]), s0=np.array(doc["s0"]),
            identity_cols=np.array(doc["identity_cols"], dtype=bool),
        )


@dataclass
class SmootherFit:
    """EM result: fitted params plus one log-likelihood trace per column."""

    params: LdsParams
    loglik_traces: list[np.ndarray]
    iterations: np.ndarray
    converged: np.ndarray


def moving_average(f: FeatureTensor, window: int) -> FeatureTensor:
    """Centered mean over up to ``window`` rows per column, same shape."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    X = f.values
    if window == 1:
        return f.with_values(X.copy())
    T = X.shape[0]
    left = (window - 1) // 2
    right = window - 1 - left
    csum = np.vstack([np.zeros((1, X.shape[1])), np.cumsum(X, axis=0)])
    start = np.clip(np.arange(T) - left, 0, T)
    stop = np.clip(np.arange(T) + right + 1, 0, T)
    out = (csum[stop] - csum[start]) / (stop - start)[:, None]
    return f.with_values(out)


def _filter_smooth(X, a, q, r, wbar, vbar, pi0, s0):
    """Forward filter + backward smoother for every column at once.

    Returns posterior means/variances, lag-one posterior cross-covariances
    Cov(z_t, z_{t+1} | X), and the per-column log-likelihood.
    """
    T, C = X.shape
    pm = np.empty((T, C))   # predicted state means
    pv = np.empty((T, C))   # predicted state variances
    fm = np.empty((T, C))   # filtered means
    fv = np.empty((T, C))   # filtered variances
    ll = np.zeros(C)

    pm[0] = pi0
    pv[0] = s0
    for t in range(T):
        s_innov = pv[t] + q
        innov = X[t] - pm[t] - wbar
        ll += -0.5 * (np.log(2.0 * np.pi * s_innov) + innov * innov / s_innov)
        gain = pv[t] / s_innov
        fm[t] = pm[t] + gain * innov
        fv[t] = (1.0 - gain) * pv[t]
        if t + 1 < T:
            pm[t + 1] = a * fm[t] + vbar
            pv[t + 1] = a * a * fv[t] + r

    sm = np.empty((T, C))
    sv = np.empty((T, C))
    cross = np.empty((max(T - 1, 0), C))
    sm[T - 1] = fm[T - 1]
    sv[T - 1] = fv[T - 1]
    for t in range(T - 2, -1, -1):
        c_gain = fv[t] * a / pv[t + 1]
        sm[t] = fm[t] + c_gain * (sm[t + 1] - pm[t + 1])
        sv[t] = fv[t] + c_gain * c_gain * (sv[t + 1] - pv[t + 1])
        cross[t] = c_gain * sv[t + 1]
    np.maximum(sv, 0.0, out=sv)
    return sm, sv, cross, ll


def _m_step(X, sm, sv, cross, floor):
    """Closed-form parameter update from posterior moments."""
    T = X.shape[0]
    ez = sm
    ezz = sv + sm * sm
    ecross = cross + sm[:-1] * sm[1:]          # E[z_t z_{t+1}]

    wbar = np.mean(X - ez, axis=0)
    resid = X - wbar
    q = np.mean(resid * resid - 2.0 * resid * ez + ezz, axis=0)
    q = np.maximum(q, floor)

    n = T - 1
    su = ez[:-1].sum(axis=0)
    sy = ez[1:].sum(axis=0)
    sxx = ezz[:-1].sum(axis=0)
    sxy = ecross.sum(axis=0)
    denom = n * sxx - su * su
    safe = np.abs(denom) > 1e-300
    a = np.where(safe, (n * sxy - su * sy) / np.where(safe, denom, 1.0), 1.0)
    # Constrained M-step: the expected complete-data objective is concave
    # in the transition coefficient, so clipping to [0, 1] is its exact
    # maximizer over the stable, non-oscillatory model family.
    a = np.clip(a, 0.0, 1.0)
    vbar = (sy - a * su) / n
    r = (ezz[1:].sum(axis=0)
         - 2.0 * a * sxy
         - 2.0 * vbar * sy
         + a * a * sxx
         + 2.0 * a * vbar * su
         + n * vbar * vbar) / n
    r = np.maximum(r, floor)

    pi0 = sm[0]
    s0 = np.maximum(sv[0], floor)
    return a, q, r, wbar, vbar, pi0, s0


def fit_lds(f: FeatureTensor, max_iters: int = 50, tol: float = 1e-4) -> SmootherFit:
    """Fit one scalar state-space model per column by EM.

    Iteration stops when the log-likelihood gain drops below
    ``tol * max(1, |loglik|)`` or after ``max_iters`` M-steps. The trace of
    each column is non-decreasing up to numerical tolerance. Constant
    columns are flagged and fall back to identity smoothing.
    """
    X = f.values
    T, C = X.shape
    if T < 8:
        raise ValueError(f"need at least 8 windows to fit, got {T}")

    col_mean = X.mean(axis=0)
    col_var = X.var(axis=0)
    degenerate = col_var < 1e-12 * (1.0 + col_mean * col_mean)
    active_cols = np.flatnonzero(~degenerate)
    floor_full = np.maximum(VAR_FLOOR_REL * col_var, VAR_FLOOR_ABS)

    # Identity-fallback parameters for degenerate columns.
    a = np.ones(C)
    q = floor_full.copy()
    r = floor_full.copy()
    wbar = np.zeros(C)
    vbar = np.zeros(C)
    pi0 = X[0].copy()
    s0 = floor_full.copy()

    # Scale-aware init on active columns. The observation/process split is
    # deliberately asymmetric (90/10): starting from an even split, EM on
    # weakly autocorrelated columns settles in the no-smoothing basin
    # (state chases the observations); starting slow-state keeps it in the
    # smoothing basin while identifiable dynamics are still recovered.
    base_var = np.maximum(col_var[active_cols], floor_full[active_cols])
    q[active_cols] = 0.9 * base_var
    r[active_cols] = np.maximum(0.1 * base_var, floor_full[active_cols])
    s0[active_cols] = base_var

    traces: list[list[float]] = [[] for _ in range(C)]
    iterations = np.zeros(C, dtype=int)
    converged = np.zeros(C, dtype=bool)

    work = active_cols.copy()
    prev_ll = None
    for it in range(max_iters):
        if work.size == 0:
            break
        Xw = X[:, work]
        sm, sv, cross, ll = _filter_smooth(
            Xw, a[work], q[work], r[work], wbar[work], vbar[work],
            pi0[work], s0[work],
        )
        for j, col in enumerate(work):
            traces[col].append(float(ll[j]))
        if prev_ll is not None:
            gain = ll - prev_ll
            done = gain < tol * np.maximum(1.0, np.abs(prev_ll))
            if done.any():
                converged[work[done]] = True
                keep = ~done
                work = work[keep]
                sm, sv, cross = sm[:, keep], sv[:, keep], cross[:, keep]
                ll = ll[keep]
                Xw = Xw[:, keep]
                if work.size == 0:
                    break
        (a[work], q[work], r[work], wbar[work], vbar[work],
         pi0[work], s0[work]) = _m_step(Xw, sm, sv, cross, floor_full[work])
        iterations[work] += 1
        prev_ll = ll

    params = LdsParams(a, q, r, wbar, vbar, pi0, s0, identity_cols=degenerate)
    return SmootherFit(
        params=params,
        loglik_traces=[np.array(t) for t in traces],
        iterations=iterations,
        converged=converged,
    )


def lds_smooth(f: FeatureTensor, params: LdsParams) -> FeatureTensor:
    """Replace each column with its posterior state means E(z_t | x_{1:T})."""
    X = f.values
    if params.n_columns != X.shape[1]:
        raise ValueError(
            f"params cover {params.n_columns} columns, tensor has {X.shape[1]}"
        )
    sm, _, _, _ = _filter_smooth(
        X, params.a, params.q, params.r, params.wbar, params.vbar,
        params.pi0, params.s0,
    )
    out = np.where(params.identity_cols, X, sm)
    bad = np.flatnonzero(~np.isfinite(out).all(axis=0))
    if bad.size:
        col = f.columns[int(bad[0])]
        raise ValueError(f"non-finite smoothed values in column {col.descriptor()!r}")
    return f.with_values(out)


def lds_denoise(f: FeatureTensor, params: LdsParams) -> FeatureTensor:
    """Smoothed observation estimate: posterior state means plus wbar.

    The split of a column's level between the state and the observation
    offset is not identifiable, so the raw state means from parameter sets
    fit on different sequences live on different scales. Adding wbar back
    restores the observation scale regardless of the split; pipelines use
    this form so training and held-out features stay comparable.
    """
    sm = lds_smooth(f, params)
    out = np.where(params.identity_cols, sm.values, sm.values + params.wbar)
    return f.with_values(out)


def average_params(fits: list[LdsParams]) -> LdsParams:
    """Column-wise mean of fitted parameters across trials.

    Per column, only non-fallback fits contribute; a column degenerate in
    every trial stays flagged for identity smoothing.
    """
    if not fits:
        raise ValueError("no parameter sets to average")
    n = fits[0].n_columns
    for p in fits[1:]:
        if p.n_columns != n:
            raise ValueError("parameter sets cover different column counts")
    ok = np.stack([~p.identity_cols for p in fits])           # (trials, cols)
    counts = np.maximum(ok.sum(axis=0), 1)

    def avg(name):
        vals = np.stack([getattr(p, name) for p in fits])
        return np.where(ok, vals, 0.0).sum(axis=0) / counts

    all_degenerate = ~ok.any(axis=0)
    out = LdsParams(
        a=np.where(all_degenerate, 1.0, avg("a")),
        q=np.maximum(avg("q"), VAR_FLOOR_ABS),
        r=np.maximum(avg("r"), VAR_FLOOR_ABS),
        wbar=avg("wbar"),
        vbar=avg("vbar"),
        pi0=avg("pi0"),
        s0=np.maximum(avg("s0"), VAR_FLOOR_ABS),
        identity_cols=all_degenerate,
    )
    return out


def params_for_sequence(base: LdsParams, f: FeatureTensor) -> LdsParams:
    """Adapt shared parameters to one sequence by re-anchoring its level.

    Dynamics and noise magnitudes (A, Q, R) transfer across sequences, but
    the level terms do not: the stationary state mean vbar/(1-A) would pull
    every sequence toward the level of the sequences the parameters were
    fit on. The initial state mean is set from the first observation
    (pi0 = x_1 - wbar) and the drift so that the stationary mean equals the
    sequence's own mean level (vbar = (1-A)(mean(x) - wbar)).
    """
    if base.n_columns != f.n_columns:
        raise ValueError("parameter/tensor column mismatch")
    level = f.values.mean(axis=0) - base.wbar
    return replace(
        base,
        pi0=f.values[0] - base.wbar,
        vbar=(1.0 - base.a) * level,
    )
