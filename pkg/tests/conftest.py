"""Shared builders and independent oracles for the test suite."""

import numpy as np

from eegemo.synthetic import SyntheticSpec
from eegemo.tensor import FeatureColumn, FeatureTensor
from eegemo.trials import TrialRecording

# A small 12-channel cap used where full 62-channel realism is not needed.
SMALL_CHANNELS = ("F3", "F4", "FT7", "FT8", "T7", "T8",
                  "C3", "C4", "P3", "P4", "O1", "O2")
SMALL_GROUPS = {
    "frontal": ("F3", "F4"),
    "temporal": ("FT7", "FT8", "T7", "T8"),
    "posterior": ("P3", "P4", "O1", "O2"),
    "all": SMALL_CHANNELS,
}


def tone_trial(freq_hz, rate=200.0, seconds=8.0, channels=("CH1",),
               amplitude=1.0, label=0):
    t = np.arange(int(rate * seconds)) / rate
    x = amplitude * np.sin(2 * np.pi * freq_hz * t)
    samples = np.tile(x, (len(channels), 1))
    return TrialRecording("s", "e", "tone", label, rate, channels, samples)


def noise_trial(rng, rate=200.0, seconds=8.0, channels=("CH1",), scale=1.0,
                label=0):
    n = int(rate * seconds)
    samples = scale * rng.standard_normal((len(channels), n))
    return TrialRecording("s", "e", "noise", label, rate, channels, samples)


def raw_tensor(values, window_seconds=1.0, label=-1, **kw):
    values = np.asarray(values, dtype=np.float64)
    cols = tuple(FeatureColumn("raw", f"c{i}", "-") for i in range(values.shape[1]))
    return FeatureTensor(values, cols, window_seconds, label=label, **kw)


def small_spec(noise_level=1.0, trials_per_class=8, seconds=12.0, seed=0,
               boost=3.0, **kw):
    """Three classes: flat, temporal gamma boost, posterior alpha boost."""
    profiles = {
        0: {},
        1: {"gamma": {"temporal": boost}},
        2: {"alpha": {"posterior": boost}},
    }
    return SyntheticSpec(
        class_profiles=profiles,
        trials_per_class=trials_per_class,
        noise_level=noise_level,
        duration_seconds=seconds,
        channels=SMALL_CHANNELS,
        channel_groups=SMALL_GROUPS,
        seed=seed,
        **kw,
    )


def simulate_scalar_lds(rng, T, a=0.9, q=0.1, r=0.05, wbar=0.0, vbar=0.0,
                        pi0=0.0, s0=1.0):
    """Draw one sequence from the generative state-space model."""
    z = np.empty(T)
    z[0] = rng.normal(pi0, np.sqrt(s0))
    for t in range(1, T):
        z[t] = a * z[t - 1] + vbar + rng.normal(0.0, np.sqrt(r))
    x = z + wbar + rng.normal(0.0, np.sqrt(q), size=T)
    return x, z


def grid_posterior_mean(x, a, q, r, wbar, vbar, pi0, s0, n_grid=201, span=6.0):
    """Posterior state means by brute-force sum over a discretized joint.

    Independent of the Kalman/backward recursions: the state is restricted
    to a uniform grid and the discrete forward-backward sums evaluate the
    marginals of the discretized joint exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    T = len(x)
    sd = np.sqrt(max(s0, r, q))
    lo = min(float(x.min()) - wbar, pi0) - span * sd
    hi = max(float(x.max()) - wbar, pi0) + span * sd
    grid = np.linspace(lo, hi, n_grid)

    emission = np.exp(-0.5 * (x[:, None] - grid[None, :] - wbar) ** 2 / q)
    trans = np.exp(-0.5 * (grid[None, :] - a * grid[:, None] - vbar) ** 2 / r)
    trans /= trans.sum(axis=1, keepdims=True)
    prior = np.exp(-0.5 * (grid - pi0) ** 2 / s0)
    prior /= prior.sum()

    alpha = np.empty((T, n_grid))
    alpha[0] = prior * emission[0]
    alpha[0] /= alpha[0].sum()
    for t in range(1, T):
        alpha[t] = (alpha[t - 1] @ trans) * emission[t]
        alpha[t] /= alpha[t].sum()
    beta = np.ones((T, n_grid))
    for t in range(T - 2, -1, -1):
        beta[t] = trans @ (emission[t + 1] * beta[t + 1])
        beta[t] /= beta[t].sum()
    post = alpha * beta
    post /= post.sum(axis=1, keepdims=True)
    return post @ grid


def mrmr_phi(mi_label, mi_pair, subset):
    """Relevance-minus-redundancy score of a feature subset.

    Relevance is the mean MI against the label; redundancy the mean MI
    over all ordered pairs of the subset, self-pairs included.
    """
    s = list(subset)
    d = np.mean([mi_label[i] for i in s])
    r = np.mean([[mi_pair[i][j] for j in s] for i in s])
    return d - r
