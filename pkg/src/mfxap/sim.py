"""Sample-by-sample simulation of a feedforward ANC loop.

Signal flow for one iteration ``n`` (all filters FIR, real-valued)::

    d(n)   = p_eff * x          disturbance at the error sensor
    y(n)   = w(n)^T x_n         anti-noise before the secondary path
    e(n)   = d(n) - s * y + v   measured error (v: optional sensor noise)
    x_f(n) = s_hat * x          filtered reference, pushed into U_f
    d_hat  = e + s_hat * y      K most recent desired-signal estimates
    e_hat  = d_hat - U_f w(n)   modified error, all rows with the current w

The plant ``w_o`` is the ground truth: the disturbance goes through
``p_eff = s * w_o``, so ``w = w_o`` cancels perfectly for whatever
secondary path is active, and MSD is measured against ``w_o``.  When the
schedule switches ``s`` the weights and delay lines carry over.

Trials are simulated together: every array has a leading batch axis, one
row per trial.  Per-row arithmetic does not depend on how many rows are
batched, so a trial gives the same numbers alone or with others.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from .algorithms import AlgorithmConfig, Variant, update
from .dsp import AR1, DelayLine, FilteredRegressor, WhiteGaussian, fir_filter_step, generate_noise
from .errors import ConfigurationError, DivergenceError
from .metrics import MsdCurve, msd_linear, summarize, to_db
from .paths import ImpulseResponse, SparsityClass, convolve

__all__ = [
    "SimState",
    "StepOutputs",
    "step",
    "Segment",
    "SegmentSchedule",
    "VariantSpec",
    "ExperimentSpec",
    "Failure",
    "ExperimentResult",
    "trial_seed",
    "disturbance_power",
    "simulate_variant",
    "DIVERGENCE_MSD",
    "run_trial",
    "run_experiment",
]

log = logging.getLogger(__name__)

# normalized MSD above +60 dB counts as divergence even while still finite
DIVERGENCE_MSD = 1e6


@dataclass
class SimState:
    """Everything the loop carries from one iteration to the next."""

    w: np.ndarray
    x_line: DelayLine
    y_line: DelayLine
    reg: FilteredRegressor
    e_history: np.ndarray
    sy_hat_history: np.ndarray
    iteration: int = 0

    @classmethod
    def initial(cls, length, order, x_length=None, y_length=None, batch_shape=(), w0=None):
        batch_shape = tuple(batch_shape)
        x_length = max(length, x_length or 0)
        y_length = max(1, y_length or 0)
        w = np.zeros(batch_shape + (length,))
        if w0 is not None:
            w[...] = getattr(w0, "taps", w0)
        return cls(
            w=w,
            x_line=DelayLine(x_length, batch_shape),
            y_line=DelayLine(y_length, batch_shape),
            reg=FilteredRegressor(order, length, batch_shape),
            e_history=np.zeros(batch_shape + (order,)),
            sy_hat_history=np.zeros(batch_shape + (order,)),
        )

    @property
    def length(self):
        return self.w.shape[-1]

    @property
    def order(self):
        return self.reg.order

    def forget(self, mask):
        """Zero the weight-dependent state of the rows selected by ``mask``."""
        self.w[mask] = 0.0
        self.y_line.reset(mask)
        self.e_history[mask] = 0.0
        self.sy_hat_history[mask] = 0.0


@dataclass
class StepOutputs:
    y: np.ndarray
    e: np.ndarray
    e_hat: np.ndarray
    d_hat: np.ndarray
    d: np.ndarray
    x_f: np.ndarray
    y_hat: np.ndarray


def _shift_in(history, value):
    history[..., 1:] = history[..., :-1]
    history[..., 0] = value


def step(state, x, p, s, s_hat, cfg, noise=None, check=True):
    """Advance the loop by one sample; mutates and returns ``state``.

    ``p`` is the effective primary path (disturbance filter), ``s`` the
    physical secondary path and ``s_hat`` its model.  Returns
    ``(state, StepOutputs)``.  With ``check`` a non-finite error or weight
    raises :class:`DivergenceError`.
    """
    p = getattr(p, "taps", p)
    s = getattr(s, "taps", s)
    s_hat = getattr(s_hat, "taps", s_hat)
    n = state.iteration

    state.x_line.push(x)
    d = fir_filter_step(state.x_line, p)
    y = fir_filter_step(state.x_line, state.w)
    state.y_line.push(y)
    sy = fir_filter_step(state.y_line, s)
    e = d - sy
    if noise is not None:
        e = e + noise

    x_f = fir_filter_step(state.x_line, s_hat)
    state.reg.push(x_f)
    sy_hat = sy if s_hat is s else fir_filter_step(state.y_line, s_hat)
    _shift_in(state.e_history, e)
    _shift_in(state.sy_hat_history, sy_hat)

    d_hat = state.e_history + state.sy_hat_history
    y_hat = state.reg.times(state.w)
    e_hat = d_hat - y_hat

    if check and not np.all(np.isfinite(e)):
        raise DivergenceError(
            f"{cfg.variant.value} (mu={cfg.mu:g}) produced a non-finite error at iteration {n}",
            iteration=n, variant=cfg.variant.value, mu=cfg.mu,
        )
    err = e_hat if cfg.variant.modified else state.e_history.copy()
    state.w = update(state.w, state.reg, err, cfg, iteration=n, check=check)
    state.iteration = n + 1
    return state, StepOutputs(y=y, e=e, e_hat=e_hat, d_hat=d_hat, d=d, x_f=x_f, y_hat=y_hat)


@dataclass(frozen=True)
class Segment:
    """One stretch of the schedule.  ``mu``/``epsilon`` are defaults for all variants."""

    start: int
    secondary: ImpulseResponse
    mu: float = None
    epsilon: float = None
    secondary_estimate: ImpulseResponse = None
    secondary_class: SparsityClass = None

    @property
    def model(self):
        return self.secondary if self.secondary_estimate is None else self.secondary_estimate


@dataclass(frozen=True)
class SegmentSchedule:
    segments: tuple
    total_iterations: int

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ConfigurationError("schedule needs at least one segment")
        if segs[0].start != 0:
            raise ConfigurationError(f"first segment must start at iteration 0, got {segs[0].start}")
        starts = [sg.start for sg in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigurationError(f"segment starts must be strictly increasing, got {starts}")
        if self.total_iterations < 0:
            raise ConfigurationError(f"total iterations must be >= 0, got {self.total_iterations}")
        if len(segs) > 1 and starts[-1] >= self.total_iterations:
            raise ConfigurationError(
                f"segment starting at {starts[-1]} lies beyond total iterations {self.total_iterations}"
            )

    def __len__(self):
        return len(self.segments)

    @property
    def starts(self):
        return [sg.start for sg in self.segments]

    def bounds(self):
        ends = self.starts[1:] + [self.total_iterations]
        return [(sg.start, end) for sg, end in zip(self.segments, ends)]


@dataclass(frozen=True)
class VariantSpec:
    """A labelled algorithm with optional per-segment ``mu``/``epsilon`` overrides."""

    label: str
    config: AlgorithmConfig
    mu: tuple = None
    epsilon: tuple = None

    def config_for(self, index, segment):
        mu = self.mu[index] if self.mu is not None else segment.mu
        eps = self.epsilon[index] if self.epsilon is not None else segment.epsilon
        return self.config.with_segment(mu=mu, epsilon=eps)


@dataclass(frozen=True)
class ExperimentSpec:
    """A complete, validated experiment: paths, schedule, variants and trials."""

    filter_length: int
    plant: ImpulseResponse
    schedule: SegmentSchedule
    variants: tuple
    trials: int = 1
    base_seed: int = 0
    input_model: object = WhiteGaussian()
    snr_db: float = None
    decimation: int = 10
    output: str = None
    plant_class: SparsityClass = None
    name: str = None

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))
        if self.trials < 1:
            raise ConfigurationError(f"invariant violated: trials ≥ 1 (got {self.trials})")
        if self.decimation < 1:
            raise ConfigurationError(f"invariant violated: decimation ≥ 1 (got {self.decimation})")
        if len(self.plant) != self.filter_length:
            raise ConfigurationError(
                f"plant has {len(self.plant)} taps but the filter length is {self.filter_length}"
            )
        labels = [v.label for v in self.variants]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"invariant violated: variant labels must be unique, got {labels}")
        n_seg = len(self.schedule)
        for v in self.variants:
            for name in ("mu", "epsilon"):
                vals = getattr(v, name)
                if vals is not None and len(vals) != n_seg:
                    raise ConfigurationError(
                        f"variant {v.label!r}: {name} lists {len(vals)} values for {n_seg} segments"
                    )
            if v.config.order > self.filter_length:
                raise ConfigurationError(
                    f"variant {v.label!r}: K={v.config.order} exceeds L={self.filter_length}"
                )
            for k, sg in enumerate(self.schedule.segments):
                v.config_for(k, sg)
        if not isinstance(self.input_model, (WhiteGaussian, AR1)):
            raise ConfigurationError(f"unsupported input model {self.input_model!r}")

    @property
    def total_iterations(self):
        return self.schedule.total_iterations

    @property
    def labels(self):
        return [v.label for v in self.variants]

    def variant(self, label):
        for v in self.variants:
            if v.label == label:
                return v
        raise KeyError(label)


@dataclass(frozen=True)
class Failure:
    label: str
    trial: int
    iteration: int
    variant: str
    mu: float

    def describe(self):
        return (f"{self.label}: trial {self.trial} diverged at iteration {self.iteration} "
                f"({self.variant}, mu={self.mu:g})")


@dataclass
class ExperimentResult:
    """Averaged curves, raw per-trial linear MSD and any divergences."""

    spec: ExperimentSpec
    curves: dict
    per_trial: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def summary(self, thresholds=(-30.0,)):
        return summarize(
            self.curves,
            boundaries=self.spec.schedule.starts,
            total_iterations=self.spec.total_iterations,
            thresholds=thresholds,
        )


def trial_seed(base_seed, index):
    """Seed of trial ``index``; identical for every variant so comparisons are paired."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1, np.uint64)[0])


def _trial_streams(seed, count, model):
    input_seed, noise_seed = np.random.SeedSequence(int(seed)).generate_state(2, np.uint64)
    x = generate_noise(int(input_seed), count, model)
    v = generate_noise(int(noise_seed), count, WhiteGaussian(1.0))
    return x, v


def disturbance_power(p, model):
    """Expected ``d(n)^2`` when ``model`` is filtered through ``p``."""
    p = np.asarray(getattr(p, "taps", p), dtype=float)
    acf = np.correlate(p, p, mode="full")[p.size - 1 :]
    r = model.autocorrelation(np.arange(p.size))
    return float(r[0] * acf[0] + 2.0 * np.sum(r[1:] * acf[1:]))


def simulate_variant(spec, variant, seeds, streams=None):
    """Run one variant over a batch of trial seeds.

    Returns ``(msd, failures)`` where ``msd`` has shape
    ``(len(seeds), n_recorded)`` in linear units (NaN for diverged trials)
    and ``failures`` lists ``(row, iteration, cfg)``.  A trial fails at
    the first non-finite error or the first MSD above ``DIVERGENCE_MSD``.
    """
    seeds = list(seeds)
    b = len(seeds)
    total = spec.total_iterations
    dec = spec.decimation
    n_rec = MsdCurve.expected_length(total, dec)
    msd = np.full((b, n_rec), np.nan)
    if total == 0:
        return msd[:, :0], []

    if streams is None:
        streams = _streams(spec, seeds)
    xs, vs = streams

    w_o = spec.plant.taps
    segs = spec.schedule.segments
    p_effs = [convolve(sg.secondary, spec.plant).taps for sg in segs]
    x_len = max([spec.filter_length] + [p.size for p in p_effs] + [len(sg.model) for sg in segs])
    y_len = max([len(sg.secondary) for sg in segs] + [len(sg.model) for sg in segs])
    state = SimState.initial(spec.filter_length, variant.config.order, x_len, y_len, (b,))

    failed = np.zeros(b, dtype=bool)
    failures = []
    for k, ((start, end), sg) in enumerate(zip(spec.schedule.bounds(), segs)):
        cfg = variant.config_for(k, sg)
        p = p_effs[k]
        s = sg.secondary.taps
        s_hat = s if sg.secondary_estimate is None else sg.model.taps
        noise_std = None
        if spec.snr_db is not None:
            noise_std = np.sqrt(disturbance_power(p, spec.input_model) / 10.0 ** (spec.snr_db / 10.0))
        with np.errstate(over="ignore", invalid="ignore"):
            for n in range(start, end):
                noise = None if noise_std is None else noise_std * vs[n]
                _, out = step(state, xs[n], p, s, s_hat, cfg, noise, check=False)
                dev = msd_linear(state.w, w_o)
                bad = ~(np.isfinite(out.e) & (dev <= DIVERGENCE_MSD)) & ~failed
                if bad.any():
                    for row in np.flatnonzero(bad):
                        failures.append((int(row), n, cfg))
                    failed |= bad
                    state.forget(failed)
                if n % dec == 0:
                    msd[:, n // dec] = dev
    msd[failed] = np.nan
    return msd, failures


def _streams(spec, seeds):
    total = spec.total_iterations
    xs = np.empty((total, len(seeds)))
    vs = np.empty((total, len(seeds)))
    for j, seed in enumerate(seeds):
        xs[:, j], vs[:, j] = _trial_streams(seed, total, spec.input_model)
    return xs, vs


def run_trial(spec, seed, label=None):
    """MSD curve of one trial for one variant (default: the first)."""
    variant = spec.variants[0] if label is None else spec.variant(label)
    msd, failures = simulate_variant(spec, variant, [seed])
    if failures:
        _, it, cfg = failures[0]
        raise DivergenceError(
            f"{variant.label}: trial seed {seed} diverged at iteration {it} "
            f"({cfg.variant.value}, mu={cfg.mu:g})",
            iteration=it, variant=cfg.variant.value, mu=cfg.mu, trial=seed,
        )
    return MsdCurve(to_db(msd[0]), spec.decimation, 1)


def run_experiment(spec, trials=None, progress=None, seeds=None):
    """Average every variant over ``trials`` paired trials.

    MSD is averaged in linear units and then converted to dB; diverged
    trials are left out of the average and reported in ``failures``.
    ``seeds`` replaces the seeds derived from ``spec.base_seed``.
    """
    if seeds is None:
        trials = spec.trials if trials is None else trials
        if trials < 1:
            raise ConfigurationError(f"invariant violated: trials ≥ 1 (got {trials})")
        seeds = [trial_seed(spec.base_seed, i) for i in range(trials)]
    seeds = [int(s) for s in seeds]
    trials = len(seeds)
    if trials < 1:
        raise ConfigurationError("invariant violated: trials ≥ 1 (got 0)")
    streams = _streams(spec, seeds)
    curves, per_trial, failures = {}, {}, []
    for variant in spec.variants:
        log.info("running %s over %d trials", variant.label, trials)
        msd, fails = simulate_variant(spec, variant, seeds, streams)
        for row, it, cfg in fails:
            failures.append(Failure(variant.label, row, it, cfg.variant.value, cfg.mu))
        ok = ~np.any(np.isnan(msd), axis=-1) if msd.shape[-1] else np.ones(trials, dtype=bool)
        if ok.any():
            mean = np.sum(msd[ok], axis=0) / ok.sum()
        else:
            mean = np.full(msd.shape[-1], np.nan)
        curves[variant.label] = MsdCurve(to_db(mean), spec.decimation, int(ok.sum()))
        per_trial[variant.label] = msd
        if progress is not None:
            progress(variant.label)
    return ExperimentResult(spec, curves, per_trial, failures)
