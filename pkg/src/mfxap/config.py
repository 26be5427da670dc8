"""INI-style experiment configuration.

A config file is read with :mod:`configparser` (``#`` and ``;`` start
comments, ``key = value`` pairs).  Sections and keys::

    [experiment]
    name = fig3_desk            ; optional label
    filter_length = 64          ; L, integer >= 1            (required)
    total_iterations = 44000    ; integer >= 0               (required)
    trials = 50                 ; integer >= 1               (default 1)
    base_seed = 7               ; integer                    (default 0)
    decimation = 10             ; integer >= 1               (default 10)
    output = fig3_desk.csv      ; CSV path                   (optional)

    [input]                     ; optional, white unit-variance by default
    model = white-gaussian      ; white-gaussian | ar1
    sigma = 1.0
    a = 0.9                     ; ar1 only

    [measurement_noise]         ; optional, absent = no sensor noise
    snr_db = 25                 ; disturbance-to-noise ratio in dB

    [plant]                     ; ground truth w_o              (required)
    class = sparse              ; sparse | partially-sparse | non-sparse
    density = 6/64              ; optional, fraction like a/b or a float
    seed = 1                    ; integer (default 0)
    file = plant.txt            ; optional: load taps instead of generating

    [segment 1]                 ; one section per segment, numbered
    start = 0                   ; first iteration of the segment (required)
    secondary = non-sparse      ; class of s, or use file =
    density = 63/64
    seed = 11
    file = s1.txt
    mu = 0.2                    ; default step size for every variant
    epsilon = 10                ; default shrinkage magnitude

    [variant FxAP_K4]           ; one section per curve; the label follows
    algorithm = FxAP            ; FxAP | MFxAP | ZA-MFxAP | RZA-MFxAP
    order = 4                   ; K                          (required)
    mu = 0.2, 0.2, 0.05         ; one value, or one per segment
    delta = 0.002
    rho = 1e-7
    rho_prime = 1e-7
    epsilon = 10                ; one value, or one per segment

Variants are kept in file order, which is also the CSV column order.
Relative ``file`` paths resolve against the directory of the config.
"""

import configparser
from fractions import Fraction
from pathlib import Path
import re

from .algorithms import AlgorithmConfig, Variant
from .dsp import AR1, WhiteGaussian
from .errors import ConfigurationError
from .paths import ImpulseResponse, SparsityClass, make_path
from .sim import ExperimentSpec, Segment, SegmentSchedule, VariantSpec

__all__ = ["parse_spec", "load_spec", "REQUIRED"]

REQUIRED = (
    "[experiment] filter_length",
    "[experiment] total_iterations",
    "[plant] class (or file)",
    "[segment N] start",
    "[segment N] secondary (or file)",
    "[variant LABEL] algorithm",
    "[variant LABEL] order",
)

_KEYS = {
    "experiment": {"name", "filter_length", "total_iterations", "trials", "base_seed", "decimation", "output"},
    "input": {"model", "sigma", "a"},
    "measurement_noise": {"snr_db"},
    "plant": {"class", "density", "seed", "file"},
    "segment": {"start", "secondary", "density", "seed", "file", "mu", "epsilon"},
    "variant": {"algorithm", "order", "mu", "delta", "rho", "rho_prime", "epsilon"},
}

_SEGMENT = re.compile(r"segment\s+(\d+)$")
_VARIANT = re.compile(r"variant\s+(\S+)$")


class _Section:
    """Typed access to one config section; errors name the section and key."""

    def __init__(self, name, items):
        self.name = name
        self.items = dict(items)

    def _raw(self, key, default, required):
        if key in self.items:
            return self.items[key].strip()
        if required:
            raise ConfigurationError(f"[{self.name}] {key}: required key is missing")
        return default

    def _convert(self, key, raw, kind, func):
        try:
            return func(raw)
        except (ValueError, ZeroDivisionError):
            raise ConfigurationError(f"[{self.name}] {key}: expected {kind}, got {raw!r}") from None

    def has(self, key):
        return key in self.items

    def int(self, key, default=None, required=False):
        raw = self._raw(key, default, required)
        if raw is None or not isinstance(raw, str):
            return raw
        return self._convert(key, raw, "an integer", int)

    def float(self, key, default=None, required=False):
        raw = self._raw(key, default, required)
        if raw is None or not isinstance(raw, str):
            return raw
        return self._convert(key, raw, "a real number", float)

    def optional_float(self, key):
        raw = self._raw(key, None, False)
        if raw is None or raw.lower() in ("", "none", "off"):
            return None
        return self._convert(key, raw, "a real number or 'none'", float)

    def str(self, key, default=None, required=False):
        return self._raw(key, default, required)

    def fraction(self, key):
        raw = self._raw(key, None, False)
        if raw is None:
            return None
        return self._convert(key, raw, "a fraction such as 6/64 or a real number", _to_fraction)

    def floats(self, key):
        """Comma-separated reals; ``None`` when absent."""
        raw = self._raw(key, None, False)
        if raw is None:
            return None
        parts = [p.strip() for p in raw.split(",")]
        return tuple(self._convert(key, p, "a real number or a comma-separated list of reals", float)
                     for p in parts)


def _to_fraction(raw):
    if "/" in raw:
        num, den = raw.split("/", 1)
        return Fraction(int(num), int(den))
    if re.fullmatch(r"[+-]?\d+", raw):
        return Fraction(int(raw))
    return Fraction(float(raw)).limit_denominator(1_000_000)


def _check_keys(section, kind):
    unknown = sorted(set(section.items) - _KEYS[kind])
    if unknown:
        raise ConfigurationError(
            f"[{section.name}] unknown key {unknown[0]!r}; allowed keys: {sorted(_KEYS[kind])}"
        )


def _path_from(section, length, base_dir, class_key):
    cls = None
    if section.has("file"):
        path = Path(section.str("file"))
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        try:
            h = ImpulseResponse.load(path)
        except OSError as exc:
            raise ConfigurationError(f"[{section.name}] file: cannot read {path}: {exc}") from None
    else:
        kind = section.str(class_key, required=True)
        cls = SparsityClass(kind, section.fraction("density"))
        if cls.kind != "sparse" and cls.nonzero_count(length) < 1:
            raise ConfigurationError(
                f"[{section.name}] density: {cls.target_density} leaves no nonzero tap at L={length}"
            )
        h = make_path(cls, length, section.int("seed", 0))
    return h, cls


def _input_model(section):
    if section is None:
        return WhiteGaussian()
    _check_keys(section, "input")
    kind = section.str("model", "white-gaussian").lower()
    sigma = section.float("sigma", 1.0)
    if kind in ("white-gaussian", "white"):
        if section.has("a"):
            raise ConfigurationError("[input] a: only meaningful for model = ar1")
        return WhiteGaussian(sigma)
    if kind == "ar1":
        return AR1(section.float("a", required=True), sigma)
    raise ConfigurationError(f"[input] model: expected 'white-gaussian' or 'ar1', got {kind!r}")


def parse_spec(text, base_dir=None):
    """Parse a config document into a validated :class:`ExperimentSpec`."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=(";", "#"), default_section="__defaults__"
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None

    names = parser.sections()
    if not names:
        raise ConfigurationError("empty config; required keys: " + ", ".join(REQUIRED))

    sections = {}
    segments, variants = [], []
    for name in names:
        sec = _Section(name, parser.items(name))
        if name in ("experiment", "input", "measurement_noise", "plant"):
            sections[name] = sec
        elif m := _SEGMENT.match(name):
            segments.append((int(m.group(1)), sec))
        elif m := _VARIANT.match(name):
            variants.append((m.group(1), sec))
        else:
            raise ConfigurationError(
                f"unknown section [{name}]; expected [experiment], [input], [measurement_noise], "
                "[plant], [segment N] or [variant LABEL]"
            )

    missing = [s for s in ("experiment", "plant") if s not in sections]
    if missing:
        raise ConfigurationError(f"missing section [{missing[0]}]; required keys: " + ", ".join(REQUIRED))
    if not segments:
        raise ConfigurationError("no [segment N] section; at least one segment is required")
    if not variants:
        raise ConfigurationError("no [variant LABEL] section; at least one variant is required")

    exp = sections["experiment"]
    _check_keys(exp, "experiment")
    length = exp.int("filter_length", required=True)
    if length < 1:
        raise ConfigurationError(f"invariant violated: filter_length ≥ 1 (got {length})")
    total = exp.int("total_iterations", required=True)
    trials = exp.int("trials", 1)
    if trials < 1:
        raise ConfigurationError(f"invariant violated: trials ≥ 1 (got {trials})")

    model = _input_model(sections.get("input"))
    snr_db = None
    if "measurement_noise" in sections:
        noise = sections["measurement_noise"]
        _check_keys(noise, "measurement_noise")
        snr_db = noise.optional_float("snr_db")

    plant_sec = sections["plant"]
    _check_keys(plant_sec, "plant")
    plant, plant_class = _path_from(plant_sec, length, base_dir, "class")
    if len(plant) != length:
        raise ConfigurationError(f"[plant] file: has {len(plant)} taps, filter_length is {length}")

    numbers = [n for n, _ in segments]
    if len(set(numbers)) != len(numbers):
        raise ConfigurationError(f"duplicate segment numbers: {sorted(numbers)}")
    segs = []
    for _, sec in sorted(segments, key=lambda t: t[0]):
        _check_keys(sec, "segment")
        s, cls = _path_from(sec, length, base_dir, "secondary")
        segs.append(Segment(
            start=sec.int("start", required=True),
            secondary=s,
            mu=sec.float("mu"),
            epsilon=sec.float("epsilon"),
            secondary_class=cls,
        ))
    schedule = SegmentSchedule(segs, total)

    vspecs = []
    for label, sec in variants:
        _check_keys(sec, "variant")
        mus, epss = sec.floats("mu"), sec.floats("epsilon")
        mus = _per_segment(sec, "mu", mus, len(segs))
        epss = _per_segment(sec, "epsilon", epss, len(segs))
        first_mu = mus[0] if mus else segs[0].mu
        if first_mu is None:
            raise ConfigurationError(f"[{sec.name}] mu: required here or in every [segment N]")
        if mus is None and any(sg.mu is None for sg in segs):
            raise ConfigurationError(f"[{sec.name}] mu: some segments give no default step size")
        cfg = AlgorithmConfig(
            variant=Variant.parse(sec.str("algorithm", required=True)),
            order=sec.int("order", required=True),
            mu=first_mu,
            delta=sec.float("delta", 0.002),
            rho=sec.float("rho", 1e-7),
            rho_prime=sec.float("rho_prime", 1e-7),
            epsilon=(epss[0] if epss else segs[0].epsilon) or 10.0,
        )
        vspecs.append(VariantSpec(label, cfg, mu=mus, epsilon=epss))

    return ExperimentSpec(
        filter_length=length,
        plant=plant,
        schedule=schedule,
        variants=vspecs,
        trials=trials,
        base_seed=exp.int("base_seed", 0),
        input_model=model,
        snr_db=snr_db,
        decimation=exp.int("decimation", 10),
        output=exp.str("output"),
        plant_class=plant_class,
        name=exp.str("name"),
    )


def _per_segment(sec, key, values, n_seg):
    if values is None:
        return None
    if len(values) == 1:
        return values * n_seg
    if len(values) != n_seg:
        raise ConfigurationError(
            f"[{sec.name}] {key}: expected 1 or {n_seg} comma-separated values, got {len(values)}"
        )
    return values


def load_spec(path):
    """Read and parse a config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_spec(text, base_dir=path.parent)
