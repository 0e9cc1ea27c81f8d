"""Monte-Carlo BER sweeps over Eb/N0 for the clipped-DMT receivers.

Every block draws its randomness from ``SeedSequence([seed, receiver,
ebno index, block index])``, and a point stops at the first block index at
which the cumulative error count reaches ``min_bit_errors`` and at least
``min_blocks`` blocks have run (or at ``max_blocks``).  Because the stopping index is computed in block order the
result does not depend on how blocks are spread over worker processes.
"""

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from . import __version__, gamp
from .baselines import CancellerConfig, bussgang_cancel, conventional_receive
from .channel import ChannelModel, apply_channel, calibrate_noise, generate_multipath
from .equalizer import ZFEqualizer
from .transform import TransformPlan, check_size
from .transmitter import ClipModel, Constellation, add_cp, bits_per_block, generate_block

RECEIVERS = ("gamp", "conventional", "canceller", "ideal-linear-reference")
_RECEIVER_ID = {name: i for i, name in enumerate(RECEIVERS)}
_CHANNEL_STREAM = 1000
MIN_NOISE_VARIANCE = 1e-12

CSV_COLUMNS = ("receiver", "ebno_db", "N", "M", "T", "channel", "blocks", "bits",
               "bit_errors", "ber", "avg_iterations", "numerical_failures",
               "zf_floor_hits", "wall_time_s", "seed")


class ConfigError(ValueError):
    pass


def parse_grid(text):
    """'start:step:stop' (inclusive) or a comma list -> tuple of floats."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, step, stop = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ConfigError(f"bad Eb/N0 range {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 10) for i in range(count))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad Eb/N0 grid {text!r}") from exc


@dataclass
class SimConfig:
    N: int = 4096
    M: int = 4
    clip: float = 0.7  # None: no clipping
    channel: str = "awgn"
    n_realizations: int = 50
    n_taps: int = 64
    decay: float = 0.05
    normalize_channel: bool = True
    n_cp: int = 64
    ebno: tuple = (4.0, 5.0, 6.0, 7.0, 8.0)
    receivers: tuple = ("gamp", "conventional")
    min_bit_errors: int = 100
    max_blocks: int = 2000
    # never stop before this many blocks (e.g. to cover every channel realization)
    min_blocks: int = 1
    energy_convention: str = "transmitted"
    t_max: int = 30
    variance_mode: str = "scalar"
    early_stop: int = 2
    metric_on: str = "hard"
    canceller_iterations: int = 3
    alpha_correction: bool = True
    zf_noise: str = "average"
    seed: int = 0
    workers: int = 1
    batch_blocks: int = 8
    record_timing: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        try:
            check_size(self.N)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.M not in (4, 16):
            raise ConfigError(f"modulation must be 4 or 16, got {self.M}")
        if self.clip is not None and not self.clip > 0:
            raise ConfigError("clip threshold must be positive or none")
        if self.channel not in ("awgn", "multipath"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        self.ebno = tuple(float(v) for v in self.ebno)
        if not self.ebno:
            raise ConfigError("empty Eb/N0 grid")
        self.receivers = tuple(self.receivers)
        if not self.receivers:
            raise ConfigError("no receivers selected")
        for r in self.receivers:
            if r not in RECEIVERS:
                raise ConfigError(f"unknown receiver {r!r}")
        if self.min_bit_errors < 1:
            raise ConfigError("min_bit_errors must be >= 1")
        if self.max_blocks < 1:
            raise ConfigError("max_blocks must be >= 1")
        if not 1 <= self.min_blocks <= self.max_blocks:
            raise ConfigError("min_blocks must lie in [1, max_blocks]")
        if self.energy_convention not in ("transmitted", "preclip"):
            raise ConfigError(f"unknown energy convention {self.energy_convention!r}")
        if self.variance_mode not in ("scalar", "exact"):
            raise ConfigError(f"unknown variance mode {self.variance_mode!r}")
        if self.metric_on not in ("hard", "soft"):
            raise ConfigError(f"unknown metric input {self.metric_on!r}")
        if self.zf_noise not in ("average", "plain"):
            raise ConfigError(f"unknown ZF noise mode {self.zf_noise!r}")
        if self.t_max < 1 or self.early_stop < 0:
            raise ConfigError("t_max must be >= 1 and early_stop >= 0")
        if self.channel == "multipath" and self.n_taps > self.n_cp:
            raise ConfigError("channel taps exceed the cyclic prefix")
        if self.workers < 1 or self.batch_blocks < 1 or self.n_realizations < 1:
            raise ConfigError("workers, batch_blocks and n_realizations must be >= 1")

    @property
    def constellation(self):
        return Constellation(self.M)

    @property
    def clip_model(self):
        return None if self.clip is None else ClipModel(self.clip)


@dataclass
class BerRecord:
    receiver: str
    ebno_db: float
    N: int
    M: int
    T: float
    channel: str
    blocks: int
    bits: int
    bit_errors: int
    ber: float
    avg_iterations: float = None
    numerical_failures: int = 0
    zf_floor_hits: int = 0
    wall_time_s: float = 0.0
    seed: int = 0
    censored: bool = field(default=False, compare=False)
    realization_errors: dict = field(default_factory=dict, compare=False)
    variance_violations: int = field(default=0, compare=False)


# ---------------------------------------------------------------- per block

@lru_cache(maxsize=8)
def _plan(N, mode):
    return TransformPlan(N, mode)


def channel_taps(config, realization):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _CHANNEL_STREAM, realization]))
    return generate_multipath(rng, config.n_taps, config.decay, config.n_cp,
                              normalize=config.normalize_channel)


def simulate_block(config, receiver, ebno_index, block_index):
    """Run one block.

    Returns (bit_errors, iterations, failed, zf_floor_hits, variance_violations).
    """
    const = config.constellation
    N = config.N
    plan = _plan(N, "fast")
    rng = np.random.default_rng(np.random.SeedSequence(
        [config.seed, _RECEIVER_ID[receiver], ebno_index, block_index]))
    linear = receiver == "ideal-linear-reference" or config.clip is None
    clip_model = None if linear else config.clip_model
    block = generate_block(rng, N, const, plan, clip_model)
    tx = block.z if clip_model is None else block.s
    s2 = calibrate_noise(config.ebno[ebno_index], N, const, clip_model, config.energy_convention)

    floor_hits = 0
    s2_rx = s2
    if config.channel == "multipath":
        taps = channel_taps(config, block_index % config.n_realizations)
        y = apply_channel(add_cp(tx, config.n_cp), ChannelModel(taps, s2), rng, config.n_cp)
        eq = ZFEqualizer(taps, N)
        y = eq(y)
        floor_hits = eq.floor_hits
        s2_rx = eq.noise_variance(s2, config.zf_noise)
    else:
        y = tx + np.sqrt(s2) * rng.standard_normal(N)

    iterations = violations = 0
    failed = False
    if receiver == "gamp":
        threshold = np.inf if clip_model is None else clip_model.threshold
        gcfg = gamp.GampConfig(
            noise_variance=max(s2_rx, MIN_NOISE_VARIANCE), threshold=threshold,
            constellation=const, t_max=config.t_max, variance_mode=config.variance_mode,
            early_stop=config.early_stop, metric_on=config.metric_on)
        res = gamp.run(y, gcfg, _plan(N, "fast"))
        bits = res.bits
        iterations = res.iterations
        failed = res.failed
        violations = res.variance_violations
    elif receiver == "canceller" and clip_model is not None:
        ccfg = CancellerConfig(clip_model.threshold, const, config.canceller_iterations)
        bits = bussgang_cancel(y, ccfg, plan)
    else:
        alpha = None
        if clip_model is not None and config.alpha_correction:
            alpha = clip_model.bussgang_gain
        bits = conventional_receive(y, const, plan, alpha)
    errors = int(np.count_nonzero(bits != block.bits))
    return errors, iterations, failed, floor_hits, violations


def _simulate_batch(args):
    config, receiver, ebno_index, indices = args
    return [simulate_block(config, receiver, ebno_index, b) for b in indices]


# ---------------------------------------------------------------- sweeps

def run_point(config, receiver, ebno_index, executor=None):
    start = time.perf_counter()
    results = []
    cum = 0
    stop_at = None
    next_block = 0
    per_batch = config.batch_blocks * config.workers
    while stop_at is None and next_block < config.max_blocks:
        indices = list(range(next_block, min(next_block + per_batch, config.max_blocks)))
        next_block = indices[-1] + 1
        chunks = [indices[i::config.workers] for i in range(config.workers)]
        jobs = [(config, receiver, ebno_index, c) for c in chunks if c]
        out = executor.map(_simulate_batch, jobs) if executor else map(_simulate_batch, jobs)
        by_index = {}
        for c, res in zip([c for c in chunks if c], out):
            by_index.update(zip(c, res))
        for b in indices:
            results.append(by_index[b])
            cum += by_index[b][0]
            if cum >= config.min_bit_errors and b + 1 >= config.min_blocks:
                stop_at = b + 1
                break
    results = results[:stop_at] if stop_at else results
    blocks = len(results)
    nbits = blocks * bits_per_block(config.N, config.constellation)
    errors = sum(r[0] for r in results)
    rec = BerRecord(
        receiver=receiver,
        ebno_db=config.ebno[ebno_index],
        N=config.N,
        M=config.M,
        T=None if (config.clip is None or receiver == "ideal-linear-reference") else config.clip,
        channel=config.channel,
        blocks=blocks,
        bits=nbits,
        bit_errors=errors,
        ber=errors / nbits,
        avg_iterations=(sum(r[1] for r in results) / blocks) if receiver == "gamp" else None,
        numerical_failures=sum(int(r[2]) for r in results),
        zf_floor_hits=sum(r[3] for r in results),
        wall_time_s=(time.perf_counter() - start) if config.record_timing else 0.0,
        seed=config.seed,
        censored=errors == 0,
        variance_violations=sum(r[4] for r in results),
    )
    if config.channel == "multipath":
        spread = {}
        for b, r in enumerate(results):
            key = b % config.n_realizations
            spread[key] = spread.get(key, 0) + r[0]
        rec.realization_errors = spread
    return rec


def run_sweep(config, progress=None):
    """Simulate every (receiver, Eb/N0) point; returns a list of BerRecord."""
    config.validate()
    records = []
    executor = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for receiver in config.receivers:
            for i in range(len(config.ebno)):
                rec = run_point(config, receiver, i, executor)
                records.append(rec)
                if progress:
                    progress(rec)
    finally:
        if executor:
            executor.shutdown()
    return records


def reference_curve(ebno_db, M):
    """Theoretical Gray square-QAM BER in AWGN (ideal linear transmission)."""
    g = 10.0 ** (np.asarray(ebno_db, dtype=float) / 10.0)

    def q(x):
        return 0.5 * erfc(x / np.sqrt(2.0))

    if M == 4:
        return q(np.sqrt(2.0 * g))
    if M == 16:
        x = np.sqrt(0.8 * g)
        return (3.0 * q(x) + 2.0 * q(3.0 * x) - q(5.0 * x)) / 4.0
    raise ValueError(f"unsupported constellation size {M}")


def ebno_at_ber(ebno_db, ber, target):
    """Eb/N0 where a measured curve crosses ``target`` (log-linear interpolation).

    Returns None when the curve never reaches the target inside the grid.
    """
    ebno_db = np.asarray(ebno_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    for i in range(len(ber) - 1):
        b0, b1 = ber[i], ber[i + 1]
        if b0 >= target > b1:
            if b1 <= 0:
                return float(ebno_db[i + 1])
            frac = (np.log10(b0) - np.log10(target)) / (np.log10(b0) - np.log10(b1))
            return float(ebno_db[i] + frac * (ebno_db[i + 1] - ebno_db[i]))
    return None


def reference_ebno_at(target, M):
    """Eb/N0 (dB) at which the ideal curve reaches ``target``."""
    from scipy.optimize import brentq
    return brentq(lambda e: np.log10(reference_curve(e, M)) - np.log10(target), -10.0, 20.0)


def calibrate(config, points=(4.0, 6.0), z_limit=4.0):
    """Ideal-linear self-check: simulated unclipped 4/16-QAM against theory.

    Returns a dict with one entry per Eb/N0 point and an overall ``passed``.
    """
    cal = dataclasses.replace(config, receivers=("ideal-linear-reference",),
                              channel="awgn", ebno=tuple(points))
    out = {"points": [], "passed": True}
    for rec in run_sweep(cal):
        N = config.N
        # block energy is booked over N samples but only N-2 slots carry data
        scale = (N // 2 - 1) / (N // 2)
        p = float(reference_curve(rec.ebno_db + 10 * np.log10(scale), config.M))
        sd = math.sqrt(p * (1 - p) / rec.bits)
        z = (rec.ber - p) / sd if sd > 0 else 0.0
        ok = abs(z) <= z_limit
        out["points"].append({"ebno_db": rec.ebno_db, "ber": rec.ber, "theory": p,
                              "z": z, "passed": ok})
        out["passed"] &= ok
    return out


# ---------------------------------------------------------------- output

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records, path):
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in records:
                row = [getattr(r, c) for c in CSV_COLUMNS]
                row[CSV_COLUMNS.index("T")] = "none" if r.T is None else r.T
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


def read_csv(path):
    ints = {"N", "M", "blocks", "bits", "bit_errors", "numerical_failures", "zf_floor_hits", "seed"}
    floats = {"ebno_db", "ber", "wall_time_s"}
    records = []
    with open(path, newline="", encoding="ascii") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for k, v in row.items():
                if k in ints:
                    kw[k] = int(v)
                elif k in floats:
                    kw[k] = float(v)
                elif k == "T":
                    kw[k] = None if v == "none" else float(v)
                elif k == "avg_iterations":
                    kw[k] = float(v) if v else None
                else:
                    kw[k] = v
            kw["censored"] = kw["bit_errors"] == 0
            records.append(BerRecord(**kw))
    return records


def write_meta(config, path, records=(), calibration=None):
    meta = {
        "code_version": __version__,
        "config": dataclasses.asdict(config),
        "seed": config.seed,
        "energy_convention": config.energy_convention,
        "calibration": calibration,
        "points": [
            {"receiver": r.receiver, "ebno_db": r.ebno_db, "censored": r.censored,
             "variance_violations": r.variance_violations,
             "realization_errors": {str(k): v for k, v in sorted(r.realization_errors.items())}}
            for r in records
        ],
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write metadata {path}: {exc}") from exc


# ---------------------------------------------------------------- config files

def _coerce(name, raw):
    ftype = {f.name: f for f in dataclasses.fields(SimConfig)}[name].type
    raw = raw.strip()
    if name == "clip":
        return None if raw.lower() == "none" else float(raw)
    if name == "ebno":
        return parse_grid(raw)
    if name == "receivers":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    if name == "M":
        return parse_modulation(raw)
    if ftype in ("bool", bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if ftype in ("int", int):
        if name == "early_stop" and raw.lower() == "off":
            return 0
        return int(raw)
    if ftype in ("float", float):
        return float(raw)
    return raw


def parse_modulation(raw):
    raw = str(raw).strip().lower()
    table = {"4": 4, "4qam": 4, "qpsk": 4, "16": 16, "16qam": 16}
    if raw not in table:
        raise ConfigError(f"unknown modulation {raw!r}")
    return table[raw]


def parse_config_text(text):
    """Flat ``key = value`` lines (``#`` comments) -> dict of SimConfig fields."""
    names = {f.name for f in dataclasses.fields(SimConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return values


def load_config(path, **overrides):
    try:
        with open(path, encoding="utf-8") as fh:
            values = parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values.update(overrides)
    return SimConfig(**values)
