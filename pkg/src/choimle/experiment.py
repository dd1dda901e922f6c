"""Simulated measurement campaign for the 1-to-2 cloner.

Each record is one run: a random pure input state, independent random
projective measurement directions on the two clones, and a +-1 outcome pair
sampled from the analytic outcome distribution. Datasets are reproducible
from a single 64-bit seed; each record draws from its own spawned substream
so sequential and parallel generation agree.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChoiMatrix, SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z
from .matlin import kron

# Fixed outcome ordering for the inverse-CDF draw.
OUTCOME_ORDER = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class PureState:
    """Bloch angles of a pure qubit state: polar theta in [0, pi], azimuth phi in [0, 2pi)."""

    theta: float
    phi: float


@dataclass(frozen=True)
class MeasurementSetting:
    """Polar/azimuth angles of the two clone measurement directions."""

    alpha: float
    beta: float
    gamma: float
    delta: float


@dataclass(frozen=True)
class Outcome:
    a: int
    b: int

    def __post_init__(self):
        if self.a not in (-1, 1) or self.b not in (-1, 1):
            raise ValueError(f"outcomes must be +-1, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class MeasurementRecord:
    state: PureState
    setting: MeasurementSetting
    outcome: Outcome


@dataclass(frozen=True)
class Dataset:
    records: tuple[MeasurementRecord, ...]
    seed: int = 0

    def __len__(self) -> int:
        return len(self.records)


def random_direction(rng: np.random.Generator) -> tuple[float, float]:
    """Uniform direction on the sphere: cos(polar) uniform, azimuth uniform."""
    polar = math.acos(rng.uniform(-1.0, 1.0))
    azimuth = rng.uniform(0.0, 2.0 * math.pi)
    return polar, azimuth


def bloch_vector(polar: float, azimuth: float) -> np.ndarray:
    return np.array(
        [
            math.sin(polar) * math.cos(azimuth),
            math.sin(polar) * math.sin(azimuth),
            math.cos(polar),
        ]
    )


def state_density(s: PureState) -> np.ndarray:
    """Density matrix (1 + sigma . n) / 2 of the pure state."""
    n = bloch_vector(s.theta, s.phi)
    return 0.5 * (SIGMA_0 + n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)


def povm_element(m: MeasurementSetting, o: Outcome) -> np.ndarray:
    """Product projector (1 + a sigma.r)(x)(1 + b sigma.t) / 4 on the two clones."""
    r = bloch_vector(m.alpha, m.beta)
    t = bloch_vector(m.gamma, m.delta)
    pb = 0.5 * (SIGMA_0 + o.a * (r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z))
    pc = 0.5 * (SIGMA_0 + o.b * (t[0] * SIGMA_X + t[1] * SIGMA_Y + t[2] * SIGMA_Z))
    return kron(pb, pc)


def prob_closed(s: PureState, m: MeasurementSetting, o: Outcome) -> float:
    """Closed-form outcome probability of the cloner for one record."""
    a, b = float(o.a), float(o.b)
    ct, st = math.cos(s.theta), math.sin(s.theta)
    ca, sa = math.cos(m.alpha), math.sin(m.alpha)
    cg, sg = math.cos(m.gamma), math.sin(m.gamma)
    return (
        0.25
        + (a * ca + b * cg) * ct / 6.0
        + (a * sa * math.cos(m.beta - s.phi) + b * sg * math.cos(m.delta - s.phi)) * st / 6.0
        + a * b * (ca * cg + sa * sg * math.cos(m.delta - m.beta)) / 12.0
    )


def prob_trace(s: PureState, m: MeasurementSetting, o: Outcome, choi: ChoiMatrix) -> float:
    """Outcome probability from a Choi matrix: Tr[(rho^T (x) F) S]."""
    if (choi.dim_in, choi.dim_out) != (2, 4):
        raise ValueError("prob_trace expects a 2 -> 4 Choi matrix")
    weight = kron(state_density(s).T, povm_element(m, o))
    return float(np.einsum("ij,ji->", weight, choi.mat).real)


def sample_outcome(
    s: PureState,
    m: MeasurementSetting,
    rng: np.random.Generator,
    choi: ChoiMatrix | None = None,
) -> Outcome:
    """Draw one outcome pair by inverse CDF over the fixed ordering (++, +-, -+, --).

    With no Choi matrix the cloner's closed-form distribution is used;
    otherwise probabilities come from the supplied channel.
    """
    u = rng.random()
    cum = 0.0
    for a, b in OUTCOME_ORDER:
        o = Outcome(a, b)
        p = prob_closed(s, m, o) if choi is None else prob_trace(s, m, o, choi)
        cum += max(p, 0.0)
        if u <= cum:
            return o
    return Outcome(*OUTCOME_ORDER[-1])  # guard against fp shortfall in the CDF


def generate_dataset(k: int, seed: int, choi: ChoiMatrix | None = None) -> Dataset:
    """Generate k records from independently seeded per-record substreams."""
    if k < 1:
        raise ValueError("dataset size must be >= 1")
    if seed < 0:
        raise ValueError("seed must be a non-negative 64-bit integer")
    records = []
    for child in np.random.SeedSequence(seed).spawn(k):
        rng = np.random.Generator(np.random.PCG64(child))
        state = PureState(*random_direction(rng))
        setting = MeasurementSetting(*random_direction(rng), *random_direction(rng))
        outcome = sample_outcome(state, setting, rng, choi)
        records.append(MeasurementRecord(state, setting, outcome))
    return Dataset(tuple(records), seed)


_ANGLE_RANGES = {
    "theta": (0.0, math.pi, True),
    "phi": (0.0, 2.0 * math.pi, False),
    "alpha": (0.0, math.pi, True),
    "beta": (0.0, 2.0 * math.pi, False),
    "gamma": (0.0, math.pi, True),
    "delta": (0.0, 2.0 * math.pi, False),
}
_FIELDS = ("theta", "phi", "alpha", "beta", "gamma", "delta", "a", "b")


class DatasetFormatError(ValueError):
    """Raised for malformed or out-of-range dataset files."""


def _record_from_fields(fields: dict, lineno: int) -> MeasurementRecord:
    values = {}
    for name in _FIELDS:
        if name not in fields:
            raise DatasetFormatError(f"line {lineno}: missing field '{name}'")
        values[name] = fields[name]
    for name, (lo, hi, inclusive) in _ANGLE_RANGES.items():
        try:
            x = float(values[name])
        except (TypeError, ValueError):
            raise DatasetFormatError(f"line {lineno}: field '{name}' is not a number")
        if not (lo <= x <= hi if inclusive else lo <= x < hi):
            raise DatasetFormatError(
                f"line {lineno}: field '{name}' = {x!r} out of range"
            )
        values[name] = x
    for name in ("a", "b"):
        if isinstance(values[name], bool) or values[name] not in (-1, 1):
            raise DatasetFormatError(
                f"line {lineno}: field '{name}' = {values[name]!r} must be +1 or -1"
            )
    return MeasurementRecord(
        PureState(values["theta"], values["phi"]),
        MeasurementSetting(values["alpha"], values["beta"], values["gamma"], values["delta"]),
        Outcome(int(values["a"]), int(values["b"])),
    )


def record_to_dict(r: MeasurementRecord) -> dict:
    return {
        "theta": r.state.theta,
        "phi": r.state.phi,
        "alpha": r.setting.alpha,
        "beta": r.setting.beta,
        "gamma": r.setting.gamma,
        "delta": r.setting.delta,
        "a": r.outcome.a,
        "b": r.outcome.b,
    }


def write_dataset(d: Dataset, path) -> None:
    """JSON-lines dataset: one header line {"k", "seed"}, then one record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"k": len(d.records), "seed": d.seed}) + "\n")
        for r in d.records:
            fh.write(json.dumps(record_to_dict(r)) + "\n")


def read_dataset(path) -> Dataset:
    """Parse a JSONL dataset; the header line is optional (seed then defaults to 0)."""
    records = []
    seed = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                fields = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: invalid JSON ({exc.msg})")
            if not isinstance(fields, dict):
                raise DatasetFormatError(f"line {lineno}: expected a JSON object")
            if lineno == 1 and "theta" not in fields and "k" in fields:
                seed = int(fields.get("seed", 0))
                continue
            records.append(_record_from_fields(fields, lineno))
    if not records:
        raise DatasetFormatError("dataset contains no records")
    return Dataset(tuple(records), seed)


def write_dataset_csv(d: Dataset, path) -> None:
    """CSV export with the same columns, for plotting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_FIELDS)
        for r in d.records:
            rd = record_to_dict(r)
            writer.writerow([repr(rd[name]) if isinstance(rd[name], float) else rd[name] for name in _FIELDS])
