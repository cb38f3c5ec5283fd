"""Discrete-event generator for a small sensor network under UDP flood.

Sensors report to a single server relay, which answers each report after a
fixed service delay.  Attackers flood the server with Poisson-timed packets
during the attack window.  Traces are stored column-wise with integer
nanosecond timestamps so that CSV round trips are exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, ParseError

NS_PER_S = 1_000_000_000
SERVICE_DELAY_NS = 1_000_000
SERVER_INDEX = 1

TRACE_HEADER = "timestamp,src_role,src_idx,dst_role,dst_idx,size_bytes,kind,phase"


class Role(enum.IntEnum):
    SENSOR = 0
    SERVER = 1
    ATTACKER = 2


class Kind(enum.IntEnum):
    SENSOR_DATA = 0
    SERVER_REPLY = 1
    FLOOD = 2


class Phase(enum.IntEnum):
    NORMAL = 0
    ATTACK = 1


def _token(member: enum.Enum) -> str:
    return member.name.lower()


_ROLE_TOKENS = {_token(r): r for r in Role}
_KIND_TOKENS = {_token(k): k for k in Kind}
_PHASE_TOKENS = {_token(p): p for p in Phase}


@dataclass(frozen=True)
class NodeId:
    role: Role
    index: int

    def __str__(self):
        return f"{_token(self.role)}{self.index}"


SERVER = NodeId(Role.SERVER, SERVER_INDEX)


@dataclass(frozen=True)
class PacketRecord:
    timestamp_ns: int
    src: NodeId
    dst: NodeId
    size_bytes: int
    kind: Kind
    phase: Phase

    @property
    def timestamp(self) -> float:
        return self.timestamp_ns / NS_PER_S


def _check_record_roles(kind: Kind, src_role: Role, dst_role: Role, phase: Phase) -> str | None:
    if kind == Kind.FLOOD:
        if src_role != Role.ATTACKER or dst_role != Role.SERVER:
            return "flood packets must go from an attacker to the server"
        if phase != Phase.ATTACK:
            return "flood packets must carry phase attack"
    elif kind == Kind.SENSOR_DATA:
        if src_role != Role.SENSOR or dst_role != Role.SERVER:
            return "sensor_data packets must go from a sensor to the server"
    elif src_role != Role.SERVER or dst_role != Role.SENSOR:
        return "server_reply packets must go from the server to a sensor"
    return None


_COLUMNS = ("timestamp_ns", "src_role", "src_idx", "dst_role", "dst_idx", "size_bytes", "kind", "phase")


@dataclass(eq=False)
class Trace:
    """Packet trace held as parallel numpy columns, one row per packet.

    Indexing and iteration yield :class:`PacketRecord` objects.
    """

    timestamp_ns: np.ndarray
    src_role: np.ndarray
    src_idx: np.ndarray
    dst_role: np.ndarray
    dst_idx: np.ndarray
    size_bytes: np.ndarray
    kind: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        dtypes = (np.int64, np.int8, np.int32, np.int8, np.int32, np.int64, np.int8, np.int8)
        for name, dt in zip(_COLUMNS, dtypes):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=dt))
        n = len(self.timestamp_ns)
        if any(len(getattr(self, c)) != n for c in _COLUMNS):
            raise ValueError("trace columns differ in length")

    @classmethod
    def empty(cls) -> "Trace":
        return cls(*[np.empty(0, dtype=np.int64) for _ in _COLUMNS])

    @classmethod
    def from_records(cls, records: Sequence[PacketRecord]) -> "Trace":
        cols = [[] for _ in _COLUMNS]
        for r in records:
            for col, v in zip(cols, (r.timestamp_ns, r.src.role, r.src.index, r.dst.role,
                                     r.dst.index, r.size_bytes, r.kind, r.phase)):
                col.append(int(v))
        return cls(*[np.array(c, dtype=np.int64) for c in cols])

    def __len__(self) -> int:
        return len(self.timestamp_ns)

    def __getitem__(self, i: int) -> PacketRecord:
        return PacketRecord(
            int(self.timestamp_ns[i]),
            NodeId(Role(int(self.src_role[i])), int(self.src_idx[i])),
            NodeId(Role(int(self.dst_role[i])), int(self.dst_idx[i])),
            int(self.size_bytes[i]),
            Kind(int(self.kind[i])),
            Phase(int(self.phase[i])),
        )

    def __iter__(self) -> Iterator[PacketRecord]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in _COLUMNS)

    @property
    def timestamps(self) -> np.ndarray:
        """Timestamps in seconds (float64)."""
        return self.timestamp_ns / NS_PER_S

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.timestamp_ns) >= 0))


@dataclass(frozen=True)
class ScenarioConfig:
    """Simulation parameters.

    Defaults are calibrated so that 0.5 s windows give about 3305 samples with
    a 64/36 attack/normal mix; the flood totals roughly 2e6 packets.
    """

    n_sensors: int = 4
    n_attackers: int = 3
    duration_s: float = 1700.0
    sensor_period_s: float = 1.0
    sensor_jitter_frac: float = 0.2
    flood_rate_pps: float = 650.0
    attack_start_s: float = 320.0
    attack_end_s: float = 1380.5
    sensor_bytes_min: int = 64
    sensor_bytes_max: int = 128
    reply_bytes_min: int = 48
    reply_bytes_max: int = 96
    flood_bytes_min: int = 512
    flood_bytes_max: int = 1024
    seed: int = 0

    def __post_init__(self):
        def need(ok: bool, name: str, msg: str):
            if not ok:
                raise ConfigError(name, msg)

        need(self.n_sensors >= 1, "n_sensors", "must be >= 1")
        need(0 <= self.n_attackers <= 3, "n_attackers", "must be between 0 and 3")
        need(math.isfinite(self.duration_s) and self.duration_s > 0, "duration_s", "must be > 0")
        need(math.isfinite(self.sensor_period_s) and self.sensor_period_s > 0, "sensor_period_s", "must be > 0")
        need(0 <= self.sensor_jitter_frac < 1, "sensor_jitter_frac", "must lie in [0, 1)")
        need(math.isfinite(self.flood_rate_pps) and self.flood_rate_pps > 0, "flood_rate_pps", "must be > 0")
        need(0 <= self.attack_start_s < self.attack_end_s <= self.duration_s, "attack_window",
             "need 0 <= attack_start_s < attack_end_s <= duration_s")
        for lo, hi in (("sensor_bytes_min", "sensor_bytes_max"), ("reply_bytes_min", "reply_bytes_max"),
                       ("flood_bytes_min", "flood_bytes_max")):
            need(getattr(self, lo) >= 1, lo, "must be >= 1")
            need(getattr(self, hi) >= getattr(self, lo), hi, f"must be >= {lo}")
        need(self.seed >= 0, "seed", "must be unsigned")

    @property
    def attack_window(self) -> tuple[float, float]:
        return (self.attack_start_s, self.attack_end_s)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _to_ns(t) -> np.ndarray:
    return np.rint(np.asarray(t) * NS_PER_S).astype(np.int64)


def _sensor_report_times(rng: np.random.Generator, cfg: ScenarioConfig) -> np.ndarray:
    period, jit = cfg.sensor_period_s, cfg.sensor_jitter_frac
    horizon = cfg.duration_s - SERVICE_DELAY_NS / NS_PER_S
    # Overdraw intervals, then trim to the horizon.
    n = int(math.ceil(cfg.duration_s / (period * (1 - jit)))) + 2
    start = rng.uniform(0.0, period)
    gaps = period * (1.0 + rng.uniform(-jit, jit, size=n))
    times = start + np.concatenate(([0.0], np.cumsum(gaps)))
    return times[times < horizon]


def _poisson_times(rng: np.random.Generator, rate: float, start: float, end: float) -> np.ndarray:
    span = end - start
    chunk = int(rate * span + 6 * math.sqrt(rate * span) + 16)
    parts, t = [], start
    while True:
        arrivals = t + np.cumsum(rng.exponential(1.0 / rate, size=chunk))
        inside = arrivals[arrivals < end]
        parts.append(inside)
        if len(inside) < chunk:
            break
        t = arrivals[-1]
    return np.concatenate(parts)


def simulate(config: ScenarioConfig) -> Trace:
    """Generate the timestamp-sorted packet trace for ``config``."""
    seqs = np.random.SeedSequence(config.seed).spawn(config.n_sensors + config.n_attackers)
    cols = {c: [] for c in _COLUMNS}

    def emit(ts, src_role, src_idx, dst_role, dst_idx, size, kind):
        n = len(ts)
        cols["timestamp_ns"].append(ts)
        cols["src_role"].append(np.full(n, src_role))
        cols["src_idx"].append(np.full(n, src_idx))
        cols["dst_role"].append(np.full(n, dst_role))
        cols["dst_idx"].append(np.full(n, dst_idx))
        cols["size_bytes"].append(size)
        cols["kind"].append(np.full(n, kind))

    for s in range(config.n_sensors):
        rng = np.random.default_rng(seqs[s])
        ts = _to_ns(_sensor_report_times(rng, config))
        size = rng.integers(config.sensor_bytes_min, config.sensor_bytes_max, size=len(ts), endpoint=True)
        reply = rng.integers(config.reply_bytes_min, config.reply_bytes_max, size=len(ts), endpoint=True)
        emit(ts, Role.SENSOR, s + 1, Role.SERVER, SERVER_INDEX, size, Kind.SENSOR_DATA)
        emit(ts + SERVICE_DELAY_NS, Role.SERVER, SERVER_INDEX, Role.SENSOR, s + 1, reply, Kind.SERVER_REPLY)

    start_ns, end_ns = _to_ns(config.attack_start_s), _to_ns(config.attack_end_s)
    for a in range(config.n_attackers):
        rng = np.random.default_rng(seqs[config.n_sensors + a])
        ts = _to_ns(_poisson_times(rng, config.flood_rate_pps, config.attack_start_s, config.attack_end_s))
        ts = ts[(ts >= start_ns) & (ts < end_ns)]
        size = rng.integers(config.flood_bytes_min, config.flood_bytes_max, size=len(ts), endpoint=True)
        emit(ts, Role.ATTACKER, a + 1, Role.SERVER, SERVER_INDEX, size, Kind.FLOOD)

    merged = {c: np.concatenate(v) if v else np.empty(0, dtype=np.int64) for c, v in cols.items() if v}
    ts = merged["timestamp_ns"]
    # Stable on timestamp; ties keep generation order (sensors, their replies, attackers).
    order = np.argsort(ts, kind="stable")
    merged = {c: v[order] for c, v in merged.items()}
    ts = merged["timestamp_ns"]
    if config.n_attackers >= 1:
        merged["phase"] = ((ts >= start_ns) & (ts < end_ns)).astype(np.int8)
    else:
        merged["phase"] = np.zeros(len(ts), dtype=np.int8)
    return Trace(**merged)


# trace CSV -----------------------------------------------------------------

def _fmt_ns(ns: int) -> str:
    return f"{ns // NS_PER_S}.{ns % NS_PER_S:09d}"


def write_trace(trace: Trace, path) -> None:
    role = [_token(r) for r in Role]
    kind = [_token(k) for k in Kind]
    phase = [_token(p) for p in Phase]
    cols = [c.tolist() for c in (trace.timestamp_ns, trace.src_role, trace.src_idx, trace.dst_role,
                                 trace.dst_idx, trace.size_bytes, trace.kind, trace.phase)]
    with open(path, "w", newline="") as fh:
        fh.write(TRACE_HEADER + "\n")
        fh.writelines(
            f"{_fmt_ns(t)},{role[sr]},{si},{role[dr]},{di},{sz},{kind[k]},{phase[p]}\n"
            for t, sr, si, dr, di, sz, k, p in zip(*cols)
        )


def _parse_ns(tok: str) -> int:
    whole, _, frac = tok.partition(".")
    if not whole.isdigit() or (frac and not frac.isdigit()) or len(frac) > 9:
        raise ValueError(f"bad timestamp {tok!r}")
    return int(whole) * NS_PER_S + int(frac.ljust(9, "0") or 0)


def read_trace(path) -> Trace:
    """Parse a trace CSV, validating every row and the timestamp ordering."""
    path = str(path)
    cols = [[] for _ in _COLUMNS]
    with open(path) as fh:
        header = fh.readline().rstrip("\r\n")
        if header != TRACE_HEADER:
            raise ParseError(f"expected header {TRACE_HEADER!r}", 1, path)
        prev = -1
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ParseError(f"expected 8 fields, found {len(parts)}", lineno, path)
            try:
                ts = _parse_ns(parts[0])
                src_role, dst_role = _ROLE_TOKENS[parts[1]], _ROLE_TOKENS[parts[3]]
                kind, phase = _KIND_TOKENS[parts[6]], _PHASE_TOKENS[parts[7]]
                src_idx, dst_idx, size = int(parts[2]), int(parts[4]), int(parts[5])
            except KeyError as exc:
                raise ParseError(f"unknown token {exc.args[0]!r}", lineno, path) from None
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
            if size < 1 or src_idx < 0 or dst_idx < 0:
                raise ParseError("size must be positive and indices non-negative", lineno, path)
            problem = _check_record_roles(kind, src_role, dst_role, phase)
            if problem:
                raise ParseError(problem, lineno, path)
            if ts < prev:
                raise ParseError("timestamps out of order", lineno, path)
            prev = ts
            for col, v in zip(cols, (ts, src_role, src_idx, dst_role, dst_idx, size, kind, phase)):
                col.append(v)
    return Trace(*[np.array(c, dtype=np.int64) for c in cols])


# flat key=value scenario files ----------------------------------------------

def load_scenario_file(path, **overrides) -> ScenarioConfig:
    """Read a flat ``key=value`` scenario file (``#`` comments allowed)."""
    from .config import parse_kv_file, build_dataclass

    values = parse_kv_file(Path(path))
    values.update({k: str(v) for k, v in overrides.items()})
    return build_dataclass(ScenarioConfig, values, prefix="")
