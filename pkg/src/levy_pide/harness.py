"""Convergence studies, report serialization and timing regression.

Config files are flat ``key = value`` text, one entry per line, ``#`` starts a
comment. Recognised keys::

    model.kind          nig | gh | meixner
    model.alpha, model.beta, model.delta, model.mu, model.lam   (NIG / GH)
    model.a, model.b, model.d, model.m                          (Meixner)
    market.spot, market.strike, market.rate, market.dividend,
    market.sigma, market.maturity, market.dt
    payoff.kind         call | put | digital
    grid.width          log-domain width of the uniform grid
    grid.nodes          comma-separated node counts, e.g. 51,101,201
    scheme.method       expm | pade | product | interp
    scheme.p            Meixner truncation order
    scheme.boundary     truncate | shift
    reference.kind      finest | cos | value
    reference.value     used when reference.kind = value
    cos.terms, cos.width

Unknown keys are rejected.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .cos import COSConfig, cos_price
from .errors import ConvergenceError, DomainError, LevyPideError
from .params import GHParams, MarketParams, MeixnerParams, NIGParams, Payoff, validate
from .splitting import TABLE_WIDTH, experiment_price

TABLE_NODES = (51, 101, 201, 401, 801, 1601)

_MODEL_KEYS = {
    "nig": ("alpha", "beta", "delta", "mu"),
    "gh": ("lam", "alpha", "beta", "delta", "mu"),
    "meixner": ("a", "b", "d", "m"),
}
_MODEL_TYPES = {"nig": NIGParams, "gh": GHParams, "meixner": MeixnerParams}


@dataclass
class StudyConfig:
    model: object
    market: MarketParams
    payoff_kind: str = "call"
    width: float = TABLE_WIDTH
    nodes: tuple = TABLE_NODES
    method: str | None = None
    p: int = 10
    boundary: str = "truncate"
    reference_kind: str = "finest"
    reference_value: float | None = None
    cos_terms: int = 256
    cos_width: float = 10.0

    @property
    def payoff(self) -> Payoff:
        return Payoff(self.payoff_kind, self.market.strike)

    def ladder(self):
        """(N, h) pairs with ``h = width / (N - 1)``."""
        return [(n, self.width / (n - 1)) for n in self.nodes]

    def to_mapping(self) -> dict:
        kind = self.model.kind
        out = {"model.kind": kind}
        for key in _MODEL_KEYS[kind]:
            out[f"model.{key}"] = repr(float(getattr(self.model, key)))
        for f in fields(MarketParams):
            out[f"market.{f.name}"] = repr(float(getattr(self.market, f.name)))
        out["payoff.kind"] = self.payoff_kind
        out["grid.width"] = repr(float(self.width))
        out["grid.nodes"] = ",".join(str(n) for n in self.nodes)
        out["scheme.method"] = self.method or "default"
        out["scheme.p"] = str(self.p)
        out["scheme.boundary"] = self.boundary
        out["reference.kind"] = self.reference_kind
        if self.reference_value is not None:
            out["reference.value"] = repr(float(self.reference_value))
        out["cos.terms"] = str(self.cos_terms)
        out["cos.width"] = repr(float(self.cos_width))
        return out

    @classmethod
    def from_mapping(cls, kv: dict) -> "StudyConfig":
        kv = dict(kv)
        kind = kv.pop("model.kind", None)
        if kind not in _MODEL_KEYS:
            raise DomainError(f"model.kind must be one of {sorted(_MODEL_KEYS)}, got {kind!r}")
        margs = {}
        for key in _MODEL_KEYS[kind]:
            raw = kv.pop(f"model.{key}", None)
            if raw is None:
                if key in ("mu", "m"):
                    continue
                raise DomainError(f"missing model.{key}")
            margs[key] = float(raw)
        model = validate(_MODEL_TYPES[kind](**margs))
        mk = {}
        for f in fields(MarketParams):
            raw = kv.pop(f"market.{f.name}", None)
            if raw is None:
                raise DomainError(f"missing market.{f.name}")
            mk[f.name] = float(raw)
        market = validate(MarketParams(**mk))
        cfg = cls(model=model, market=market)
        conv = {
            "payoff.kind": ("payoff_kind", str),
            "grid.width": ("width", float),
            "grid.nodes": ("nodes", lambda s: tuple(int(x) for x in s.split(",") if x.strip())),
            "scheme.method": ("method", lambda s: None if s == "default" else s),
            "scheme.p": ("p", int),
            "scheme.boundary": ("boundary", str),
            "reference.kind": ("reference_kind", str),
            "reference.value": ("reference_value", float),
            "cos.terms": ("cos_terms", int),
            "cos.width": ("cos_width", float),
        }
        for key, raw in kv.items():
            if key not in conv:
                raise DomainError(f"unknown config key {key!r}")
            attr, fn = conv[key]
            try:
                setattr(cfg, attr, fn(raw))
            except ValueError as exc:
                raise DomainError(f"bad value for {key}: {raw!r}") from exc
        if cfg.reference_kind not in ("finest", "cos", "value"):
            raise DomainError(f"reference.kind must be finest, cos or value, got {cfg.reference_kind!r}")
        if cfg.reference_kind == "value" and cfg.reference_value is None:
            raise DomainError("reference.kind = value needs reference.value")
        return cfg


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise DomainError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path) -> StudyConfig:
    return StudyConfig.from_mapping(parse_kv(Path(path).read_text()))


# market data shared by every table
TABLE_MARKET = MarketParams(spot=100.0, strike=100.0, rate=0.05, dividend=0.0, sigma=0.15,
                            maturity=0.01, dt=0.01)

PRESETS = {
    "nig-negskew": StudyConfig(NIGParams(10.0, -5.7, 0.2), TABLE_MARKET, method="expm"),
    "nig-posskew": StudyConfig(NIGParams(10.0, 5.7, 0.2), TABLE_MARKET, method="expm"),
    "gh-lowlam": StudyConfig(GHParams(-1.0, 10.0, -5.7, 0.2), TABLE_MARKET),
    "gh-highlam": StudyConfig(GHParams(1.0, 10.0, -5.7, 0.2), TABLE_MARKET),
    "meixner-product": StudyConfig(MeixnerParams(0.04, -0.32754, 52.0), TABLE_MARKET, method="product",
                                  nodes=(51, 101, 201, 401, 801)),
    "meixner-interp": StudyConfig(MeixnerParams(0.04, -0.32754, 52.0), TABLE_MARKET, method="interp"),
}
PRESETS["nig"] = PRESETS["nig-negskew"]
PRESETS["gh"] = PRESETS["gh-lowlam"]
PRESETS["meixner"] = PRESETS["meixner-interp"]


def preset(name: str) -> StudyConfig:
    if name not in PRESETS:
        raise DomainError(f"unknown model preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(PRESETS[name])


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    h: float
    price: float
    order: float  # nan where undefined
    wall_ms: float


def observed_orders(prices, reference: float) -> list[float]:
    """``log2((C_i - C*) / (C_{i+1} - C*))`` placed on row ``i+1``; the first row is NaN."""
    out = [math.nan]
    for a, b in zip(prices[:-1], prices[1:]):
        num, den = a - reference, b - reference
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = num / den if den != 0 else math.nan
        out.append(math.log2(ratio) if ratio > 0 and math.isfinite(ratio) else math.nan)
    return out


@dataclass
class ConvergenceReport:
    rows: list
    reference: float
    reference_source: str
    config: dict = field(default_factory=dict)

    @classmethod
    def from_prices(cls, nodes, hs, prices, reference: float, source: str,
                    wall_ms=None, config: dict | None = None) -> "ConvergenceReport":
        wall_ms = [math.nan] * len(prices) if wall_ms is None else wall_ms
        orders = observed_orders(list(prices), reference)
        rows = [ConvergenceRow(int(n), float(h), float(c), float(o), float(t))
                for n, h, c, o, t in zip(nodes, hs, prices, orders, wall_ms)]
        return cls(rows, float(reference), source, dict(config or {}))

    @property
    def prices(self):
        return [r.price for r in self.rows]

    @property
    def orders(self):
        return [r.order for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        for key in sorted(self.config):
            buf.write(f"# {key} = {self.config[key]}\n")
        buf.write(f"# reference.price = {self.reference!r}\n")
        buf.write(f"# reference.source = {self.reference_source}\n")
        buf.write("N,h,price,order,wall_ms\n")
        for r in self.rows:
            buf.write(f"{r.n},{r.h!r},{r.price!r},{r.order!r},{r.wall_ms!r}\n")
        return buf.getvalue()

    def write(self, path) -> None:
        Path(path).write_bytes(self.to_csv().encode("ascii"))

    @classmethod
    def from_csv(cls, text: str) -> "ConvergenceReport":
        config, rows = {}, []
        ref, source = math.nan, ""
        header_seen = False
        for line in text.split("\n"):
            if not line:
                continue
            if line.startswith("#"):
                key, value = (s.strip() for s in line[1:].split("=", 1))
                if key == "reference.price":
                    ref = float(value)
                elif key == "reference.source":
                    source = value
                else:
                    config[key] = value
                continue
            if not header_seen:
                if line != "N,h,price,order,wall_ms":
                    raise DomainError(f"unexpected CSV header {line!r}")
                header_seen = True
                continue
            n, h, c, o, t = line.split(",")
            rows.append(ConvergenceRow(int(n), float(h), float(c), float(o), float(t)))
        return cls(rows, ref, source, config)

    @classmethod
    def read(cls, path) -> "ConvergenceReport":
        return cls.from_csv(Path(path).read_bytes().decode("ascii"))


def _with_context(exc: LevyPideError, context: str) -> LevyPideError:
    msg = f"{context}: {exc}"
    if isinstance(exc, ConvergenceError):
        return ConvergenceError(msg, exc.iterations, exc.residual)
    return type(exc)(msg)


def run_convergence(cfg: StudyConfig) -> ConvergenceReport:
    """Run the one-step experiment over the configured ladder and compute observed orders."""
    nodes, hs, prices, times = [], [], [], []
    for n, h in cfg.ladder():
        t0 = time.perf_counter()
        try:
            price = experiment_price(cfg.model, cfg.market, h, cfg.width, cfg.method, cfg.p,
                                     cfg.payoff, cfg.boundary)
        except LevyPideError as exc:
            raise _with_context(exc, f"{cfg.model.kind} N={n} h={h:.7g}") from exc
        times.append(1e3 * (time.perf_counter() - t0))
        nodes.append(n)
        hs.append(h)
        prices.append(price)
    if cfg.reference_kind == "finest":
        ref, source = prices[-1], "finest"
    elif cfg.reference_kind == "cos":
        ref = cos_price(cfg.model, cfg.market, cfg.payoff, cfg.market.maturity,
                        COSConfig(cfg.cos_terms, cfg.cos_width))
        source = "cos"
    else:
        ref, source = float(cfg.reference_value), "value"
    return ConvergenceReport.from_prices(nodes, hs, prices, ref, source, times, cfg.to_mapping())


@dataclass(frozen=True)
class TimingFit:
    per_step: list  # log2 of successive timing-increment ratios
    slope: float  # least-squares slope of log t against log N
    advisory: bool = True


def timing_regression(times, nodes=None) -> TimingFit:
    """Complexity estimates from wall times on a node-doubling ladder.

    Per step: ``log2((t_{i+2} - t_{i+1}) / (t_{i+1} - t_i))``, which is 1 for
    ``t = cN`` under doubling. The global slope is a log-log least-squares fit
    (0 for constant timings). Both are noisy and reported as advisory.
    """
    if isinstance(times, ConvergenceReport):
        nodes = [r.n for r in times.rows]
        times = [r.wall_ms for r in times.rows]
    t = np.asarray(times, dtype=float)
    if t.size < 3:
        raise DomainError("timing regression needs at least 3 timed rows")
    nodes = np.asarray(nodes if nodes is not None else 2.0 ** np.arange(t.size), dtype=float)
    per_step = []
    for i in range(t.size - 2):
        d0, d1 = t[i + 1] - t[i], t[i + 2] - t[i + 1]
        per_step.append(math.log2(d1 / d0) if d0 > 0 and d1 > 0 else math.nan)
    slope = float(np.polyfit(np.log(nodes), np.log(t), 1)[0]) if np.all(t > 0) else math.nan
    return TimingFit(per_step, slope)
