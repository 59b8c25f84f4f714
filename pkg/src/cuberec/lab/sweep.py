"""Experiment sweeps over (d, r, m) producing one CSV row per battery function."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..adversary import certify_lower_bound, estimate_K
from ..core import ClassKind, CubeRecError, GridSpec, SampleTable, SmoothnessClass, check_point_budget
from ..designs import build_recovery_design
from ..envelopes import envelope_closed, envelope_recursive
from ..recover import fit_taylor_models, sup_error
from .battery import BATTERY_IDS, battery

CSV_HEADER = (
    "d", "r", "m", "kind", "function", "n_points", "h", "sup_estimate",
    "envelope_closed", "envelope_recursive", "lower_cert", "K_hat", "seed",
)


@dataclass
class SweepConfig:
    d_list: list[int]
    r_list: list[int]
    m_list: list[int]
    kind: ClassKind = ClassKind.STANDARD
    probe_m: int = 16
    seed: int = 0
    output_path: str = "sweep.csv"
    functions: list[str] = field(default_factory=lambda: list(BATTERY_IDS))

    def __post_init__(self) -> None:
        self.kind = ClassKind.parse(self.kind)
        for name in ("d_list", "r_list", "m_list", "functions"):
            if not getattr(self, name):
                raise ValueError(f"SweepConfig.{name} must be nonempty")
        if min(self.d_list) < 1 or min(self.r_list) < 1 or min(self.m_list) < 1:
            raise ValueError("d, r and m values must all be positive")
        for fid in self.functions:
            battery(fid, 1, 1)
        check_point_budget((max(self.m_list) + 1) ** max(self.d_list), "sweep grid")
        check_point_budget((self.probe_for(max(self.m_list)) + 1) ** max(self.d_list), "sweep probe grid")

    def probe_for(self, m: int) -> int:
        # the error search needs at least two probe cells per grid cell
        return max(self.probe_m, 2 * m)

    @classmethod
    def from_json(cls, data: dict) -> "SweepConfig":
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "SweepConfig":
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_json(self) -> dict:
        out = asdict(self)
        out["kind"] = self.kind.value
        return out


class SweepError(CubeRecError):
    def __init__(self, d: int, r: int, m: int, cause: Exception):
        super().__init__(f"sweep failed at (d={d}, r={r}, m={m}): {cause}")
        self.tuple = (d, r, m)
        self.cause = cause


def _fmt(x: float) -> str:
    return repr(float(x))


def sweep_rows(config: SweepConfig) -> list[dict]:
    rows = []
    for d in sorted(config.d_list):
        for r in sorted(config.r_list):
            K_hat = estimate_K(r, seed=config.seed)
            cls = SmoothnessClass(r, d, config.kind)
            for m in sorted(config.m_list):
                try:
                    rows.extend(_tuple_rows(config, cls, m, K_hat))
                except Exception as exc:
                    raise SweepError(d, r, m, exc) from exc
    return rows


def _tuple_rows(config: SweepConfig, cls: SmoothnessClass, m: int, K_hat: float) -> list[dict]:
    d, r = cls.d, cls.r
    design = build_recovery_design(GridSpec(m, d), r)
    probe = config.probe_for(m)
    lower = certify_lower_bound(design.all_points, cls, K_hat, probe)
    env_c = envelope_closed(d, r, m, config.kind)
    env_r = envelope_recursive(d, r, m, config.kind)
    out = []
    for fid in config.functions:
        fn = battery(fid, r, d)
        samples = SampleTable.from_function(design.all_points, fn, provenance=fid)
        model = fit_taylor_models(design, samples)
        rep = sup_error(model, fn, probe)
        out.append({
            "d": d, "r": r, "m": m, "kind": config.kind.value, "function": fid,
            "n_points": design.n_points, "h": design.h, "sup_estimate": rep.sup_estimate,
            "envelope_closed": env_c, "envelope_recursive": env_r, "lower_cert": lower,
            "K_hat": K_hat, "seed": config.seed,
        })
    return out


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow([_fmt(row[k]) if isinstance(row[k], float) else row[k] for k in CSV_HEADER])
    return buf.getvalue()


def run_sweep(config: SweepConfig, write: bool = True) -> str:
    """Run the sweep and return (and by default write) the CSV text."""
    text = rows_to_csv(sweep_rows(config))
    if write:
        Path(config.output_path).write_text(text)
    return text
