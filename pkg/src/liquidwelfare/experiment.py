"""Seeded batch experiments written as CSV."""
from __future__ import annotations

import csv
import io as _io
import time
from dataclasses import dataclass, field

import numpy as np

from .audit import GENERATORS, ratio
from .clinching import clinching_auction
from .errors import LiquidWelfareError, ParseError
from .io import fmt
from .mechanisms import get
from .model import liquid_welfare
from .uniform_price import uniform_price_auction

COLUMNS = ["kind", "instance", "seed", "n", "mechanism", "lw", "lw_opt", "ratio",
           "revenue", "dominance_gap", "runtime_us"]


@dataclass
class ExperimentConfig:
    mechanisms: list[str]
    count: int = 100
    seed: int = 0
    n: tuple[int, int] = (2, 8)
    generator: str = "additive"
    resolution: int = 1000
    output: str | None = None
    timing: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict) or not d.get("mechanisms"):
            raise ParseError("experiment config needs a non-empty \"mechanisms\" list")
        n = d.get("n", [2, 8])
        n = (int(n), int(n)) if isinstance(n, (int, float)) else (int(n[0]), int(n[1]))
        if n[0] < 1 or n[1] < n[0]:
            raise ParseError(f"bad n range {n}")
        gen = d.get("generator", "additive")
        if gen not in GENERATORS:
            raise ParseError(f"unknown generator {gen!r}; known: {', '.join(GENERATORS)}")
        for m in d["mechanisms"]:
            if get(m).problem_kind == "matching":
                raise ParseError(f"{m} runs on matching markets, not on generated instances")
        return cls(list(d["mechanisms"]), int(d.get("count", 100)), int(d.get("seed", 0)), n, gen,
                   int(d.get("resolution", 1000)), d.get("output"), bool(d.get("timing", False)))


def run_experiment(cfg: ExperimentConfig) -> str:
    """CSV text: one row per (instance, mechanism), then one summary row per mechanism.

    ``runtime_us`` stays empty unless ``timing`` is set, so that identical
    configs give byte-identical files.
    """
    mechs = [get(m) for m in cfg.mechanisms]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    worst = {m.name: 1.0 for m in mechs}
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.count)
    for idx, child in enumerate(children):
        inst_seed = int(child.generate_state(1)[0])
        rng = np.random.default_rng(child)
        n = int(rng.integers(cfg.n[0], cfg.n[1] + 1))
        inst = GENERATORS[cfg.generator](rng, n)
        gap = ""
        if inst.is_additive:
            gap = fmt(liquid_welfare(inst, uniform_price_auction(inst).allocation)
                      - liquid_welfare(inst, clinching_auction(inst)[0].allocation))
        opt = None
        for m in mechs:
            t0 = time.perf_counter()
            try:
                out = m.run(inst, inst_seed) if m.seeded else m.run(inst)
            except LiquidWelfareError:
                w.writerow(["row", idx, inst_seed, n, m.name, "", "", "", "", gap, ""])
                continue
            elapsed = (time.perf_counter() - t0) * 1e6
            if opt is None or m.problem_kind == "indivisible":
                mopt = m.optimum(inst, cfg.resolution)
                if m.problem_kind != "indivisible":
                    opt = mopt
            else:
                mopt = opt
            lw = m.liquid_welfare(inst, out)
            r = ratio(mopt, lw)
            worst[m.name] = max(worst[m.name], r)
            w.writerow(["row", idx, inst_seed, n, m.name, fmt(lw), fmt(mopt), fmt(r),
                        fmt(out.revenue), gap, f"{elapsed:.0f}" if cfg.timing else ""])
    for m in mechs:
        w.writerow(["summary", "", cfg.seed, "", m.name, "", "", fmt(worst[m.name]), "", "", ""])
    return buf.getvalue()
