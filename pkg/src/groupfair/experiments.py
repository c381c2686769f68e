"""Pairing experiments on individual-agent instances.

Every instance of individuals becomes many couple instances, one per way of
pairing its agents up (one agent stays alone when the count is odd).  For
each pairing we ask whether EF/EFX/EF1/PROP1 allocations exist and what the
two iterative-rounding variants achieve, then average per-instance fractions
and bootstrap the mean.

Oracle cells that run out of budget are "inconclusive" (``None``): they are
left out of the fractions and counted separately.
"""
from __future__ import annotations

import csv
import io
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import DiscreteAllocation, Instance, as_rational
from .instance_io import InstanceFormatError, load_instance, save_instance
from .iterative_rounding import EliminationPolicy, run_iterative_rounding_detailed
from .oracle import EF, EF1, EFX, PROP1, PROP2, BudgetExceeded, Predicate, search_allocation

CSV_COLUMNS = ("property", "mean", "ci_lo", "ci_hi", "n_instances")

ALGORITHMS = {"remove-all": EliminationPolicy.REMOVE_ALL, "remove-best": EliminationPolicy.REMOVE_BEST}
EXISTENCE = {"PROP1": PROP1, "EF1": EF1, "EFX": EFX, "EF": EF}
ACHIEVED = {"PROP2": PROP2, "PROP1": PROP1, "EF1": EF1, "EFX": EFX, "EF": EF}

# weaker axioms first, as in the bar chart
PROPERTIES = tuple([f"exists-{p}" for p in EXISTENCE]
                   + [f"{alg}-{p}" for alg in ALGORITHMS for p in ACHIEVED])


# --------------------------------------------------------------------------
# data

@dataclass(frozen=True)
class IndividualInstance:
    """Additive valuations of individuals: ``values[agent][good]``."""

    name: str
    values: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(as_rational(v) for v in row) for row in self.values)
        if len({len(r) for r in rows}) > 1:
            raise ValueError(f"{self.name}: agents value different numbers of goods")
        object.__setattr__(self, "values", rows)

    @property
    def num_agents(self) -> int:
        return len(self.values)

    @property
    def num_goods(self) -> int:
        return len(self.values[0]) if self.values else 0

    def grouped(self, pairing: "Pairing") -> Instance:
        return Instance(self.num_goods, [[self.values[a] for a in cell] for cell in pairing.cells])


@dataclass(frozen=True)
class Pairing:
    """Couples in order of their smallest member, plus at most one singleton."""

    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        members = sorted(a for c in self.cells for a in c)
        if members != list(range(len(members))):
            raise ValueError("a pairing must cover 0..N-1 exactly once")
        if any(len(c) not in (1, 2) for c in self.cells) or sum(len(c) == 1 for c in self.cells) > 1:
            raise ValueError("cells are couples plus at most one singleton")


def num_pairings(num_agents: int) -> int:
    """``(N - 1)!!`` for even N; ``N!!`` for odd N (the singleton is chosen too)."""
    return math.prod(range(num_agents - 1 + num_agents % 2, 0, -2))


def _unrank(num_agents: int, index: int) -> Pairing:
    # an odd count gets a phantom agent; whoever it is paired with is alone
    pool = list(range(num_agents + num_agents % 2))
    cells = []
    while pool:
        first = pool.pop(0)
        index, digit = divmod(index, len(pool))
        partner = pool.pop(digit)
        cells.append((first,) if partner == num_agents else (first, partner))
    if index:
        raise ValueError("pairing index out of range")
    return Pairing(tuple(sorted(cells)))


def generate_pairings(num_agents: int, limit: int = 1000, rng_seed: int | str = 0) -> list[Pairing]:
    """All pairings if there are at most ``limit``, else ``limit`` drawn without replacement."""
    if num_agents < 2:
        raise ValueError("need at least two agents")
    if limit < 1:
        raise ValueError("limit must be positive")
    count = num_pairings(num_agents)
    if count <= limit:
        picks = range(count)
    else:
        rng = random.Random(rng_seed)
        chosen: set[int] = set()
        while len(chosen) < limit:
            chosen.add(rng.randrange(count))
        picks = sorted(chosen)
    return [_unrank(num_agents, i) for i in picks]


def synth_spliddit_like(num_instances: int, rng_seed: int = 0) -> list[IndividualInstance]:
    """Random instances shaped like the public description of the Spliddit goods data.

    4 to 15 agents (about half exactly 4), 1 to 59 goods (median around 6),
    integer values summing to 1000 per agent and no good worthless to all.
    """
    rng = np.random.default_rng(rng_seed)
    agent_counts = np.arange(4, 16)
    agent_p = np.array([0.47, 0.15, 0.1, 0.07, 0.05, 0.04, 0.03, 0.03, 0.02, 0.02, 0.01, 0.01])
    out = []
    for idx in range(num_instances):
        n = int(rng.choice(agent_counts, p=agent_p / agent_p.sum()))
        m = int(np.clip(np.rint(rng.lognormal(math.log(6), 0.9)), 1, 59))
        rows = []
        for _ in range(n):
            w = rng.gamma(0.8, size=m)
            raw = 1000 * w / w.sum()
            row = np.floor(raw).astype(int)
            # largest remainders take the leftover units
            for j in np.argsort(-(raw - row), kind="stable")[:1000 - row.sum()]:
                row[j] += 1
            rows.append(row)
        vals = np.array(rows)
        for a in np.flatnonzero(vals.sum(axis=0) == 0):
            donor = int(np.argmax(vals[0]))
            vals[0, donor] -= 1
            vals[0, a] += 1
        out.append(IndividualInstance(f"synthetic-{idx:03d}", tuple(tuple(int(v) for v in r) for r in vals)))
    return out


def load_dataset(directory) -> list[IndividualInstance]:
    """Every ``*.json`` instance file in ``directory`` (sorted by name); all agents become individuals."""
    out = []
    for path in sorted(Path(directory).glob("*.json")):
        inst = load_instance(path)
        rows = tuple(row for group in inst.groups for row in group)
        if not rows:
            raise InstanceFormatError(f"{path}: no agents")
        out.append(IndividualInstance(path.stem, rows))
    return out


def save_dataset(dataset: Iterable[IndividualInstance], directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for item in dataset:
        inst = Instance(item.num_goods, [[row] for row in item.values])
        save_instance(inst, d / f"{item.name}.json", name=item.name)


# --------------------------------------------------------------------------
# evaluation

@dataclass(frozen=True)
class ExperimentConfig:
    limit: int = 1000                  # pairings per instance
    seed: int = 0
    oracle_budget: int = 10 ** 6       # evaluations per oracle cell
    milp_nodes: int | None = 2000      # MILP witness hunt before the full search; None disables it
    resamples: int = 10_000
    level: float = 0.95
    min_agents: int = 4
    max_agents: int | None = None
    min_goods: int = 1
    max_goods: int | None = None
    check_fpo: bool = False            # re-check the starting vertex of every rounding run
    workers: int = 1

    def accepts(self, item: IndividualInstance) -> bool:
        return (self.min_agents <= item.num_agents <= (self.max_agents or item.num_agents)
                and self.min_goods <= item.num_goods <= (self.max_goods or item.num_goods))


@dataclass(frozen=True)
class PairingRecord:
    instance: str
    pairing: Pairing
    values: dict          # property name -> True / False / None (inconclusive)


def _search(instance, pred: Predicate, cfg: ExperimentConfig, hints) -> bool | None:
    try:
        return search_allocation(instance, pred, cfg.oracle_budget, hints=hints,
                                 milp_nodes=cfg.milp_nodes).exists
    except BudgetExceeded:
        return None


def evaluate_pairing(item: IndividualInstance, pairing: Pairing, cfg: ExperimentConfig) -> PairingRecord:
    inst = item.grouped(pairing)
    values: dict = {}
    outputs: list[DiscreteAllocation] = []
    for alg, policy in ALGORITHMS.items():
        alloc = run_iterative_rounding_detailed(inst, policy, check_fpo=cfg.check_fpo).allocation
        outputs.append(alloc)
        for p, pred in ACHIEVED.items():
            values[f"{alg}-{p}"] = pred.holds(inst, alloc)

    # strongest first, so one witness can settle the weaker axioms
    ex = {"EF": None, "EFX": None, "EF1": None, "PROP1": None}
    ex["EF"] = _search(inst, EF, cfg, outputs)
    if ex["EF"]:
        ex["EFX"] = ex["EF1"] = ex["PROP1"] = True
    else:
        ex["EFX"] = _search(inst, EFX, cfg, outputs)
        if ex["EFX"]:
            ex["EF1"] = True
        else:
            ex["EF1"] = _search(inst, EF1, cfg, outputs)
        if ex["EF1"]:
            ex["PROP1"] = True
        else:
            ex["PROP1"] = _search(inst, PROP1, cfg, outputs)
    # downward: no EF1 (or no PROP1) rules out everything stronger
    if ex["PROP1"] is False:
        ex["EF1"] = False
    if ex["EF1"] is False:
        ex["EFX"] = ex["EF"] = False
    if ex["EFX"] is False:
        ex["EF"] = False
    for p in EXISTENCE:
        values[f"exists-{p}"] = ex[p]
    check_implications(values)
    return PairingRecord(item.name, pairing, values)


def check_implications(values: dict) -> None:
    """EF => EFX => EF1 => PROP1 among conclusive cells; achieved => exists."""
    chain = [values[f"exists-{p}"] for p in ("EF", "EFX", "EF1", "PROP1")]
    for strong, weak in zip(chain, chain[1:]):
        if strong is True and weak is not True or weak is False and strong is not False:
            raise AssertionError(f"existence cells break the implication chain: {chain}")
    for alg in ALGORITHMS:
        got = [values[f"{alg}-{p}"] for p in ("EF", "EFX", "EF1", "PROP1", "PROP2")]
        if any(s and not w for s, w in zip(got, got[1:])):
            raise AssertionError(f"{alg} cells break the implication chain: {got}")
        for p in EXISTENCE:
            if values[f"{alg}-{p}"] and values[f"exists-{p}"] is not True:
                raise AssertionError(f"{alg} achieved {p} but the oracle disagrees")


def _evaluate_instance(args) -> list[PairingRecord]:
    idx, item, cfg = args
    if item.num_agents < 2:
        return []
    pairings = generate_pairings(item.num_agents, cfg.limit, f"{cfg.seed}/{idx}")
    return [evaluate_pairing(item, p, cfg) for p in pairings]


# --------------------------------------------------------------------------
# statistics and report

def bootstrap_ci(samples: Sequence[float], level: float = 0.95, resamples: int = 10_000,
                 rng_seed=0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("bootstrap needs at least one sample")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    if np.all(x == x[0]):
        return float(x[0]), float(x[0])
    rng = np.random.default_rng(rng_seed)
    means = np.empty(resamples)
    step = max(1, 2_000_000 // x.size)
    for start in range(0, resamples, step):
        stop = min(resamples, start + step)
        means[start:stop] = x[rng.integers(0, x.size, size=(stop - start, x.size))].mean(axis=1)
    tail = (1 - level) / 2
    lo, hi = np.quantile(means, [tail, 1 - tail])
    return float(lo), float(hi)


@dataclass(frozen=True)
class PropertyRow:
    property: str
    mean: float
    ci_lo: float
    ci_hi: float
    n_instances: int
    inconclusive: int = 0           # pairings left out


@dataclass
class ExperimentReport:
    rows: list[PropertyRow]
    fractions: dict = field(default_factory=dict)   # property -> {instance: Fraction}
    records: list[PairingRecord] = field(default_factory=list, repr=False)
    metadata: dict = field(default_factory=dict)

    def row(self, prop: str) -> PropertyRow:
        return next(r for r in self.rows if r.property == prop)


def aggregate(records: Sequence[PairingRecord], cfg: ExperimentConfig) -> ExperimentReport:
    by_instance: dict[str, list[PairingRecord]] = {}
    for r in records:
        by_instance.setdefault(r.instance, []).append(r)
    rows, fractions = [], {}
    for k, prop in enumerate(PROPERTIES):
        fr, skipped = {}, 0
        for name, recs in by_instance.items():
            known = [r.values[prop] for r in recs if r.values[prop] is not None]
            skipped += len(recs) - len(known)
            if known:
                fr[name] = Fraction(sum(known), len(known))
        fractions[prop] = fr
        if not fr:
            continue
        mean = sum(fr.values(), Fraction(0)) / len(fr)
        lo, hi = bootstrap_ci([float(v) for v in fr.values()], cfg.level, cfg.resamples, [cfg.seed, k])
        m = float(mean)
        rows.append(PropertyRow(prop, m, min(lo, m), max(hi, m), len(fr), skipped))
    meta = {"seed": cfg.seed, "limit": cfg.limit, "oracle_budget": cfg.oracle_budget,
            "milp_nodes": cfg.milp_nodes, "resamples": cfg.resamples, "level": cfg.level,
            "instances": len(by_instance), "pairings": len(records),
            "inconclusive": {r.property: r.inconclusive for r in rows}}
    return ExperimentReport(rows, fractions, list(records), meta)


def run_pairing_experiment(dataset: Sequence[IndividualInstance], config: ExperimentConfig | None = None,
                           progress=None) -> ExperimentReport:
    cfg = config or ExperimentConfig()
    jobs = [(i, item, cfg) for i, item in enumerate(dataset) if cfg.accepts(item)]
    records: list[PairingRecord] = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = pool.map(_evaluate_instance, jobs)
            for (i, item, _), recs in zip(jobs, results):
                records.extend(recs)
                if progress:
                    progress(item, recs)
    else:
        for job in jobs:
            recs = _evaluate_instance(job)
            records.extend(recs)
            if progress:
                progress(job[1], recs)
    return aggregate(records, cfg)


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([r.property, f"{r.mean:.6f}", f"{r.ci_lo:.6f}", f"{r.ci_hi:.6f}", r.n_instances])
    return buf.getvalue()


def parse_report_csv(text: str) -> list[PropertyRow]:
    """Read back (and validate) a report CSV."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_COLUMNS:
        raise ValueError(f"bad header {header}")
    rows = []
    for rec in reader:
        if len(rec) != len(CSV_COLUMNS):
            raise ValueError(f"bad row {rec}")
        name, mean, lo, hi, count = rec
        row = PropertyRow(name, float(mean), float(lo), float(hi), int(count))
        if not (0 <= row.ci_lo <= row.mean <= row.ci_hi <= 1) or row.n_instances < 1:
            raise ValueError(f"row out of range: {rec}")
        rows.append(row)
    return rows


def _group_of(prop: str) -> str:
    return "exists" if prop.startswith("exists-") else prop.rsplit("-", 1)[0]


def report_svg(report: ExperimentReport, width: int = 720, height: int = 360) -> str:
    """Grouped bars (existence, then each algorithm) with CI whiskers."""
    left, right, top, bottom = 50, 20, 30, 70
    plot_w, plot_h = width - left - right, height - top - bottom
    colors = {"exists": "#4c72b0", "remove-all": "#dd8452", "remove-best": "#55a868"}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']

    def y(v: float) -> float:
        return top + plot_h * (1 - v)

    for t in range(0, 11, 2):
        v = t / 10
        out.append(f'<line x1="{left}" y1="{y(v):.2f}" x2="{left + plot_w}" y2="{y(v):.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y(v) + 4:.2f}" text-anchor="end">{int(v * 100)}%</text>')
    rows = report.rows
    if rows:
        gap, groups = 12, []
        for r in rows:
            if not groups or groups[-1][0] != _group_of(r.property):
                groups.append((_group_of(r.property), []))
            groups[-1][1].append(r)
        bar = (plot_w - gap * (len(groups) + 1)) / len(rows)
        x = left + gap
        for name, members in groups:
            for r in members:
                label = r.property.rsplit("-", 1)[1]
                cx = x + bar / 2
                out.append(f'<rect x="{x + 1:.2f}" y="{y(r.mean):.2f}" width="{bar - 2:.2f}" '
                           f'height="{y(0) - y(r.mean):.2f}" fill="{colors.get(name, "#888")}"/>')
                out.append(f'<line x1="{cx:.2f}" y1="{y(r.ci_lo):.2f}" x2="{cx:.2f}" y2="{y(r.ci_hi):.2f}" '
                           f'stroke="black"/>')
                for v in (r.ci_lo, r.ci_hi):
                    out.append(f'<line x1="{cx - 3:.2f}" y1="{y(v):.2f}" x2="{cx + 3:.2f}" y2="{y(v):.2f}" '
                               f'stroke="black"/>')
                out.append(f'<text x="{cx:.2f}" y="{y(0) + 14:.2f}" text-anchor="middle">{label}</text>')
                x += bar
            mid = x - bar * len(members) / 2
            out.append(f'<text x="{mid:.2f}" y="{y(0) + 32:.2f}" text-anchor="middle" '
                       f'font-weight="bold">{name}</text>')
            x += gap
    out.append(f'<line x1="{left}" y1="{y(0):.2f}" x2="{left + plot_w}" y2="{y(0):.2f}" stroke="black"/>')
    out.append(f'<text x="{width / 2:.0f}" y="{top - 10}" text-anchor="middle">'
               f'Fraction of pairings, mean over instances ({len(report.fractions.get(PROPERTIES[0], {}))} '
               f'instances)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report: ExperimentReport, path, format: str = "csv") -> None:
    if format == "csv":
        text = report_csv(report)
    elif format in ("svg", "svg-bar-chart"):
        text = report_svg(report)
    elif format == "json":
        text = json.dumps({"rows": [asdict(r) for r in report.rows], "metadata": report.metadata},
                          indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown report format {format!r}")
    Path(path).write_text(text)
