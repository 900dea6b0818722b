"""Root-node statistics and multi-scheme comparison tables.

Geometric means use floors so that zero gaps or instant solves do not
collapse the mean: gaps below ``GAP_FLOOR`` count as ``GAP_FLOOR`` and
times below ``TIME_FLOOR`` as ``TIME_FLOOR``.  Unsolved runs count with
the full time budget.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from scipy.stats import gmean

from .bnb import SolveOptions, SolveReport, solve
from .exceptions import NumericalFailure, ResourceLimit
from .lp import OPTIMAL, solve_lp
from .problem import PolynomialProgram
from .reduction import DEFAULT_CAP, reduce_program
from .rlt import build_relaxation

GAP_FLOOR = 1e-4
TIME_FLOOR = 0.1
ORDER_TOL = 1e-6
SIZE_CHAIN = ("quadrlt", "s1", "s2", "s3")
BOUND_CHAIN = ("s1", "s2", "s3")


@dataclass
class RootStats:
    scheme: str
    d: int
    nvars: int | None
    ncons: int | None
    root_value: float | None
    build_time: float
    solve_time: float
    status: str = OPTIMAL

    @property
    def available(self) -> bool:
        return self.nvars is not None


def root_stats(p: PolynomialProgram, scheme: str, d: int = 2, cap: int = DEFAULT_CAP, backend: str | None = None) -> RootStats:
    """Size and root LP value of one scheme's relaxation."""
    t0 = time.perf_counter()
    rel = build_relaxation(reduce_program(p, scheme, d, cap))
    t1 = time.perf_counter()
    sol = solve_lp(rel, backend=backend)
    t2 = time.perf_counter()
    value = sol.objective if sol.status == OPTIMAL else None
    return RootStats(scheme, d, rel.n_vars, rel.n_cons, value, t1 - t0, t2 - t1, sol.status)


def root_stats_or_na(p, scheme, d=2, cap=DEFAULT_CAP, backend=None) -> RootStats:
    try:
        return root_stats(p, scheme, d, cap, backend)
    except ResourceLimit:
        return RootStats(scheme, d, None, None, None, 0.0, 0.0, "ResourceLimit")
    except NumericalFailure:
        # sizes are still meaningful; only the bound is missing
        rel = build_relaxation(reduce_program(p, scheme, d, cap))
        return RootStats(scheme, d, rel.n_vars, rel.n_cons, None, 0.0, 0.0, "NumericalFailure")


def config_label(scheme: str, d: int) -> str:
    return scheme if scheme == "baseline" else f"{scheme}(d={d})"


def _gmean_floor(values: Sequence[float], floor: float) -> float:
    return float(gmean([max(v, floor) for v in values]))


@dataclass
class ComparisonRow:
    config: str
    scheme: str
    d: int
    gmean_gap: float | None
    gmean_time: float
    solved: int
    runs: int
    pct_diff: dict = field(default_factory=dict)
    best_count: dict = field(default_factory=dict)


@dataclass
class Comparison:
    rows: list[ComparisonRow]
    runs: list[dict]
    root: list[dict]
    frequencies: dict
    ordering_violations: list[str]
    reference: str | None
    metadata: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "rows": [asdict(r) for r in self.rows],
                "runs": self.runs,
                "root": self.root,
                "frequencies": self.frequencies,
                "ordering_violations": self.ordering_violations,
                "reference": self.reference,
                "metadata": self.metadata,
            },
            indent=2,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        metrics = ("nvars", "ncons", "root_value")
        w.writerow(
            ["config", "gmean_gap", "gmean_time", "solved", "runs"]
            + [f"pctdiff_{m}" for m in metrics]
            + [f"count_{m}" for m in metrics]
        )
        for r in self.rows:
            w.writerow(
                [r.config, _fmt(r.gmean_gap), _fmt(r.gmean_time), r.solved, r.runs]
                + [_fmt(r.pct_diff.get(m)) for m in metrics]
                + [r.best_count.get(m, 0) for m in metrics]
            )
        return buf.getvalue()

    def to_text(self) -> str:
        head = ["Config", "Gap", "Time (s)", "Solved", "%Diff Nvars", "%Diff Ncons", "%Diff Root", "Count Root"]
        body = [
            [
                r.config,
                _fmt(r.gmean_gap, ".2e"),
                _fmt(r.gmean_time, ".2f"),
                f"{r.solved}/{r.runs}",
                _fmt(r.pct_diff.get("nvars"), ".1f"),
                _fmt(r.pct_diff.get("ncons"), ".1f"),
                _fmt(r.pct_diff.get("root_value"), ".1f"),
                str(r.best_count.get("root_value", 0)),
            ]
            for r in self.rows
        ]
        widths = [max(len(x) for x in col) for col in zip(head, *body)]
        line = lambda cells: "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths)))
        out = [line(head), line(["-" * w for w in widths])] + [line(b) for b in body]
        out.append("")
        out.append(f"%Diff reference: {self.reference or 'NA'}")
        for k, v in self.frequencies.items():
            out.append(f"{k}: {_fmt(v, '.1%')}")
        out.append(f"ordering violations: {len(self.ordering_violations)}")
        out.append(f"gmean floors: gap {GAP_FLOOR:g}, time {TIME_FLOOR:g} s; unsolved runs count as the budget")
        return "\n".join(out) + "\n"


def _fmt(v, spec: str = ".6g") -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "NA"
    return format(v, spec)


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return sum(vals) / len(vals) if vals else None


def ordering_violations(stats: dict[tuple[str, int], RootStats], name: str = "") -> list[str]:
    """Size and root-bound orderings that fail for one instance.

    ``stats`` maps ``(scheme, d)`` to root statistics; unavailable
    entries are skipped.
    """
    out = []
    ds = sorted({d for s, d in stats if s != "baseline"})
    base = stats.get(("baseline", 0))
    for d in ds:
        chain = [stats.get((s, d)) for s in SIZE_CHAIN]
        for metric in ("nvars", "ncons"):
            for a, b in zip(chain, chain[1:]):
                if a and b and a.available and b.available and getattr(a, metric) > getattr(b, metric):
                    out.append(f"{name} d={d} {metric}: {a.scheme}={getattr(a, metric)} > {b.scheme}={getattr(b, metric)}")
        s2 = stats.get(("s2", d))
        if base and s2 and base.available and s2.available and base.nvars > s2.nvars:
            out.append(f"{name} d={d} nvars: baseline={base.nvars} > s2={s2.nvars}")
        bchain = [stats.get((s, d)) for s in BOUND_CHAIN]
        for a, b in zip(bchain, bchain[1:]):
            if a and b and a.root_value is not None and b.root_value is not None and a.root_value > b.root_value + ORDER_TOL * max(1.0, abs(b.root_value)):
                out.append(f"{name} d={d} root: {a.scheme}={a.root_value:.9g} > {b.scheme}={b.root_value:.9g}")
        if base and s2 and base.root_value is not None and s2.root_value is not None:
            if s2.root_value > base.root_value + ORDER_TOL * max(1.0, abs(base.root_value)):
                out.append(f"{name} d={d} root: s2={s2.root_value:.9g} > baseline={base.root_value:.9g}")
    return out


def compare(
    instances: Sequence[tuple[str, PolynomialProgram]],
    configs: Sequence[tuple[str, int]],
    budget: float = 3600.0,
    rel_gap: float = 1e-3,
    cap: int = DEFAULT_CAP,
    backend: str | None = None,
    node_limit: int | None = None,
) -> Comparison:
    """Solve every instance with every ``(scheme, d)`` configuration."""
    if not instances or not configs:
        raise ValueError("compare needs at least one instance and one configuration")
    configs = [("baseline", 0) if s == "baseline" else (s, d) for s, d in configs]
    configs = list(dict.fromkeys(configs))
    runs: list[dict] = []
    root: list[dict] = []
    per_instance: list[dict[tuple[str, int], RootStats]] = []
    reports: dict[tuple[str, int], list[SolveReport | None]] = {c: [] for c in configs}

    for name, prog in instances:
        stats: dict[tuple[str, int], RootStats] = {}
        for scheme, d in configs:
            label = config_label(scheme, d)
            st = root_stats_or_na(prog, scheme, max(d, 2), cap, backend)
            stats[(scheme, d)] = st
            root.append({"instance": name, "config": label, **asdict(st)})
            if not st.available:
                reports[(scheme, d)].append(None)
                runs.append({"instance": name, "config": label, "status": "ResourceLimit", "gap": None, "time": budget})
                continue
            opts = SolveOptions(scheme=scheme, degree=max(d, 2), time_limit=budget, rel_gap=rel_gap, cap=cap, backend=backend, node_limit=node_limit)
            rep = solve(prog, opts)
            reports[(scheme, d)].append(rep)
            runs.append(
                {
                    "instance": name,
                    "config": label,
                    "status": rep.status,
                    "gap": rep.gap,
                    "time": rep.wall_time,
                    "nodes": rep.nodes,
                    "lp_failures": rep.lp_failures,
                    "upper_bound": rep.upper_bound,
                    "lower_bound": rep.lower_bound if math.isfinite(rep.lower_bound) else None,
                }
            )
        per_instance.append(stats)

    # %Diff reference: baseline, else scheme 1 at the smallest degree
    reference = None
    if ("baseline", 0) in configs and any(s[("baseline", 0)].available for s in per_instance):
        reference = ("baseline", 0)
    else:
        s1 = sorted(c for c in configs if c[0] == "s1")
        if s1:
            reference = s1[0]

    def metric_mean(cfg, metric):
        return _mean([getattr(s[cfg], metric) for s in per_instance])

    rows = []
    for cfg in configs:
        reps = reports[cfg]
        gaps = [r.gap for r in reps if r is not None and r.gap is not None]
        times = [r.wall_time if (r is not None and r.solved) else budget for r in reps]
        row = ComparisonRow(
            config=config_label(*cfg),
            scheme=cfg[0],
            d=cfg[1],
            gmean_gap=_gmean_floor(gaps, GAP_FLOOR) if gaps else None,
            gmean_time=_gmean_floor(times, TIME_FLOOR),
            solved=sum(1 for r in reps if r is not None and r.solved),
            runs=len(reps),
        )
        for metric in ("nvars", "ncons", "root_value"):
            mine = metric_mean(cfg, metric)
            ref = metric_mean(reference, metric) if reference else None
            row.pct_diff[metric] = 100.0 * (mine - ref) / abs(ref) if mine is not None and ref not in (None, 0) else None
        rows.append(row)

    # strict-best counts: smaller sizes, larger root bounds
    for metric, better in (("nvars", min), ("ncons", min), ("root_value", max)):
        for stats in per_instance:
            vals = {c: getattr(stats[c], metric) for c in configs if getattr(stats[c], metric) is not None}
            if not vals:
                continue
            best = better(vals.values())
            winners = [c for c, v in vals.items() if abs(v - best) <= ORDER_TOL * max(1.0, abs(best))]
            if len(winners) == 1:
                row = rows[configs.index(winners[0])]
                row.best_count[metric] = row.best_count.get(metric, 0) + 1

    violations = []
    for (name, _), stats in zip(instances, per_instance):
        violations.extend(ordering_violations(stats, name))

    return Comparison(
        rows=rows,
        runs=runs,
        root=root,
        frequencies=informational_frequencies(per_instance),
        ordering_violations=violations,
        reference=config_label(*reference) if reference else None,
        metadata={
            "budget": budget,
            "rel_gap": rel_gap,
            "gap_floor": GAP_FLOOR,
            "time_floor": TIME_FLOOR,
            "instances": [n for n, _ in instances],
        },
    )


def informational_frequencies(per_instance: Iterable[dict]) -> dict:
    """How often QUAD-RLT's root bound is at least Scheme 1's, and how often
    the plain RLT relaxation has no more rows than Scheme 2's."""
    qr_ge_s1 = []
    lp_le_s2 = []
    for stats in per_instance:
        base = stats.get(("baseline", 0))
        for (scheme, d), st in stats.items():
            if scheme == "quadrlt":
                s1 = stats.get(("s1", d))
                if s1 and st.root_value is not None and s1.root_value is not None:
                    qr_ge_s1.append(st.root_value >= s1.root_value - ORDER_TOL * max(1.0, abs(s1.root_value)))
            if scheme == "s2" and base and base.available and st.available:
                lp_le_s2.append(base.ncons <= st.ncons)
    freq = lambda xs: sum(xs) / len(xs) if xs else None
    return {
        "root(quadrlt) >= root(s1)": freq(qr_ge_s1),
        "Ncons(baseline) <= Ncons(s2)": freq(lp_le_s2),
    }
