"""Command-line surface: model validation, sampling runs, experiment drivers.

Outputs are CSV files plus a JSON manifest carrying the model hash, seed
and arguments, so every artifact can be regenerated bit for bit.  Charts
are emitted as standalone SVG by a small built-in writer; consumers are
scripts and documents, not an interactive UI.

Exit codes: 0 success, 2 parse/semantic error in the model document,
3 when a run was dominated by aborted backward searches.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analysis import (
    auxiliary_trace,
    hidden_regeneration,
    visible_regeneration,
)
from .cftp import DEFAULT_MAX_BACK, simulate
from .dsl import format_model, parse_model
from .errors import AbortedError, ParseError, PctsimError, SemanticError
from .model import ContextTreeModel, TransitionRules, validate
from .oracle import brute_force_window_law, geometric_test
from .randsrc import SeededSource


@dataclass
class ExperimentPlan:
    kind: str  # sample | theta-distribution | epsilon-sweep | regeneration-report
    #        | oracle-compare | auxiliary-trace
    model_path: str
    out: str
    seed: int = 0
    iterations: int = 1
    window: tuple[int, int] = (0, 0)
    horizon: int = 50
    max_back: int = DEFAULT_MAX_BACK
    eps_grid: tuple[Fraction, ...] = ()
    length: int = 2
    resolution: int = 10
    depth: int = 12
    origins: tuple[int, ...] = ()
    sample_csv: str | None = None
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# small output helpers


def _model_text(path: str) -> str:
    return Path(path).read_text()


def _write_manifest(out: str, plan: ExperimentPlan, model_text: str | None, result: dict):
    payload = {
        "tool": "pctsim",
        "version": __version__,
        "kind": plan.kind,
        "model": plan.model_path,
        "model_sha256": hashlib.sha256(model_text.encode()).hexdigest() if model_text else None,
        "seed": plan.seed,
        "iterations": plan.iterations,
        "window": list(plan.window),
        "max_back": plan.max_back,
        "result": result,
    }
    Path(str(out) + ".manifest.json").write_text(json.dumps(payload, indent=2) + "\n")


def svg_line_chart(points, path, title="", xlabel="", ylabel=""):
    """Minimal polyline chart; enough for a mean-vs-parameter figure."""
    w, h, ml, mb, mt, mr = 640, 400, 70, 50, 30, 20
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * (w - ml - mr)

    def sy(y):
        return h - mb - (y - y0) / (y1 - y0) * (h - mb - mt)

    pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in points)
    marks = "".join(
        f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="#215"/>' for x, y in points
    )
    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">
<rect width="{w}" height="{h}" fill="white"/>
<text x="{w/2:.0f}" y="18" text-anchor="middle" font-size="14">{title}</text>
<line x1="{ml}" y1="{h-mb}" x2="{w-mr}" y2="{h-mb}" stroke="black"/>
<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{h-mb}" stroke="black"/>
<text x="{w/2:.0f}" y="{h-12}" text-anchor="middle" font-size="12">{xlabel}</text>
<text x="16" y="{h/2:.0f}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {h/2:.0f})">{ylabel}</text>
<text x="{ml}" y="{h-mb+16}" font-size="10" text-anchor="middle">{x0:g}</text>
<text x="{w-mr}" y="{h-mb+16}" font-size="10" text-anchor="middle">{x1:g}</text>
<text x="{ml-6}" y="{h-mb}" font-size="10" text-anchor="end">{y0:g}</text>
<text x="{ml-6}" y="{mt+4}" font-size="10" text-anchor="end">{y1:g}</text>
<polyline points="{pts}" fill="none" stroke="#215" stroke-width="1.5"/>
{marks}
</svg>
"""
    Path(path).write_text(svg)


def load_sample_csv(path) -> tuple[int, list[str]]:
    """(start index, symbol names) from rows of index,symbol."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rows.append((int(row[0]), row[1]))
            except ValueError:
                continue
    rows.sort()
    start = rows[0][0]
    if [i for i, _ in rows] != list(range(start, start + len(rows))):
        raise ValueError("sample CSV indices are not contiguous")
    return start, [s for _, s in rows]


def write_sample_csv(path, start: int, model: ContextTreeModel, sample: tuple[int, ...]):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "symbol"])
        for off, s in enumerate(sample):
            wr.writerow([start + off, model.alphabet.label(s)])


# ---------------------------------------------------------------------------
# experiment drivers


def run_epsilon_sweep(template: ContextTreeModel, eps_grid, iterations: int,
                      seed_base: int = 0, max_back: int = DEFAULT_MAX_BACK):
    """Mean backward distance of the window [0, 0] as epsilon varies, with
    every transition probability to the reference symbol set to epsilon.

    The template fixes alphabet, reference string and reach; it must be a
    two-symbol model whose single regular symbol is the reference symbol.
    Returns one row per epsilon: (epsilon, mean |theta|, stderr,
    mean steps, iterations, aborted).  Sums are integers, so the step
    identity mean_steps == 1 + 2 * mean_abs_theta is exact per row.
    """
    ab = template.alphabet
    if ab.size != 2 or ab.n_regular != 1 or template.ref != (0,):
        raise ValueError("sweep template must be a 2-symbol model whose only "
                         "regular symbol is the reference symbol")
    rows = []
    for gi, eps in enumerate(eps_grid):
        eps = Fraction(eps)
        inst = ContextTreeModel(
            ab, template.ref, template.reach,
            TransitionRules(eps, (), (), (eps, 1 - eps)),
        )
        tot = 0
        tot_sq = 0
        tot_steps = 0
        aborted = 0
        for j in range(iterations):
            src = SeededSource(seed_base + 1_000_000 * gi + j)
            try:
                r = simulate(src, 0, 0, inst, max_back)
            except AbortedError:
                aborted += 1
                continue
            tot += -r.theta
            tot_sq += r.theta * r.theta
            tot_steps += r.steps
        done = iterations - aborted
        mean = tot / done
        var = tot_sq / done - mean * mean
        rows.append({
            "epsilon": float(eps),
            "mean_abs_theta": mean,
            "stderr": math.sqrt(max(var, 0.0) / done),
            "mean_steps": tot_steps / done,
            "iterations": done,
            "aborted": aborted,
            "sum_abs_theta": tot,
            "sum_steps": tot_steps,
        })
    return rows


def _cmd_validate(plan: ExperimentPlan) -> int:
    text = _model_text(plan.model_path)
    model = parse_model(text)  # raises on problems
    issues = validate(model)
    if issues:  # parse_model validates, so this is belt and braces
        for v in issues:
            print(str(v), file=sys.stderr)
        return 2
    print(f"OK: {plan.model_path} "
          f"(|A|={model.alphabet.size}, regular={model.alphabet.n_regular}, "
          f"epsilon={model.rules.epsilon}, ref={model.alphabet.word(model.ref)!r})")
    return 0


def _cmd_sample(plan: ExperimentPlan) -> int:
    text = _model_text(plan.model_path)
    model = parse_model(text)
    m, n = plan.window
    aborted = 0
    with open(plan.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["seed", "m", "n", "theta", "steps", "sample", "provenance"])
        for j in range(plan.iterations):
            seed = plan.seed + j
            try:
                r = simulate(SeededSource(seed), m, n, model, plan.max_back)
            except AbortedError:
                aborted += 1
                wr.writerow([seed, m, n, "", "", "ABORTED", ""])
                continue
            prov = ";".join(str(r.provenance[i]) for i in range(r.theta, n + 1))
            wr.writerow([seed, m, n, r.theta, r.steps, r.word(model), prov])
    _write_manifest(plan.out, plan, text, {"aborted": aborted})
    print(f"wrote {plan.out} ({plan.iterations} runs, {aborted} aborted)")
    return 3 if aborted * 2 > plan.iterations else 0


def _cmd_theta_dist(plan: ExperimentPlan) -> int:
    text = _model_text(plan.model_path)
    model = parse_model(text)
    m, n = plan.window
    counts: dict[int, int] = {}
    aborted = 0
    for j in range(plan.iterations):
        try:
            r = simulate(SeededSource(plan.seed + j), m, n, model, plan.max_back)
        except AbortedError:
            aborted += 1
            continue
        k = m - r.theta
        counts[k] = counts.get(k, 0) + 1
    with open(plan.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["backward_distance", "count"])
        for k in sorted(counts):
            wr.writerow([k, counts[k]])
    samples = [k for k, c in counts.items() for _ in range(c)]
    rep = geometric_test(samples, float(model.rules.epsilon))
    verdict = "pass" if rep.passed else "fail"
    print(f"chi-square vs Geometric(epsilon={float(model.rules.epsilon):g}): "
          f"stat={rep.statistic:.2f} df={rep.df} crit={rep.critical:.2f} -> {verdict}")
    _write_manifest(plan.out, plan, text, {
        "aborted": aborted, "chi_square": rep.statistic, "df": rep.df,
        "critical": rep.critical, "geometric_verdict": verdict,
    })
    return 3 if aborted * 2 > plan.iterations else 0


def _cmd_eps_sweep(plan: ExperimentPlan) -> int:
    text = _model_text(plan.model_path)
    template = parse_model(text)
    rows = run_epsilon_sweep(template, plan.eps_grid, plan.iterations,
                             plan.seed, plan.max_back)
    with open(plan.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["epsilon", "mean_abs_theta", "stderr", "mean_steps",
                     "iterations", "aborted"])
        for r in rows:
            wr.writerow([r["epsilon"], f"{r['mean_abs_theta']:.6f}",
                         f"{r['stderr']:.6f}", f"{r['mean_steps']:.6f}",
                         r["iterations"], r["aborted"]])
    svg_path = str(plan.out) + ".svg"
    svg_line_chart([(r["epsilon"], r["mean_abs_theta"]) for r in rows], svg_path,
                   title="mean backward distance vs epsilon",
                   xlabel="epsilon", ylabel="mean |theta[0]|")
    total_aborted = sum(r["aborted"] for r in rows)
    _write_manifest(plan.out, plan, text, {"aborted": total_aborted, "svg": svg_path})
    print(f"wrote {plan.out} and {svg_path}")
    return 3 if total_aborted * 2 > plan.iterations * len(rows) else 0


def _cmd_regen(plan: ExperimentPlan) -> int:
    text = _model_text(plan.model_path)
    model = parse_model(text)
    if plan.sample_csv:
        start, names = load_sample_csv(plan.sample_csv)
        sample = tuple(model.alphabet.index(s) for s in names)
    else:
        m, n = plan.window
        r = simulate(SeededSource(plan.seed), m, n, model, plan.max_back)
        start, sample = r.theta, r.sample
        write_sample_csv(str(plan.out) + ".sample.csv", start, model, sample)
    rep = visible_regeneration(sample, start, model)
    with open(plan.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["anchor", "gap_to_next"])
        for i, a in enumerate(rep.visible_times):
            gap = rep.gaps[i] if i < len(rep.gaps) else ""
            wr.writerow([a, gap])
    _write_manifest(plan.out, plan, text, {
        "anchors": len(rep.visible_times),
        "theta_x": rep.theta_x,
        "from_saved_sample": bool(plan.sample_csv),
    })
    print(f"wrote {plan.out} ({len(rep.visible_times)} anchors)")
    return 0


def _cmd_aux_trace(plan: ExperimentPlan) -> int:
    text = _model_text(plan.model_path)
    model = parse_model(text)
    lo, hi = plan.window
    src = SeededSource(plan.seed)
    aux = auxiliary_trace(src, lo, hi, model, plan.origins)
    sites_path = str(plan.out) + ".sites.csv"
    with open(sites_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "u", "spontaneous", "ref_dist", "need"])
        for i in range(lo, hi + 1):
            z = aux.spont.z[i]
            wr.writerow([i, f"{src.u_at(i):.12f}",
                         "" if z is None else model.alphabet.label(z),
                         aux.spont.ref_dist[i], aux.spont.need[i]])
    blocks_path = str(plan.out) + ".blocks.csv"
    with open(blocks_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        head = ["block", "is_ref_block", "ref_dist", "need"]
        head += [f"D_origin_{o}" for o in sorted(aux.dominating)]
        wr.writerow(head)
        for b in range(aux.rescaled.lo, aux.rescaled.hi + 1):
            row = [b, int(aux.rescaled.one[b]), aux.rescaled.ref_dist[b],
                   aux.rescaled.need[b]]
            row += [aux.dominating[o].value(b) for o in sorted(aux.dominating)]
            wr.writerow(row)
    hidden = hidden_regeneration(src, lo, min(hi, lo + 20), plan.horizon, model)
    _write_manifest(plan.out, plan, text, {
        "sites_csv": sites_path, "blocks_csv": blocks_path,
        "hidden_flags": list(hidden.hidden_times),
    })
    print(f"wrote {sites_path} and {blocks_path}")
    return 0


def _cmd_oracle_compare(plan: ExperimentPlan) -> int:
    text = _model_text(plan.model_path)
    model = parse_model(text)
    law = brute_force_window_law(model, plan.length, plan.resolution, plan.depth)
    counts: dict[tuple[int, ...], int] = {}
    for j in range(plan.iterations):
        r = simulate(SeededSource(plan.seed + j), 1, plan.length, model, plan.max_back)
        w = r.window()
        counts[w] = counts.get(w, 0) + 1
    emp = {k: v / plan.iterations for k, v in counts.items()}
    tv = law.total_variation(emp)
    stderr = 0.5 * sum(
        math.sqrt(p * (1 - p) / plan.iterations) for p in emp.values()
    )
    tol = 4 * stderr + float(law.unresolved)
    with open(plan.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["window", "oracle_prob", "empirical_prob"])
        for k in sorted(set(law.probs) | set(emp)):
            wr.writerow([model.alphabet.word(k),
                         f"{float(law.probs.get(k, 0)):.10f}",
                         f"{emp.get(k, 0.0):.10f}"])
    verdict = "pass" if tv <= tol else "fail"
    print(f"TV={tv:.5f} tolerance={tol:.5f} (4*stderr + unresolved "
          f"{float(law.unresolved):.5f}) -> {verdict}")
    _write_manifest(plan.out, plan, text, {
        "tv": tv, "tolerance": tol, "unresolved": float(law.unresolved),
        "verdict": verdict,
    })
    return 0 if verdict == "pass" else 3


_DISPATCH = {
    "validate": _cmd_validate,
    "sample": _cmd_sample,
    "theta-distribution": _cmd_theta_dist,
    "epsilon-sweep": _cmd_eps_sweep,
    "regeneration-report": _cmd_regen,
    "auxiliary-trace": _cmd_aux_trace,
    "oracle-compare": _cmd_oracle_compare,
}


def run_plan(plan: ExperimentPlan) -> int:
    """Dispatch a plan and return the process exit code."""
    try:
        return _DISPATCH[plan.kind](plan)
    except (ParseError, SemanticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PctsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def _parse_grid(text: str) -> tuple[Fraction, ...]:
    if ":" in text:
        lo, hi, step = (Fraction(t) for t in text.split(":"))
        out = []
        x = lo
        while x <= hi + Fraction(1, 10 ** 9):
            out.append(x)
            x += step
        return tuple(out)
    return tuple(Fraction(t) for t in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pctsim",
        description="Exact sampling and regeneration analysis for "
                    "variable-length-memory chains with a reference string.",
    )
    p.add_argument("--version", action="version", version=f"pctsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--model", required=True, help="model document path")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--max-back", type=int, default=DEFAULT_MAX_BACK)
        sp.add_argument("--out", default=out_default, help="output CSV path")

    sp = sub.add_parser("validate", help="parse and check a model document")
    sp.add_argument("--model", required=True)

    sp = sub.add_parser("sample", help="perfectly simulate windows")
    common(sp, "sample.csv")
    sp.add_argument("--window", nargs=2, type=int, metavar=("M", "N"), default=[0, 0])
    sp.add_argument("--iterations", type=int, default=1)

    sp = sub.add_parser("theta-dist", help="distribution of the regeneration time")
    common(sp, "theta_dist.csv")
    sp.add_argument("--window", nargs=2, type=int, metavar=("M", "N"), default=[0, 0])
    sp.add_argument("--iterations", type=int, default=10000)

    sp = sub.add_parser("eps-sweep", help="mean |theta[0]| across epsilon values")
    common(sp, "eps_sweep.csv")
    sp.add_argument("--grid", default="0.2:1.0:0.1",
                    help="lo:hi:step or comma-separated values")
    sp.add_argument("--iterations", type=int, default=10000)

    sp = sub.add_parser("regen", help="visible regeneration anchors")
    common(sp, "regen.csv")
    sp.add_argument("--window", nargs=2, type=int, metavar=("M", "N"), default=[0, 200])
    sp.add_argument("--sample-csv", help="saved sample to analyze instead of simulating")

    sp = sub.add_parser("aux-trace", help="spontaneous/block traces and dominating processes")
    common(sp, "aux_trace")
    sp.add_argument("--window", nargs=2, type=int, metavar=("LO", "HI"), default=[-30, 30])
    sp.add_argument("--origins", default="", help="comma-separated block origins")
    sp.add_argument("--horizon", type=int, default=30)

    sp = sub.add_parser("oracle-compare", help="enumerated window law vs simulated frequencies")
    common(sp, "oracle_compare.csv")
    sp.add_argument("--length", type=int, default=2)
    sp.add_argument("--resolution", type=int, default=10)
    sp.add_argument("--depth", type=int, default=12)
    sp.add_argument("--iterations", type=int, default=20000)

    return p


def plan_from_args(args: argparse.Namespace) -> ExperimentPlan:
    kind = {
        "sample": "sample",
        "theta-dist": "theta-distribution",
        "eps-sweep": "epsilon-sweep",
        "regen": "regeneration-report",
        "aux-trace": "auxiliary-trace",
        "oracle-compare": "oracle-compare",
        "validate": "validate",
    }[args.command]
    plan = ExperimentPlan(kind=kind, model_path=args.model,
                          out=getattr(args, "out", ""))
    plan.seed = getattr(args, "seed", 0)
    plan.max_back = getattr(args, "max_back", DEFAULT_MAX_BACK)
    plan.iterations = getattr(args, "iterations", 1)
    if hasattr(args, "window"):
        plan.window = tuple(args.window)
    if hasattr(args, "grid"):
        plan.eps_grid = _parse_grid(args.grid)
    if hasattr(args, "horizon"):
        plan.horizon = args.horizon
    if hasattr(args, "origins") and args.origins:
        plan.origins = tuple(int(t) for t in args.origins.split(","))
    for name in ("length", "resolution", "depth", "sample_csv"):
        if hasattr(args, name):
            setattr(plan, name, getattr(args, name))
    return plan


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        plan = plan_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run_plan(plan)


if __name__ == "__main__":
    sys.exit(main())
