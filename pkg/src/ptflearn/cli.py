"""Command-line front end: gen, transform, learn, verify-bounds, eval.

Seeding: the master seed feeds np.random.SeedSequence(seed).spawn(5); the
children are, in order, the instance, distribution, oracle, learner and
evaluation streams.  The order is part of the file formats' stability promise.

Exit codes: 0 success, 1 invalid input, 2 contract violation, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from ptflearn import __version__
from ptflearn.approx import ClippedChain, format_chain, parse_chain
from ptflearn.bits import EXACT_MAX_N
from ptflearn.boolcore import TermThresholdFunction, format_dnf, parse_dnf, random_dnf
from ptflearn.dist import ProductDistribution, perturb
from ptflearn.errors import BudgetExhausted, ContractViolation
from ptflearn.learners import (
    Hypothesis,
    LearnerConfig,
    learn_dnf_mq_prod,
    learn_dnf_smoothed,
    learn_mdnf_prod,
    measure_error,
)
from ptflearn.oracles import ExampleOracle, MembershipOracle
from ptflearn.spectrum import (
    format_spectrum,
    inverse_mu_transform,
    mu_transform_dense,
    parse_spectrum,
    spectrum_table,
    to_sparse,
)
from ptflearn.structural import (
    BOUND_CSV_COLUMNS,
    DnfBound,
    ExactLemmaBound,
    LtfBound,
    UniformDnfBound,
    dnf_sign_polynomial,
    verify_error_bound,
)

OUT_ENV = "PTFLEARN_OUT"
DEMO_TARGET = "n=10; 0&1 | 2&!3&4 | 7"
STREAMS = ("instance", "distribution", "oracle", "learner", "evaluation")


def seed_streams(seed: int | None) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "ptflearn-out"))


# Function files: either a DNF in the text format ("n=4; 0&!2 | 1&3") or a truth
# table: first line "n=<n> table", then 2^n values in point order.


def read_function(path: str):
    text = Path(path).read_text()
    first = text.strip().splitlines()[0] if text.strip() else ""
    if first.split()[-1:] == ["table"]:
        n = int(first.split()[0].split("=")[1])
        values = np.array([float(v) for v in text.split()[2:]])
        if len(values) != 1 << n:
            raise ValueError(f"truth table needs {1 << n} values, got {len(values)}")
        return n, values, None
    f = parse_dnf(text.strip())
    return f.n, None, f


def write_table(n: int, values: np.ndarray) -> str:
    return f"n={n} table\n" + "\n".join(repr(float(v)) for v in values) + "\n"


def parse_mu(text: str | None, n: int) -> ProductDistribution:
    if not text or text == "uniform":
        return ProductDistribution.uniform(n)
    values = tuple(float(v) for v in text.split(","))
    if len(values) == 1:
        values = values * n
    if len(values) != n:
        raise ValueError(f"mu has {len(values)} entries for n={n}")
    return ProductDistribution(values)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    rng = seed_streams(args.seed)["instance"]
    out = Path(args.out) if args.out else default_out()
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        f = random_dnf(args.n, args.s, args.max_len, args.monotone, seed=rng)
        path = out / f"dnf_{k:03d}.txt"
        path.write_text(format_dnf(f) + "\n")
        print(path)
    return 0


def cmd_transform(args) -> int:
    if args.inverse:
        v = parse_spectrum(Path(args.input).read_text())
        if v.n > EXACT_MAX_N:
            raise ValueError("inverse transform needs n <= 24")
        table = inverse_mu_transform(spectrum_table(v), v.mu)
        _emit(write_table(v.n, table), args.out)
        return 0
    n, table, f = read_function(args.input)
    if n > EXACT_MAX_N:
        raise ValueError(f"n={n} exceeds {EXACT_MAX_N}")
    if table is None:
        table = f(np.arange(1 << n, dtype=np.int64))
    mu = parse_mu(args.mu, n)
    values = mu_transform_dense(table, mu)
    _emit(format_spectrum(to_sparse(values, n, mu, args.degree_cap)), args.out)
    return 0


def _config(args, c) -> LearnerConfig:
    return LearnerConfig(
        s=args.s,
        epsilon=args.epsilon,
        delta=args.delta,
        c=c,
        recovery_backend=args.backend,
        chain_backend=args.chain_backend,
        proper=args.proper,
        amplify=not args.no_amplify,
        query_budget=args.query_budget,
        sample_budget=args.sample_budget,
        seed=args.seed,
    )


def cmd_learn(args) -> int:
    if args.c is not None and not 0 < args.c <= 1:
        raise ValueError(f"c={args.c} outside (0, 1]")
    streams = seed_streams(args.seed)
    if args.target == "demo":
        f = parse_dnf(DEMO_TARGET)
    elif args.target:
        _, _, f = read_function(args.target)
        if f is None:
            raise ValueError("learn needs a DNF target file")
    else:
        f = random_dnf(args.n, args.s, args.max_len, args.learner == "mdnf", seed=streams["instance"])
    n = f.n
    if args.learner == "smoothed":
        if args.c is None:
            raise ValueError("the smoothed learner needs --c")
        mu_bar = parse_mu(args.mu_bar or "uniform", n).mu_array
        mu = perturb(mu_bar, args.c, streams["distribution"])
    else:
        mu = parse_mu(args.mu, n)
    cfg = _config(args, args.c)

    started = time.perf_counter()
    if args.learner == "mq":
        oracle = MembershipOracle(f, n, args.query_budget)
        h = learn_dnf_mq_prod(oracle, mu, cfg, streams["learner"])
        counters = {"queries": oracle.query_count}
    else:
        oracle = ExampleOracle(f, mu, streams["oracle"], args.sample_budget)
        if args.learner == "smoothed":
            h = learn_dnf_smoothed(oracle, cfg, streams["learner"])
        elif args.learner == "mdnf":
            if not f.monotone:
                raise ValueError("the monotone learner needs a monotone DNF target")
            h = learn_mdnf_prod(oracle, cfg, streams["learner"])
        else:
            raise ValueError(f"unknown learner {args.learner!r}")
        counters = {"samples": oracle.sample_count}
    elapsed = time.perf_counter() - started

    mode = "exact" if args.error_mode == "exact" else int(args.error_mode)
    err = measure_error(h, f, n, mu, mode, streams["evaluation"])
    provenance = dict(h.provenance)
    timing = {"learn_seconds": elapsed, "attempt_seconds": provenance.pop("seconds", None)}
    manifest = {
        "version": __version__,
        "spec": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "out")},
        "target": format_dnf(f),
        "mu": list(mu.mu),
        "derived": provenance,
        "counters": {k: int(v) for k, v in counters.items()},
        "error": {"value": err.value, "band": err.band, "mode": err.mode},
        "success": err.value <= args.epsilon,
        "timing": timing,
    }
    out = Path(args.out) if args.out else default_out()
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json) + "\n")
    (out / "hypothesis.chain").write_text(format_chain(h.chain))
    print(json.dumps({"error": err.value, "success": manifest["success"], "out": str(out)}))
    return 0


def _json(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _random_chain(n: int, mu, rng, length: int) -> ClippedChain:
    updates = tuple((int(rng.integers(1 << n)), float(rng.normal(scale=0.7))) for _ in range(length))
    return ClippedChain(n, updates, mu)


def bound_sweep(count: int, n: int, c_values, rng, instances: list | None = None) -> list[dict]:
    """Random (f, g, mu) tuples checked against every applicable bound family.

    `instances`, when given, collects each (f, mu, c) triple.
    """
    rows = []
    for k in range(count):
        c = float(c_values[k % len(c_values)])
        if c >= 1.0:
            mu = ProductDistribution.uniform(n)
        else:
            mu = ProductDistribution(tuple(rng.uniform(-(1 - c), 1 - c, size=n)))
        s = int(rng.integers(1, 5))
        f = random_dnf(n, s, int(rng.integers(1, n + 1)), bool(rng.integers(2)), seed=rng)
        if instances is not None:
            instances.append((f, mu, c))
        kind = k % 3
        if kind == 0:
            g = _random_chain(n, mu, rng, int(rng.integers(1, 8)))
        elif kind == 1:
            g = lambda x, f=f: -f(x)
        else:
            g = lambda x: np.zeros(np.shape(x))
        eps = float(rng.choice([0.05, 0.1, 0.25]))
        families = [DnfBound(s, c, eps), ExactLemmaBound(dnf_sign_polynomial(f, mu))]
        ltf = TermThresholdFunction(n, f.terms, (1.0,) * s, float(s - 1))
        families.append(LtfBound(ltf.total_weight, c, eps))
        if c >= 1.0:
            families.append(UniformDnfBound(s))
        for fam in families:
            report = verify_error_bound(f, g, n, mu, None, fam)
            row = report.row()
            row["tuple"] = k
            rows.append(row)
    return rows


def cmd_verify_bounds(args) -> int:
    rng = seed_streams(args.seed)["instance"]
    c_values = [float(v) for v in args.c_values.split(",")]
    rows = bound_sweep(args.count, args.n, c_values, rng)
    columns = ["tuple"] + BOUND_CSV_COLUMNS
    out = Path(args.out) if args.out else default_out() / "bounds.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})
    failed = sum(1 for r in rows if not r["passed"])
    print(json.dumps({"rows": len(rows), "failed": failed, "out": str(out)}))
    if failed:
        raise ContractViolation(f"{failed} bound checks failed")
    return 0


def cmd_eval(args) -> int:
    chain = parse_chain(Path(args.hypothesis).read_text())
    _, _, f = read_function(args.target)
    if f is None:
        raise ValueError("eval needs a DNF target file")
    mu = parse_mu(args.mu, f.n)
    h = Hypothesis(chain)
    mode = "exact" if args.error_mode == "exact" else int(args.error_mode)
    err = measure_error(h, f, f.n, mu, mode, seed_streams(args.seed)["evaluation"])
    print(json.dumps({"error": err.value, "band": err.band, "mode": err.mode}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptflearn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(q):
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--out", default=None)
        q.add_argument("--config", default=None, help="JSON file whose keys override flags")

    g = sub.add_parser("gen", help="write random DNF instances")
    common(g)
    g.add_argument("--n", type=int, default=12)
    g.add_argument("--s", type=int, default=4)
    g.add_argument("--max-len", type=int, default=4)
    g.add_argument("--monotone", action="store_true")
    g.add_argument("--count", type=int, default=1)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("transform", help="exact spectrum of a function file")
    common(t)
    t.add_argument("input")
    t.add_argument("--mu", default="uniform", help="'uniform' or comma-separated means")
    t.add_argument("--degree-cap", type=int, default=None)
    t.add_argument("--inverse", action="store_true", help="spectrum file back to a truth table")
    t.set_defaults(func=cmd_transform)

    lr = sub.add_parser("learn", help="run a learner and write a manifest")
    common(lr)
    lr.add_argument("--learner", choices=["mq", "smoothed", "mdnf"], default="mq")
    lr.add_argument("--target", default=None, help="DNF file or 'demo'; random instance when omitted")
    lr.add_argument("--n", type=int, default=10)
    lr.add_argument("--s", type=int, default=2)
    lr.add_argument("--max-len", type=int, default=3)
    lr.add_argument("--epsilon", type=float, default=0.1)
    lr.add_argument("--delta", type=float, default=0.1)
    lr.add_argument("--c", type=float, default=None)
    lr.add_argument("--mu", default="uniform")
    lr.add_argument("--mu-bar", default=None)
    lr.add_argument("--backend", choices=["exact", "sampled"], default="sampled")
    lr.add_argument("--chain-backend", choices=["exact", "sampled"], default="exact")
    lr.add_argument("--proper", action="store_true")
    lr.add_argument("--no-amplify", action="store_true")
    lr.add_argument("--query-budget", type=int, default=None)
    lr.add_argument("--sample-budget", type=int, default=None)
    lr.add_argument("--error-mode", default="exact", help="'exact' or a sample count")
    lr.set_defaults(func=cmd_learn)

    v = sub.add_parser("verify-bounds", help="exact sweep of the error bounds, CSV out")
    common(v)
    v.add_argument("--count", type=int, default=100)
    v.add_argument("--n", type=int, default=10)
    v.add_argument("--c-values", default="1,0.5,0.25")
    v.set_defaults(func=cmd_verify_bounds)

    e = sub.add_parser("eval", help="error of a saved hypothesis against a DNF")
    common(e)
    e.add_argument("hypothesis")
    e.add_argument("target")
    e.add_argument("--mu", default="uniform")
    e.add_argument("--error-mode", default="exact")
    e.set_defaults(func=cmd_eval)
    return p


def apply_config(args) -> None:
    if not getattr(args, "config", None):
        return
    overrides = json.loads(Path(args.config).read_text())
    for key, value in overrides.items():
        key = key.replace("-", "_")
        if not hasattr(args, key) or key in ("func", "command"):
            raise ValueError(f"unknown config key {key!r}")
        setattr(args, key, value)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        apply_config(args)
        return args.func(args)
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 2
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
