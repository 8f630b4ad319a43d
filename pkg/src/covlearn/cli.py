"""Experiment driver: generate targets and datasets, run learners and
release algorithms from JSON configs, evaluate hypotheses, emit reports.

Verbs: generate | learn | release | selftest.  Exit codes: 0 pass,
1 contract failure, 2 usage or schema error, 3 privacy-gate refusal.
Everything is deterministic in (config, seed); trials use disjoint child
seeds, and report rows are ordered by trial index.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .coverage import (
    CoverageFunction,
    dense_table,
    exact_fourier,
    junta_variables,
    l1_distance_mc,
    average_project,
    random_coverage,
    walsh_hadamard,
)
from .cube import DistributionSpec, child_rng, format_point_line, sample_masks
from .estimation import exact_source, lattice_search
from .cube import IndexSet
from .learners import (
    OracleExhausted,
    SampledOracle,
    UniformTableOracle,
    agnostic_learn,
    dnf_reduction_learn,
    dnf_to_coverage,
    pac_learn_uniform,
    pmac_learn,
    proper_agnostic_learn,
    proper_pac_learn,
    random_disjoint_dnf,
)
from .privacy import (
    Dataset,
    GateRefused,
    all_conjunction_answers,
    counting_query,
    coverage_of_dataset,
    gate_size,
    k_way_query_budget,
    marginals_query_budget,
    release_all_marginals,
    release_k_way,
    release_synthetic,
    synthetic_query_budget,
)
from .regression import L1Problem, solve_l1
from .serialize import (
    DATASET_EXPANSION_CAP,
    coverage_from_json,
    coverage_to_json,
    dataset_from_text,
    dataset_to_text,
    dump_json,
    hypothesis_to_json,
    load_json,
    summary_to_json,
)

EXIT_PASS = 0
EXIT_CONTRACT = 1
EXIT_USAGE = 2
EXIT_GATE = 3

LEARNER_NAMES = ("pac", "pmac", "proper", "agnostic", "proper-agnostic", "dnf-reduction")
RELEASE_NAMES = ("all-marginals", "k-way", "synthetic")
DEFAULT_EVAL_SAMPLES = 100_000
DEFAULT_EVAL_QUERIES = 10_000
SUCCESS_THRESHOLD = 2.0 / 3.0


class SchemaError(ValueError):
    """Config does not match the expected schema."""


def _get(cfg: dict, key: str, kind, default=None, required: bool = False):
    if key not in cfg:
        if required:
            raise SchemaError(f"missing required field {key!r}")
        return default
    value = cfg[key]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"field {key!r}: {exc}") from exc


def _dist_from_json(obj) -> DistributionSpec:
    if not isinstance(obj, dict) or "variant" not in obj:
        raise SchemaError("distribution must be an object with a 'variant' field")
    variant = obj["variant"]
    try:
        if variant == "uniform":
            return DistributionSpec.uniform(int(obj["n"]))
        if variant == "product":
            return DistributionSpec.product([float(b) for b in obj["biases"]])
        if variant == "layer":
            return DistributionSpec.layer(int(obj["n"]), int(obj["k"]))
        if variant == "symmetric":
            return DistributionSpec.symmetric([float(w) for w in obj["weights"]])
    except KeyError as exc:
        raise SchemaError(f"distribution field {exc} is missing") from exc
    except ValueError as exc:
        raise SchemaError(f"distribution field invalid: {exc}") from exc
    raise SchemaError(f"unknown distribution variant {variant!r}")


def _trial_seed(seed: int, trial: int, slot: int = 0) -> int:
    return int(child_rng(seed, trial, slot).integers(0, 2**31))


# --------------------------------------------------------------------------
# generate


def cmd_generate(cfg: dict, out_dir: str) -> int:
    seed = _get(cfg, "seed", int, 0)
    did_anything = False
    if "coverage" in cfg:
        block = cfg["coverage"]
        n = _get(block, "n", int, required=True)
        max_terms = _get(block, "max_terms", int, required=True)
        max_arity = _get(block, "max_arity", int, required=True)
        count = _get(block, "count", int, 1)
        if count < 1:
            raise SchemaError("field 'count': must be >= 1")
        pattern = _get(block, "out", str, "target_{i}.json")
        for i in range(count):
            try:
                c = random_coverage(n, max_terms, max_arity, _trial_seed(seed, i))
            except ValueError as exc:
                raise SchemaError(f"coverage block: {exc}") from exc
            name = pattern.format(i=i) if count > 1 or "{i}" in pattern else pattern
            dump_json(coverage_to_json(c), os.path.join(out_dir, name))
        did_anything = True
    if "dataset" in cfg:
        block = cfg["dataset"]
        dist = _dist_from_json(block.get("distribution"))
        size = _get(block, "size", int, required=True)
        if size < 1:
            raise SchemaError("field 'size': must be >= 1")
        if size > DATASET_EXPANSION_CAP:
            raise SchemaError(
                f"field 'size': {size} exceeds the text expansion cap"
            )
        name = _get(block, "out", str, "dataset.txt")
        masks = sample_masks(dist, size, child_rng(seed, 10**6))
        lines = [format_point_line(int(m), dist.n) for m in masks]
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        did_anything = True
    if not did_anything:
        raise SchemaError("generate config needs a 'coverage' or 'dataset' block")
    return EXIT_PASS


# --------------------------------------------------------------------------
# learn


@dataclass(frozen=True)
class _CountingTableOracle(UniformTableOracle):
    """Table oracle that tallies how many examples it has produced."""

    counter: list = field(default_factory=lambda: [0])

    def draw(self, m, rng):
        self.counter[0] += int(m)
        return super().draw(m, rng)

    def draw_counts(self, total, rng):
        self.counter[0] += int(total)
        return super().draw_counts(total, rng)


class _CountingDraw:
    """Counting proxy for oracles used only through .draw."""

    def __init__(self, base):
        self.base = base
        self.count = 0

    @property
    def n(self):
        return self.base.n

    def draw(self, m, rng):
        self.count += int(m)
        return self.base.draw(m, rng)


def _load_target(cfg: dict, n: int, trial_seed: int) -> CoverageFunction:
    block = cfg.get("target")
    if not isinstance(block, dict):
        raise SchemaError("learn config needs a 'target' object")
    if "path" in block:
        return coverage_from_json(load_json(block["path"]))
    max_terms = _get(block, "max_terms", int, required=True)
    max_arity = _get(block, "max_arity", int, required=True)
    return random_coverage(n, max_terms, max_arity, trial_seed)


@dataclass(frozen=True)
class _PerturbedEval:
    """An exactly eps-accurate stand-in hypothesis: the true function plus a
    +-eps perturbation on the first coordinate's sign."""

    inner: CoverageFunction
    eps: float

    def eval_masks(self, masks):
        masks = np.asarray(masks, dtype=np.uint64)
        signs = 1.0 - 2.0 * ((masks & np.uint64(1)) == 1)
        return self.inner.eval_masks(masks) + self.eps * signs


def _run_learn_trial(cfg: dict, learner: str, trial: int, seed: int) -> dict:
    n = _get(cfg, "n", int, required=True)
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError("'params' must be an object")
    eval_samples = _get(cfg, "eval_samples", int, DEFAULT_EVAL_SAMPLES)
    tseed = _trial_seed(seed, trial)
    eval_seed = _trial_seed(seed, trial, 1)
    row: dict = {"trial": trial, "seed": tseed}
    start = time.monotonic()

    if learner == "dnf-reduction":
        s = _get(params, "s", int, required=True)
        eps = _get(params, "epsilon", float, required=True)
        inner_kind = _get(params, "inner", str, "exact")
        dnf = random_disjoint_dnf(n, s, tseed)
        target_cov = dnf_to_coverage(dnf)
        oracle = _CountingDraw(
            SampledOracle(
                DistributionSpec.uniform(n), lambda masks, rng: dnf.eval_masks(masks)
            )
        )
        if inner_kind == "exact":
            inner_learner = lambda orc, e: target_cov
        elif inner_kind == "perturbed":
            inner_learner = lambda orc, e: _PerturbedEval(target_cov, e)
        else:
            raise SchemaError("field 'inner': expected 'exact' or 'perturbed'")
        h = dnf_reduction_learn(oracle, s, eps, inner_learner)
        err, hw = l1_distance_mc(
            h.eval_masks,
            dnf.eval_masks,
            DistributionSpec.uniform(n),
            eval_samples,
            eval_seed,
        )
        row.update(
            l1_error=err,
            l1_half_width=hw,
            mult_fraction=None,
            samples=oracle.count,
            success=err <= eps,
        )
        hypothesis = hypothesis_to_json(target_cov) if inner_kind == "exact" else None
        row["runtime_sec"] = time.monotonic() - start
        return row, hypothesis

    target = _load_target(cfg, n, tseed)
    uniform = DistributionSpec.uniform(n)

    if learner in ("pac", "pmac", "proper"):
        oracle = _CountingTableOracle(
            target.n, tuple(range(target.n)), dense_table(target)
        )
        if learner == "pac":
            eps = _get(params, "epsilon", float, required=True)
            h = pac_learn_uniform(oracle, eps, tseed)
            err, hw = l1_distance_mc(
                h.eval_masks, target.eval_masks, uniform, eval_samples, eval_seed
            )
            row.update(
                l1_error=err, l1_half_width=hw, mult_fraction=None, success=err <= eps
            )
        elif learner == "proper":
            eps = _get(params, "epsilon", float, required=True)
            size_bound = _get(params, "size_bound", float, math.inf)
            h = proper_pac_learn(oracle, eps, size_bound, tseed)
            err, hw = l1_distance_mc(
                h.eval_masks, target.eval_masks, uniform, eval_samples, eval_seed
            )
            row.update(
                l1_error=err, l1_half_width=hw, mult_fraction=None, success=err <= eps
            )
        else:
            gamma = _get(params, "gamma", float, required=True)
            delta = _get(params, "delta", float, required=True)
            h = pmac_learn(oracle, gamma, delta, tseed)
            masks = sample_masks(uniform, eval_samples, child_rng(eval_seed, 0))
            cv = target.eval_masks(masks)
            hv = h.eval_masks(masks)
            tol = 1e-9
            frac = float(
                ((hv <= cv + tol) & (cv <= (1 + gamma) * hv + tol)).mean()
            )
            hw = float(np.sqrt(np.log(2 / 0.05) / (2 * eval_samples)))
            err = float(np.abs(hv - cv).mean())
            row.update(
                l1_error=err,
                l1_half_width=hw,
                mult_fraction=frac,
                success=frac >= 1 - delta,
            )
        row["samples"] = oracle.counter[0]
        row["runtime_sec"] = time.monotonic() - start
        return row, hypothesis_to_json(h)

    if learner in ("agnostic", "proper-agnostic"):
        eps = _get(params, "epsilon", float, required=True)
        noise_scale = _get(params, "noise_scale", float, 0.0)
        dist = (
            _dist_from_json(cfg["distribution"]) if "distribution" in cfg else uniform
        )

        def labels(masks, rng):
            vals = target.eval_masks(masks)
            if noise_scale > 0:
                vals = vals + rng.laplace(0.0, noise_scale, size=len(masks))
            return np.clip(vals, 0.0, 1.0)

        oracle = _CountingDraw(SampledOracle(dist, labels))
        if learner == "agnostic":
            h = agnostic_learn(oracle, dist, eps, tseed)
        else:
            kappa = _get(params, "kappa", float, required=True)
            h = proper_agnostic_learn(oracle, dist, eps, kappa, tseed)
        err, hw = l1_distance_mc(
            h.eval_masks, target.eval_masks, dist, eval_samples, eval_seed
        )
        row.update(
            l1_error=err,
            l1_half_width=hw,
            mult_fraction=None,
            samples=oracle.count,
            success=err <= eps + noise_scale,
        )
        row["runtime_sec"] = time.monotonic() - start
        return row, hypothesis_to_json(h)

    raise AssertionError("unreachable")


def _write_report(rows: list[dict], aggregate: dict, cfg: dict, out_dir: str) -> None:
    dump_json(
        {"config": cfg, "rows": rows, "aggregate": aggregate},
        os.path.join(out_dir, "report.json"),
    )
    columns = [
        "trial",
        "seed",
        "l1_error",
        "l1_half_width",
        "mult_fraction",
        "avg_error",
        "samples",
        "privacy_budget",
        "runtime_sec",
        "success",
    ]
    used = [c for c in columns if any(c in r for r in rows)]
    with open(os.path.join(out_dir, "report.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(used)
        for r in rows:
            writer.writerow(["" if r.get(c) is None else r.get(c) for c in used])


def cmd_learn(cfg: dict, out_dir: str) -> int:
    learner = _get(cfg, "learner", str, required=True)
    if learner not in LEARNER_NAMES:
        raise SchemaError(
            f"unknown learner {learner!r}; valid names: {', '.join(LEARNER_NAMES)}"
        )
    trials = _get(cfg, "trials", int, 1)
    if trials < 1:
        raise SchemaError("field 'trials': must be >= 1")
    seed = _get(cfg, "seed", int, 0)
    rows = []
    for trial in range(trials):
        try:
            row, hypothesis = _run_learn_trial(cfg, learner, trial, seed)
        except OracleExhausted as exc:
            row, hypothesis = (
                {"trial": trial, "seed": _trial_seed(seed, trial),
                 "error": str(exc), "success": False},
                None,
            )
        rows.append(row)
        if hypothesis is not None:
            dump_json(hypothesis, os.path.join(out_dir, f"hypothesis_{trial:03d}.json"))
    successes = sum(1 for r in rows if r.get("success"))
    aggregate = {
        "trials": trials,
        "successes": successes,
        "success_fraction": successes / trials,
        "success_threshold": SUCCESS_THRESHOLD,
        "pass": successes >= SUCCESS_THRESHOLD * trials,
    }
    _write_report(rows, aggregate, cfg, out_dir)
    print(
        f"learn {learner}: {successes}/{trials} successful trials "
        f"(threshold {SUCCESS_THRESHOLD:.3f})"
    )
    return EXIT_PASS if aggregate["pass"] else EXIT_CONTRACT


# --------------------------------------------------------------------------
# release


def _release_gate(variant: str, n: int, cfg: dict, alpha_bar: float) -> float:
    epsilon = _get(cfg, "epsilon", float, required=True)
    delta = _get(cfg, "delta", float, required=True)
    if variant == "all-marginals":
        q, tau = marginals_query_budget(n, alpha_bar)
    elif variant == "k-way":
        q, tau = k_way_query_budget(n, _get(cfg, "k", int, required=True), alpha_bar)
    else:
        q, tau = synthetic_query_budget(
            n, alpha_bar, _get(cfg, "size_bound", float, math.inf)
        )
    return gate_size(q, tau, epsilon, delta)


def _release_dataset(cfg: dict, alpha_bar: float, variant: str) -> Dataset:
    block = cfg.get("dataset")
    if not isinstance(block, dict):
        raise SchemaError("release config needs a 'dataset' object")
    if "path" in block:
        with open(block["path"]) as fh:
            return dataset_from_text(fh.read())
    n = _get(block, "n", int, required=True)
    if "size" in block:
        size = _get(block, "size", int)
    else:
        factor = _get(block, "gate_factor", float, required=True)
        size = math.ceil(factor * max(_release_gate(variant, n, cfg, alpha_bar), 1.0))
    seed = _get(cfg, "seed", int, 0)
    return Dataset.iid_uniform(n, size, child_rng(seed, 10**6 + 1))


def cmd_release(cfg: dict, out_dir: str) -> int:
    variant = _get(cfg, "release", str, required=True)
    if variant not in RELEASE_NAMES:
        raise SchemaError(
            f"unknown release variant {variant!r}; valid: {', '.join(RELEASE_NAMES)}"
        )
    alpha_bar = _get(cfg, "alpha_bar", float, required=True)
    epsilon = _get(cfg, "epsilon", float, required=True)
    delta = _get(cfg, "delta", float, required=True)
    trials = _get(cfg, "trials", int, 1)
    seed = _get(cfg, "seed", int, 0)
    eval_queries = _get(cfg, "eval_queries", int, DEFAULT_EVAL_QUERIES)
    d = _release_dataset(cfg, alpha_bar, variant)

    truth_table = all_conjunction_answers(d)
    rows = []
    for trial in range(trials):
        tseed = _trial_seed(seed, trial)
        start = time.monotonic()
        if variant == "all-marginals":
            summary = release_all_marginals(d, alpha_bar, epsilon, delta, tseed)
            qdist = DistributionSpec.uniform(d.n)
        elif variant == "k-way":
            k = _get(cfg, "k", int, required=True)
            summary = release_k_way(d, k, alpha_bar, epsilon, delta, tseed)
            qdist = DistributionSpec.layer(d.n, k)
        else:
            size_bound = _get(cfg, "size_bound", float, math.inf)
            summary = release_synthetic(
                d, alpha_bar, epsilon, delta, tseed, size_bound=size_bound
            )
            qdist = DistributionSpec.uniform(d.n)
        x_masks = sample_masks(qdist, eval_queries, child_rng(seed, trial, 2))
        answers = summary.answer_masks(x_masks)
        avg_error = float(np.abs(answers - truth_table[x_masks]).mean())
        hw = float(np.sqrt(np.log(2 / 0.05) / (2 * eval_queries)))
        rows.append(
            {
                "trial": trial,
                "seed": tseed,
                "avg_error": avg_error,
                "l1_half_width": hw,
                "privacy_budget": summary.queries_used,
                "runtime_sec": time.monotonic() - start,
                "success": avg_error <= alpha_bar,
            }
        )
        dump_json(
            summary_to_json(summary), os.path.join(out_dir, f"summary_{trial:03d}.json")
        )
        if summary.synthetic is not None and not summary.synthetic.is_empty():
            with open(
                os.path.join(out_dir, f"synthetic_{trial:03d}.txt"), "w"
            ) as fh:
                fh.write(dataset_to_text(summary.synthetic))
    successes = sum(1 for r in rows if r["success"])
    aggregate = {
        "trials": trials,
        "successes": successes,
        "success_fraction": successes / trials,
        "success_threshold": SUCCESS_THRESHOLD,
        "pass": successes >= SUCCESS_THRESHOLD * trials,
    }
    _write_report(rows, aggregate, cfg, out_dir)
    print(
        f"release {variant}: {successes}/{trials} trials within "
        f"average error {alpha_bar}"
    )
    return EXIT_PASS if aggregate["pass"] else EXIT_CONTRACT


# --------------------------------------------------------------------------
# selftest


def _selftest_checks():
    def spectral_norm():
        for i in range(100):
            c = random_coverage(8, 10, 6, 1000 + i)
            assert exact_fourier(c).spectral_l1() <= 2 + 1e-9
        return True

    def coefficient_monotonicity():
        for i in range(30):
            c = random_coverage(7, 8, 5, 2000 + i)
            t = exact_fourier(c)
            for v in range(1, 1 << c.n):
                cv = abs(t[v])
                assert cv <= 2.0 ** -int(v).bit_count() + 1e-12
                assert t[v] <= 1e-15
                sub = (v - 1) & v
                while True:
                    if sub:
                        assert cv <= abs(t[sub]) + 1e-12
                    if sub == 0:
                        break
                    sub = (sub - 1) & v
        return True

    def expectation_bound():
        for i in range(50):
            c = random_coverage(8, 10, 6, 3000 + i)
            assert exact_fourier(c)[0] >= dense_table(c).max() / 2 - 1e-12
        return True

    def junta_projection():
        for i in range(30):
            c = random_coverage(8, 10, 6, 4000 + i)
            t = exact_fourier(c)
            for eps in (0.5, 0.25):
                i_set = junta_variables(t, eps)
                assert i_set.size() <= 4 / eps**2
                proj = average_project(c, i_set)
                l1 = float(np.abs(dense_table(c) - dense_table(proj)).mean())
                assert l1 <= eps + 1e-12
        return True

    def parseval():
        for i in range(50):
            c = random_coverage(8, 10, 6, 5000 + i)
            table = dense_table(c)
            total = sum(v * v for v in exact_fourier(c).coeffs.values())
            assert abs(total - float((table**2).mean())) <= 1e-9
        return True

    def fourier_path_agreement():
        for i in range(50):
            c = random_coverage(8, 10, 6, 6000 + i)
            a = exact_fourier(c, "analytic")
            b = exact_fourier(c, "wht")
            keys = set(a.coeffs) | set(b.coeffs)
            assert all(abs(a[k] - b[k]) <= 1e-9 for k in keys)
        return True

    def counting_identity():
        for i in range(20):
            rng = child_rng(7000 + i, 0)
            n = 6
            d = Dataset.iid_uniform(n, int(rng.integers(1, 200)), rng)
            cd = coverage_of_dataset(d)
            table = all_conjunction_answers(d)
            masks = np.arange(1 << n, dtype=np.uint64)
            assert np.abs(cd.eval_masks(masks) - (1.0 - table[masks])).max() <= 1e-12
        return True

    def lp_duality():
        for i in range(20):
            rng = child_rng(8000 + i, 0)
            design = rng.random((40, 6))
            targets = rng.random(40)
            sol = solve_l1(L1Problem(design, targets))
            assert sol.duality_gap <= 1e-7
        return True

    def lattice_exactness():
        for i in range(20):
            c = random_coverage(7, 8, 5, 9000 + i)
            t = exact_fourier(c)
            theta = 0.05
            kept = lattice_search(
                exact_source(t), IndexSet.from_indices(range(c.n), c.n), theta, c.n
            )
            brute = {m for m in range(1, 1 << c.n) if abs(t[m]) >= theta}
            assert {m for m in kept if m != 0} == brute
        return True

    return [
        ("spectral-norm-bound", spectral_norm),
        ("coefficient-monotonicity", coefficient_monotonicity),
        ("expectation-bound", expectation_bound),
        ("junta-projection", junta_projection),
        ("parseval", parseval),
        ("fourier-path-agreement", fourier_path_agreement),
        ("counting-identity", counting_identity),
        ("lp-duality", lp_duality),
        ("lattice-exactness", lattice_exactness),
    ]


def cmd_selftest() -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
        except AssertionError:
            print(f"FAIL {name}")
            failures += 1
        else:
            print(f"ok   {name}")
    print("selftest:", "pass" if failures == 0 else f"{failures} failures")
    return EXIT_PASS if failures == 0 else EXIT_CONTRACT


# --------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="covlearn",
        description="Coverage-function learning and private query release.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("generate", "learn", "release"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=".", help="output directory")
    sub.add_parser("selftest")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS

    if args.verb == "selftest":
        return cmd_selftest()

    try:
        cfg = load_json(args.config)
        if not isinstance(cfg, dict):
            raise SchemaError("config root must be a JSON object")
        if args.seed is not None:
            cfg["seed"] = args.seed
        os.makedirs(args.out, exist_ok=True)
        if args.verb == "generate":
            return cmd_generate(cfg, args.out)
        if args.verb == "learn":
            return cmd_learn(cfg, args.out)
        return cmd_release(cfg, args.out)
    except (SchemaError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GateRefused as exc:
        print(
            f"privacy gate refused: {exc} (grow the dataset to at least "
            f"{math.ceil(exc.required)} rows)",
            file=sys.stderr,
        )
        return EXIT_GATE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
