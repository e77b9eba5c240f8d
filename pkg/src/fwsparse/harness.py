"""Batch experiment runner: certifies the recovery and rate guarantees on
generated instances and emits machine-readable reports.

Per trial the harness generates an instance, analyses the dictionary,
solves, derives the guaranteed contraction factor, locates the iteration
from which the observed residuals contract at least that fast, and checks
every solver invariant that is supposed to hold in the guaranteed regime.
Reports are deterministic byte-for-byte given (config, seed): one CSV per
trial trace, a summary CSV/JSON pair, and (optionally) figures rendered
downstream of those CSVs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import (
    AnalysisReport,
    analyze_instance,
    beta_for_immediate_contraction,
    coherence,
    recovery_condition,
)
from .instances import GeneratorSpec, SparseInstance, sample_instance
from .linalg import Dictionary, extremal_singular_values, submatrix
from .solvers import SolveResult, SolverConfig, solve

BETA_POLICY_KINDS = ("multiple_of_xstar_l1", "absolute", "lemma1_auto")

# Absolute slack on squared-residual comparisons; keeps the contraction
# check honest at near-zero residuals where floats tie.
RATE_SLACK = 1e-14

# The auto beta policy places the radius 1% above the certified threshold
# ("strictly above" needs a definite margin).
IMMEDIATE_BETA_MARGIN = 1.01

# Feasibility tolerance: ||x_k||_1 may exceed beta only by this relative slack.
FEASIBILITY_SLACK = 1e-10

# The residual-recurrence identity must hold to this relative tolerance.
RECURRENCE_RTOL = 1e-10

# A span-membership check against ||r_k|| alone would drown in float noise
# once the residual is tiny; this absolute floor (relative to ||y||) caps it.
SPAN_RTOL = 1e-9
SPAN_FLOOR = 1e-13


@dataclass(frozen=True)
class BetaPolicy:
    """How the l1 radius is chosen per trial.

    ``multiple_of_xstar_l1`` scales the ground truth's l1 norm by ``factor``
    (> 1, so the optimum is interior); ``absolute`` uses ``value`` as is;
    ``lemma1_auto`` sets the radius just above the immediate-contraction
    threshold computed from the actual support spectrum with free parameter
    ``epsilon``.
    """

    kind: str
    factor: float | None = None
    value: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in BETA_POLICY_KINDS:
            raise ValueError(f"unknown beta policy {self.kind!r}, expected one of {BETA_POLICY_KINDS}")
        if self.kind == "multiple_of_xstar_l1":
            if self.factor is None or self.factor <= 1.0:
                raise ValueError(f"multiple_of_xstar_l1 needs factor > 1, got {self.factor}")
        elif self.kind == "absolute":
            if self.value is None or self.value <= 0.0:
                raise ValueError(f"absolute policy needs a positive value, got {self.value}")
        else:
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ValueError(f"lemma1_auto needs epsilon in (0, 1), got {self.epsilon}")

    def resolve(self, D: Dictionary, inst: SparseInstance) -> float:
        if self.kind == "multiple_of_xstar_l1":
            return self.factor * inst.x_star_l1
        if self.kind == "absolute":
            return self.value
        sigma_min, sigma_max = extremal_singular_values(submatrix(D, inst.support))
        threshold = beta_for_immediate_contraction(
            inst.m, float(np.linalg.norm(inst.y)), self.epsilon, sigma_min, sigma_max
        )
        return IMMEDIATE_BETA_MARGIN * threshold

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "factor": self.factor, "value": self.value, "epsilon": self.epsilon}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "BetaPolicy":
        return cls(
            kind=obj["kind"],
            factor=obj.get("factor"),
            value=obj.get("value"),
            epsilon=obj.get("epsilon"),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """A batch of seeded trials over one generated family."""

    generator: GeneratorSpec
    beta_policy: BetaPolicy
    trials: int
    solver: SolverConfig
    output_dir: str
    figures: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.generator.m < 1:
            raise ValueError("experiments need sparsity m >= 1")

    def to_json_dict(self) -> dict:
        return {
            "generator": self.generator.to_json_dict(),
            "beta_policy": self.beta_policy.to_json_dict(),
            "trials": self.trials,
            "solver": {
                "algorithm": self.solver.algorithm,
                "beta": self.solver.beta,
                "tol_residual": self.solver.tol_residual,
                "max_iters": self.solver.max_iters,
            },
            "output_dir": self.output_dir,
            "figures": self.figures,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ExperimentConfig":
        sol = obj["solver"]
        return cls(
            generator=GeneratorSpec.from_json_dict(obj["generator"]),
            beta_policy=BetaPolicy.from_json_dict(obj["beta_policy"]),
            trials=int(obj["trials"]),
            solver=SolverConfig(
                algorithm=sol.get("algorithm", "fw"),
                beta=sol.get("beta"),
                tol_residual=float(sol.get("tol_residual", 1e-9)),
                max_iters=sol.get("max_iters"),
            ),
            output_dir=obj["output_dir"],
            figures=bool(obj.get("figures", True)),
        )

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TrialReport:
    """Everything the certification needs to know about one trial."""

    trial: int
    seed: int
    d: int
    n: int
    m: int
    beta: float
    x_star_l1: float
    y_l2: float
    analysis: AnalysisReport
    iterations: int
    final_residual: float
    terminated_by: str
    support_purity: float
    empirical_K: int | None
    rate_violations_after_K: int
    theoretical_ratio_q_d_divided: float | None
    guaranteed_regime: bool
    violations: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "trial": self.trial,
            "seed": self.seed,
            "d": self.d,
            "n": self.n,
            "m": self.m,
            "beta": self.beta,
            "x_star_l1": self.x_star_l1,
            "y_l2": self.y_l2,
            "analysis": self.analysis.to_json_dict(),
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "terminated_by": self.terminated_by,
            "support_purity": self.support_purity,
            "empirical_K": self.empirical_K,
            "rate_violations_after_K": self.rate_violations_after_K,
            "theoretical_ratio_q_d_divided": self.theoretical_ratio_q_d_divided,
            "guaranteed_regime": self.guaranteed_regime,
            "violations": list(self.violations),
        }


def detect_contraction_start(residual_norms, q: float) -> int | None:
    """Smallest K such that every later step contracts the squared residual by q.

    ``residual_norms`` is the full sequence ||r_0||, ||r_1||, ... (starting
    at ||y||). The check is suffix-universal: K is valid only if
    ``||r_{k+1}||^2 <= q ||r_k||^2 + RATE_SLACK`` for *every* k >= K in the
    trace; a single compliant step is not enough. Returns None when the
    last step itself violates the bound, and 0 for traces with no steps
    (nothing to violate).
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"contraction factor must be in (0, 1), got {q}")
    rn = [float(v) for v in residual_norms]
    if not rn:
        raise ValueError("empty residual sequence")
    bad = [
        k
        for k in range(len(rn) - 1)
        if rn[k + 1] ** 2 > q * rn[k] ** 2 + RATE_SLACK
    ]
    if not bad:
        return 0
    last = bad[-1]
    if last == len(rn) - 2:
        return None
    return last + 1


def count_rate_violations(residual_norms, q: float, start: int) -> int:
    """Number of steps k >= start violating the q-contraction bound."""
    rn = [float(v) for v in residual_norms]
    return sum(
        1
        for k in range(start, len(rn) - 1)
        if rn[k + 1] ** 2 > q * rn[k] ** 2 + RATE_SLACK
    )


def detect_ball_entry(iterates, x_star, epsilon: float) -> int | None:
    """First index from which every iterate stays within ``epsilon`` of x_star.

    ``iterates`` must include x_0. Suffix-universal like the rate check:
    the iterates may never leave the ball again. None if the last iterate
    is still outside.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    x_star = np.asarray(x_star, dtype=np.float64)
    outside = [
        j
        for j, x in enumerate(iterates)
        if float(np.linalg.norm(np.asarray(x) - x_star)) > epsilon
    ]
    if not outside:
        return 0
    last = outside[-1]
    if last == len(iterates) - 1:
        return None
    return last + 1


def _support_purity(result: SolveResult) -> float:
    if not result.trace:
        return 1.0
    hits = sum(1 for rec in result.trace if rec.in_support)
    return hits / len(result.trace)


def verify_solver_invariants(
    D: Dictionary,
    inst: SparseInstance,
    beta: float,
    result: SolveResult,
    tag: str,
) -> list[str]:
    """Check the per-iteration guarantees a guaranteed-regime run must satisfy.

    Returns human-readable violation strings (empty means all hold). ``tag``
    identifies the (seed, trial) pair in the messages. Expects the solve to
    have recorded iterates (needed for the span check); the checks that do
    not apply to the algorithm at hand are skipped.
    """
    out: list[str] = []
    y_l2 = float(np.linalg.norm(inst.y))
    rns = result.residual_norms(y_l2)
    algorithm = "fw" if any(rec.step_dir_norm is not None for rec in result.trace) else "other"

    purity = _support_purity(result)
    if purity != 1.0:
        out.append(f"support_purity: {purity} != 1 {tag}")

    for k, rec in enumerate(result.trace):
        if rec.residual_norm > rns[k] * (1.0 + 1e-12):
            out.append(f"monotonicity: residual rose at k={k} {tag}")
        if algorithm == "fw":
            if rec.x_l1 > beta * (1.0 + FEASIBILITY_SLACK):
                out.append(f"feasibility: ||x||_1 = {rec.x_l1} > beta = {beta} at k={k} {tag}")
            if rec.step_dir_norm > 2.0 * beta:
                out.append(
                    f"direction_bound: ||Phi(s-x)|| = {rec.step_dir_norm} > 2 beta at k={k} {tag}"
                )
            if 0.0 < rec.gamma < 1.0:
                pred = rec.step_gain**2 / rec.step_dir_norm**2
                obs = rns[k] ** 2 - rns[k + 1] ** 2
                if abs(pred - obs) > RECURRENCE_RTOL * max(abs(pred), abs(obs)):
                    out.append(
                        f"residual_recurrence: predicted decrement {pred} vs observed {obs} "
                        f"at k={k} {tag}"
                    )

    if result.iterates is not None and len(inst.support) > 0:
        basis, _ = np.linalg.qr(submatrix(D, inst.support))
        for j, x in enumerate(result.iterates):
            r = inst.y - D.atoms @ x
            rnorm = float(np.linalg.norm(r))
            if rnorm == 0.0:
                continue
            off_span = float(np.linalg.norm(r - basis @ (basis.T @ r)))
            if off_span > max(SPAN_RTOL * rnorm, SPAN_FLOOR * y_l2):
                out.append(
                    f"span: residual leaves the support span by {off_span:.3e} at k={j} {tag}"
                )
                break

    return out


def _format_sig(v) -> str:
    if v is None:
        return ""
    return f"{v:.12g}"


def write_trace_csv(result: SolveResult, path) -> None:
    """Per-iteration CSV: k, i_k, gamma, residual_norm, x_l1, in_support."""
    lines = ["k,i_k,gamma,residual_norm,x_l1,in_support"]
    for rec in result.trace:
        flag = "" if rec.in_support is None else ("1" if rec.in_support else "0")
        lines.append(
            f"{rec.k},{rec.selected_atom},{_format_sig(rec.gamma)},"
            f"{_format_sig(rec.residual_norm)},{_format_sig(rec.x_l1)},{flag}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


SUMMARY_COLUMNS = (
    "trial,seed,m,beta,x_star_l1,y_l2,mu,q,iterations,final_residual,"
    "terminated_by,support_purity,empirical_K,rate_violations_after_K,"
    "guaranteed_regime,violations"
)


def _summary_row(rep: TrialReport) -> str:
    q = rep.analysis.theoretical_ratio_q
    return ",".join(
        [
            str(rep.trial),
            str(rep.seed),
            str(rep.m),
            _format_sig(rep.beta),
            _format_sig(rep.x_star_l1),
            _format_sig(rep.y_l2),
            _format_sig(rep.analysis.mu),
            _format_sig(q),
            str(rep.iterations),
            _format_sig(rep.final_residual),
            rep.terminated_by,
            _format_sig(rep.support_purity),
            "" if rep.empirical_K is None else str(rep.empirical_K),
            str(rep.rate_violations_after_K),
            "1" if rep.guaranteed_regime else "0",
            str(len(rep.violations)),
        ]
    )


def run_trial(
    D: Dictionary,
    cfg: ExperimentConfig,
    trial: int,
) -> tuple[TrialReport, SolveResult]:
    """Generate, solve and certify one trial (seed = generator seed + trial)."""
    gen = cfg.generator
    seed = gen.seed + trial
    inst = sample_instance(
        D,
        gen.m,
        coeff_min_abs=gen.coeff_min_abs,
        coeff_max_abs=gen.coeff_max_abs,
        seed=seed,
        dictionary_ref=gen.reference(),
    )
    beta = cfg.beta_policy.resolve(D, inst)
    solver_cfg = replace(cfg.solver, beta=beta) if cfg.solver.algorithm == "fw" else cfg.solver

    analysis = analyze_instance(
        D,
        inst.support,
        inst.x_star_l1,
        float(np.linalg.norm(inst.y)),
        beta,
        immediate_epsilon=cfg.beta_policy.epsilon or 0.5,
    )
    guaranteed = recovery_condition(analysis.mu, inst.m) and beta > inst.x_star_l1

    result = solve(D, inst.y, solver_cfg, ground_truth=inst, record_iterates=guaranteed)

    y_l2 = float(np.linalg.norm(inst.y))
    rns = result.residual_norms(y_l2)
    q = analysis.theoretical_ratio_q
    if q is not None:
        empirical_K = detect_contraction_start(rns, q)
        violations_after = (
            count_rate_violations(rns, q, empirical_K)
            if empirical_K is not None
            else count_rate_violations(rns, q, 0)
        )
        q_d = 1.0 - (1.0 - q) / D.d
    else:
        empirical_K, violations_after, q_d = None, 0, None

    violations: list[str] = []
    tag = f"(seed={seed}, trial={trial})"
    if guaranteed:
        violations.extend(verify_solver_invariants(D, inst, beta, result, tag))
        if q is not None and empirical_K is None:
            violations.append(f"rate_onset: no contraction-start iteration found {tag}")
        if violations_after != 0:
            violations.append(f"rate_violations_after_K: {violations_after} {tag}")
        if cfg.solver.algorithm == "omp":
            if result.iterations != inst.m or result.final_residual_norm > 1e-9:
                violations.append(
                    f"omp_iteration_count: {result.iterations} iterations "
                    f"(expected {inst.m}), final residual {result.final_residual_norm:.3e} {tag}"
                )

    report = TrialReport(
        trial=trial,
        seed=seed,
        d=D.d,
        n=D.n,
        m=inst.m,
        beta=beta,
        x_star_l1=inst.x_star_l1,
        y_l2=y_l2,
        analysis=analysis,
        iterations=result.iterations,
        final_residual=result.final_residual_norm,
        terminated_by=result.terminated_by,
        support_purity=_support_purity(result),
        empirical_K=empirical_K,
        rate_violations_after_K=violations_after,
        theoretical_ratio_q_d_divided=q_d,
        guaranteed_regime=guaranteed,
        violations=violations,
    )
    return report, result


def run_experiment(cfg: ExperimentConfig) -> list[TrialReport]:
    """Run all trials and write trace CSVs, summary CSV/JSON and figures.

    Trials are independent; they run sequentially here but own disjoint
    outputs, so running them concurrently would only need a parallel map.
    Every numeric cell uses 12 significant digits in CSV and full float
    precision in JSON; outputs never embed timestamps, so identical
    (config, seed) reruns produce identical bytes.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    D = cfg.generator.build_dictionary()

    reports: list[TrialReport] = []
    for trial in range(cfg.trials):
        report, result = run_trial(D, cfg, trial)
        write_trace_csv(result, out / f"trial_{trial:03d}_trace.csv")
        reports.append(report)

    rows = [SUMMARY_COLUMNS] + [_summary_row(r) for r in reports]
    (out / "summary.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    summary = {
        "config": cfg.to_json_dict(),
        "trials": [r.to_json_dict() for r in reports],
        "all_passed": all(not r.violations for r in reports),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    if cfg.figures:
        from .plots import render_experiment_figures

        render_experiment_figures(out)
    return reports


COMPARISON_COLUMNS = (
    "trial,seed,m,solver,iterations,final_residual,terminated_by,"
    "support_purity,first_selected_atom"
)


def compare_solvers(cfg: ExperimentConfig) -> list[dict]:
    """Run fw, mp and omp on identical instances and tabulate the outcomes.

    Writes ``comparison.csv`` (one row per trial x solver) and
    ``comparison_curves.csv`` (per-iteration residuals, long format). In the
    guaranteed regime the omp iteration count must equal the sparsity and
    fw/mp must agree on the first selected atom; failures land in the
    returned rows' ``violations``.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    D = cfg.generator.build_dictionary()
    gen = cfg.generator
    mu = coherence(D)

    rows: list[dict] = []
    csv_rows = [COMPARISON_COLUMNS]
    curve_rows = ["trial,solver,k,residual_norm"]
    for trial in range(cfg.trials):
        seed = gen.seed + trial
        inst = sample_instance(
            D,
            gen.m,
            coeff_min_abs=gen.coeff_min_abs,
            coeff_max_abs=gen.coeff_max_abs,
            seed=seed,
            dictionary_ref=gen.reference(),
        )
        beta = cfg.beta_policy.resolve(D, inst)
        guaranteed = recovery_condition(mu, inst.m)

        first_atoms: dict[str, int | None] = {}
        per_solver: dict[str, SolveResult] = {}
        for algo in ("fw", "mp", "omp"):
            solver_cfg = SolverConfig(
                algorithm=algo,
                beta=beta if algo == "fw" else None,
                tol_residual=cfg.solver.tol_residual,
                max_iters=cfg.solver.max_iters,
            )
            result = solve(D, inst.y, solver_cfg, ground_truth=inst)
            per_solver[algo] = result
            first = result.trace[0].selected_atom if result.trace else None
            first_atoms[algo] = first
            csv_rows.append(
                f"{trial},{seed},{inst.m},{algo},{result.iterations},"
                f"{_format_sig(result.final_residual_norm)},{result.terminated_by},"
                f"{_format_sig(_support_purity(result))},"
                f"{'' if first is None else first}"
            )
            for k, rn in enumerate(result.residual_norms(float(np.linalg.norm(inst.y)))):
                curve_rows.append(f"{trial},{algo},{k},{_format_sig(rn)}")

        violations: list[str] = []
        if first_atoms["fw"] != first_atoms["mp"]:
            violations.append(
                f"first_selection: fw chose {first_atoms['fw']}, mp chose {first_atoms['mp']} "
                f"(seed={seed}, trial={trial})"
            )
        if guaranteed and per_solver["omp"].iterations != inst.m:
            violations.append(
                f"omp_iteration_count: {per_solver['omp'].iterations} != m = {inst.m} "
                f"(seed={seed}, trial={trial})"
            )
        rows.append(
            {
                "trial": trial,
                "seed": seed,
                "m": inst.m,
                "iterations": {a: per_solver[a].iterations for a in per_solver},
                "support_purity": {a: _support_purity(per_solver[a]) for a in per_solver},
                "violations": violations,
            }
        )

    (out / "comparison.csv").write_text("\n".join(csv_rows) + "\n", encoding="utf-8")
    (out / "comparison_curves.csv").write_text("\n".join(curve_rows) + "\n", encoding="utf-8")

    if cfg.figures:
        from .plots import render_comparison_figures

        render_comparison_figures(out)
    return rows
