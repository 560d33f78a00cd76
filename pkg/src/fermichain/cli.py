"""Config-driven command line: builds a model, runs a verification, reports.

Verbs: ``validate``, ``gibbs``, ``perturb``, ``entropy``, ``lts``,
``prop4``, ``ssb-probe``, ``remark2``.  Settings come from an INI-style
config file (section ``[run]`` for the run parameters, section ``[model]``
for model coefficients), with command-line flags taking precedence over
file values.  Reports are JSON lines with a fixed key order; identical
configuration and seed reproduce the report byte for byte.

Exit status: 0 when every emitted check passes (or none are emitted), 1
when any check fails or a computation breaks down (the report then carries
a diagnostic record and the reason goes to stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import car
from .entropy import (conditional_entropy, relative_entropy,
                      restricted_relative_entropy)
from .potentials import (MODELS, build_model, local_hamiltonian,
                         total_hamiltonian, validate_potential)
from .probes import (cluster_coefficient, grading_asymmetry,
                     purely_imaginary_check, scan_odd_correlations)
from .regions import MAX_SITES, Region
from .reporting import ReportRecord, all_passed, emit_report, from_checks
from .stability import lts_check, prop4_pipeline
from .states import (gibbs_state, kms_residual, odd_direction,
                     perturbed_state, product_check, random_pair_panel,
                     remark2_construct, restrict)

COMMANDS = ("validate", "gibbs", "perturb", "entropy", "lts", "prop4",
            "ssb-probe", "remark2")

_RUN_KEYS = ("command", "length", "model", "beta", "region", "seed", "out",
             "samples")


class UsageError(Exception):
    """Configuration problem; reported on stderr with exit status 2."""


@dataclass
class RunConfig:
    command: str
    lattice_size: int = 6
    model: str = "hopping"
    model_params: dict = field(default_factory=dict)
    beta: float = 1.0
    region_sites: tuple[int, ...] | None = None
    seed: int = 0
    output_path: str | None = None
    samples: int = 200

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; "
                             f"expected one of {', '.join(COMMANDS)}")
        if not 1 <= self.lattice_size <= MAX_SITES:
            raise UsageError(f"length must be between 1 and {MAX_SITES}, "
                             f"got {self.lattice_size}")
        if self.model not in MODELS:
            raise UsageError(f"unknown model {self.model!r}; "
                             f"known: {', '.join(sorted(MODELS))}")
        if not math.isfinite(self.beta):
            raise UsageError(f"beta must be finite, got {self.beta}")
        if self.samples < 0:
            raise UsageError("samples must be nonnegative")
        if self.region_sites is not None:
            bad = [s for s in self.region_sites
                   if not 0 <= s < self.lattice_size]
            if bad:
                raise UsageError(f"region sites {bad} outside the chain "
                                 f"0..{self.lattice_size - 1}")

    def region(self) -> Region:
        if not self.region_sites:
            raise UsageError(f"command {self.command!r} needs a region "
                             "(--region \"i,j,...\")")
        return Region.of(self.region_sites, self.lattice_size)


def _parse_region_text(text: str) -> tuple[int, ...]:
    items = [piece.strip() for piece in text.split(",") if piece.strip()]
    if not items:
        raise UsageError(f"empty region {text!r}")
    try:
        return tuple(int(piece) for piece in items)
    except ValueError:
        raise UsageError(f"region must be a comma-separated site list, "
                         f"got {text!r}") from None


def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise UsageError(f"config file {path!r} not found or unreadable")
    values: dict = {}
    if parser.has_section("run"):
        for key, raw in parser.items("run"):
            if key not in _RUN_KEYS:
                raise UsageError(f"unknown config key {key!r} in [run]")
            values[key] = raw
    if parser.has_section("model"):
        params = {}
        for key, raw in parser.items("model"):
            try:
                params[key] = float(raw)
            except ValueError:
                raise UsageError(f"model parameter {key!r} must be a number, "
                                 f"got {raw!r}") from None
        values["model_params"] = params
    return values


def _as_int(value, name: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be an integer, got {value!r}") from None


def _as_float(value, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be a number, got {value!r}") from None


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge config-file values and flags (flags win) into a RunConfig."""
    values = _load_config_file(args.config) if args.config else {}

    command = args.command or values.get("command")
    if command is None:
        raise UsageError("no command given (positional argument or "
                         "'command = ...' in the config file)")

    merged = {
        "command": str(command),
        "lattice_size": _as_int(values.get("length", 6), "length"),
        "model": str(values.get("model", "hopping")),
        "model_params": dict(values.get("model_params", {})),
        "beta": _as_float(values.get("beta", 1.0), "beta"),
        "seed": _as_int(values.get("seed", 0), "seed"),
        "output_path": values.get("out"),
        "samples": _as_int(values.get("samples", 200), "samples"),
        "region_sites": (_parse_region_text(values["region"])
                         if "region" in values else None),
    }
    if args.length is not None:
        merged["lattice_size"] = args.length
    if args.model is not None:
        merged["model"] = args.model
    if args.beta is not None:
        merged["beta"] = args.beta
    if args.seed is not None:
        merged["seed"] = args.seed
    if args.out is not None:
        merged["output_path"] = args.out
    if args.samples is not None:
        merged["samples"] = args.samples
    if args.region is not None:
        merged["region_sites"] = _parse_region_text(args.region)
    return RunConfig(**merged)


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------


def _model(cfg: RunConfig):
    try:
        return build_model(cfg.model, cfg.lattice_size, **cfg.model_params)
    except TypeError:
        raise UsageError(f"model {cfg.model!r} does not accept parameters "
                         f"{sorted(cfg.model_params)}") from None


def _gibbs(cfg: RunConfig):
    potential = _model(cfg)
    return gibbs_state(total_hamiltonian(potential), cfg.beta), potential


def run_validate(cfg: RunConfig) -> list[ReportRecord]:
    report = validate_potential(_model(cfg))
    label = Region.full(cfg.lattice_size).label()
    return [ReportRecord(name, label, cfg.beta, value, report.tolerance,
                         value <= report.tolerance, cfg.seed)
            for name, value in report.residuals.items()]


def run_gibbs(cfg: RunConfig) -> list[ReportRecord]:
    state, potential = _gibbs(cfg)
    rng = np.random.default_rng(cfg.seed)
    pairs = random_pair_panel(cfg.lattice_size, 100, rng)
    kms = kms_residual(state, total_hamiltonian(potential), cfg.beta, pairs)
    even = state.evenness_defect()
    label = Region.full(cfg.lattice_size).label()
    return [
        ReportRecord("kms_residual", label, cfg.beta, kms, 1e-10,
                     kms <= 1e-10, cfg.seed),
        ReportRecord("evenness", label, cfg.beta, even, 1e-12,
                     even <= 1e-12, cfg.seed),
    ]


def run_perturb(cfg: RunConfig) -> list[ReportRecord]:
    region = cfg.region()
    state, potential = _gibbs(cfg)
    phi = perturbed_state(potential, cfg.beta, region)
    product = product_check(phi, region)
    h_i = local_hamiltonian(potential, region).matrix
    bound = 2.0 * abs(cfg.beta) * float(np.linalg.norm(h_i, 2))
    forward = relative_entropy(state, phi).value
    backward = relative_entropy(phi, state).value
    slack = bound - max(forward, backward)
    even = phi.evenness_defect()
    label = region.label()
    return [
        ReportRecord("decoupled_even", label, cfg.beta, even, 1e-12,
                     even <= 1e-12, cfg.seed),
        ReportRecord("product_property", label, cfg.beta, product, 1e-9,
                     product <= 1e-9, cfg.seed),
        ReportRecord("entropy_bound", label, cfg.beta, slack, 1e-8,
                     slack >= -1e-8, cfg.seed),
    ]


def run_entropy(cfg: RunConfig) -> list[ReportRecord]:
    region = cfg.region()
    state, potential = _gibbs(cfg)
    phi = perturbed_state(potential, cfg.beta, region)
    rel = relative_entropy(phi, state).value
    sc = conditional_entropy(state, region)
    restricted = restricted_relative_entropy(phi, state,
                                             region.complement()).value
    mono = rel - restricted
    label = region.label()
    return [
        ReportRecord("relative_entropy", label, cfg.beta, rel, 1e-12,
                     rel >= -1e-12, cfg.seed),
        ReportRecord("conditional_entropy", label, cfg.beta, sc, 1e-12,
                     sc <= 1e-12, cfg.seed),
        ReportRecord("monotonicity", label, cfg.beta, mono, 1e-10,
                     mono >= -1e-10, cfg.seed),
    ]


def run_lts(cfg: RunConfig) -> list[ReportRecord]:
    region = cfg.region()
    state, potential = _gibbs(cfg)
    report = lts_check(state, potential, region, cfg.beta,
                       samples=cfg.samples, seed=cfg.seed)
    return from_checks(report.checks, region.label(), cfg.beta, cfg.seed)


def run_prop4(cfg: RunConfig) -> list[ReportRecord]:
    region = cfg.region()
    report = prop4_pipeline(_model(cfg), cfg.beta, region)
    return from_checks(report.checks, region.label(), cfg.beta, cfg.seed)


def run_ssb_probe(cfg: RunConfig) -> list[ReportRecord]:
    region = cfg.region()
    state, _ = _gibbs(cfg)
    label = region.label()
    records = []

    asym = grading_asymmetry(state, region).quantity
    records.append(ReportRecord("grading_asymmetry", label, cfg.beta, asym,
                                1e-10, asym <= 1e-10, cfg.seed))

    outside = region.complement()
    if not outside.is_empty:
        real_part = purely_imaginary_check(state, odd_direction(region),
                                           odd_direction(outside))
        records.append(ReportRecord("odd_correlation_real", label, cfg.beta,
                                    real_part, 1e-12, real_part <= 1e-12,
                                    cfg.seed))

        # clustering: correlations of a region observable should not grow
        # with distance; compare the nearest and farthest outside sites
        observable = odd_direction(region)
        by_distance = sorted(
            outside.sites,
            key=lambda s: min(abs(s - r) for r in region.sites))
        near = Region.of([by_distance[0]], cfg.lattice_size)
        far = Region.of([by_distance[-1]], cfg.lattice_size)
        c_near = cluster_coefficient(state, observable, near).quantity
        c_far = cluster_coefficient(state, observable, far).quantity
        decay = c_far - c_near
        records.append(ReportRecord("cluster_decay", label, cfg.beta, decay,
                                    1e-12, decay <= 1e-12, cfg.seed))

    rng = np.random.default_rng(cfg.seed)
    cases = []
    for _ in range(50):
        raw = rng.standard_normal((car.dim(cfg.lattice_size),) * 2)
        raw = raw + 1j * rng.standard_normal(raw.shape)
        dens = raw @ raw.conj().T
        dens = dens / float(np.real(np.trace(dens)))
        dens = 0.5 * (dens + car.theta_matrix(dens, cfg.lattice_size))
        even_state = type(state)(dens, label="scan-even", validate=False)
        a = car.random_element(region, rng, parity=1, hermitian=True)
        b = car.random_element(outside if not outside.is_empty else region,
                               rng, parity=1, hermitian=True)
        cases.append((even_state, a, b))
    scan = scan_odd_correlations(cases)
    count = float(scan["violations"])
    records.append(ReportRecord("odd_scan", label, cfg.beta, count, 0.0,
                                scan["violations"] == 0, cfg.seed))
    return records


def run_remark2(cfg: RunConfig) -> list[ReportRecord]:
    state, _ = _gibbs(cfg)
    lattice = cfg.lattice_size
    site0 = Region.of([0], lattice)
    comp = site0.complement()
    vector_state = remark2_construct(state)

    target = 0.5 * (state.density + car.theta_matrix(state.density, lattice))
    expected = car.monomial_basis(comp).expectations(target)
    got = restrict(vector_state, comp).values
    defect = float(np.max(np.abs(expected - got)))

    u = odd_direction(site0)
    odd_expectation = float(np.real(vector_state.expectation(u.matrix)))
    asym = grading_asymmetry(vector_state, site0).quantity

    label = site0.label()
    return [
        ReportRecord("restriction_residual", label, cfg.beta, defect, 1e-10,
                     defect <= 1e-10, cfg.seed),
        ReportRecord("odd_expectation", label, cfg.beta, odd_expectation,
                     1e-10, abs(odd_expectation - 1.0) <= 1e-10, cfg.seed),
        ReportRecord("vector_asymmetry", label, cfg.beta, asym, 1e-10,
                     abs(asym - 1.0) <= 1e-10, cfg.seed),
    ]


DISPATCH = {
    "validate": run_validate,
    "gibbs": run_gibbs,
    "perturb": run_perturb,
    "entropy": run_entropy,
    "lts": run_lts,
    "prop4": run_prop4,
    "ssb-probe": run_ssb_probe,
    "remark2": run_remark2,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermichain",
        description="Finite fermion chains: models, states, and checks.")
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="what to run (may also come from the config file)")
    parser.add_argument("--config", metavar="PATH",
                        help="INI config file with [run] and [model] sections")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="seed for every randomized panel (default 0)")
    parser.add_argument("--beta", type=float, metavar="X",
                        help="inverse temperature (default 1.0)")
    parser.add_argument("--region", metavar="\"i,j,...\"",
                        help="probed sites, comma separated")
    parser.add_argument("--length", type=int, metavar="L",
                        help=f"chain length, at most {MAX_SITES} (default 6)")
    parser.add_argument("--model", metavar="NAME",
                        help="model preset: " + ", ".join(sorted(MODELS)))
    parser.add_argument("--samples", type=int, metavar="N",
                        help="sample count for the lts verb (default 200)")
    parser.add_argument("--out", metavar="PATH",
                        help="write the report here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"fermichain: error: {exc}", file=sys.stderr)
        return 2

    try:
        records = DISPATCH[cfg.command](cfg)
        status = 0 if all_passed(records) else 1
    except UsageError as exc:
        print(f"fermichain: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        # computation broke down: deterministic diagnostic record in the
        # report, the reason on stderr
        label = ",".join(str(s) for s in cfg.region_sites or ())
        records = [ReportRecord("error", label, cfg.beta, 0.0, 0.0, False,
                                cfg.seed)]
        print(f"fermichain: error: {exc}", file=sys.stderr)
        status = 1

    text = emit_report(records, cfg.output_path)
    if cfg.output_path is None:
        sys.stdout.write(text)
    passed = sum(1 for r in records if r.passed)
    print(f"fermichain: {cfg.command}: {passed}/{len(records)} checks passed",
          file=sys.stderr)
    return status
