"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Experiment runner: configuration, truth and data synthesis,
the method x initialization arms, theory checks over saved runs,
and single forward solves.

Truth regularity per case (alpha, a):
    case 1: (2, 0.5)    case 2: (3.2, 0.5)    case 3: (2, 1)
Initial draws use the prior alpha with a = 0.5 (EKI) or a = 1 (TEKI),
unless `prior.a` is set.

Classes:
    class ExperimentConfig
    class ExperimentSetup

Functions:
    === CONFIG ===
    def config_to_dict(
        cfg: ExperimentConfig
        ) -> dict[str, str]
    def load_config(
        file_name: str,
        overrides: dict[str, str] | None = None,
        print_log: bool = True
        ) -> ExperimentConfig
    def prior_spec(
        cfg: ExperimentConfig
        ) -> CovarianceSpec
    === BUILD ===
    def build_truth(
        cfg: ExperimentConfig
        ) -> SpectralField
    def build_model(
        cfg: ExperimentConfig,
        spec: CovarianceSpec
        ) -> tuple[ForwardModel, list[tuple[float, float]], list[tuple[float, float]]]
    def build_problem(
        cfg: ExperimentConfig
        ) -> ExperimentSetup
    def build_initial_ensemble(
        cfg: ExperimentConfig
        ) -> Ensemble
    === RUN ===
    def run_experiment(
        cfg: ExperimentConfig,
        print_log: bool = True,
        capture_log: bool = False
        ) -> tuple[RunRecord, dict[str, str]]
    def run_matrix(
        cfg: ExperimentConfig,
        print_log: bool = True
        ) -> list[dict[str, str]]
    def check_trajectory(
        run_dir: str,
        print_log: bool = True
        ) -> list[CheckReport]
    def forward_once(
        model_name: str,
        field_file: str,
        cfg: ExperimentConfig | None = None,
        output_file: str | None = None,
        print_log: bool = True
        ) -> np.ndarray
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, replace

import numpy as np

import newteki
import newteki.console as NewtCons
import newteki.utility as NewtUtil
import newteki.files as NewtFiles
import newteki.field as NewtField
import newteki.problem as NewtProb
import newteki.kalman as NewtKalman
import newteki.flow as NewtFlow
import newteki.models as NewtModels
import newteki.theory as NewtTheory
from newteki.field import CovarianceSpec, SpectralField
from newteki.problem import ForwardModel, InverseProblem
from newteki.kalman import Ensemble
from newteki.flow import RunRecord
from newteki.theory import CheckReport

CASE_TRUTH = {1: (2.0, 0.5), 2: (3.2, 0.5), 3: (2.0, 1.0)}
INIT_DECAY = {"eki": 0.5, "teki": 1.0}
INIT_KINDS = ("random", "kl-basis")
MODEL_KINDS = ("eikonal", "darcy", "linear-toy")

SUMMARY_HEADER = [
    "arm", "method", "init", "status", "iterations", "final_t",
    "final_rel_error", "final_misfit", "noise_level", "below_noise",
]

MANIFEST_FILE = "manifest.txt"
TRAJECTORY_FILE = "trajectory.npz"


@dataclass(frozen=True)
class ExperimentConfig:
    """ ## Resolved experiment settings; one field per config key. """

    case: int = 1
    method: str = "teki"
    init: str = "random"
    model: str = "eikonal"
    seed: int = 0
    ensemble_size: int = 100
    iterations: int = 23
    h0: float = 0.02
    delta: float = 0.05
    gamma: float = 0.01
    lam: float = 1.0
    prior_alpha: float = 2.0
    prior_tau: float = 15.0
    prior_a: float | None = None
    prior_kmax: int = 32
    grid_n: int = 100
    snapshot_iters: tuple[int, ...] = (1, 5, 11, 17, 23)
    output_dir: str = "output"
    scheme: str = "flow"
    perturb: str = "none"
    n_sources: int = 5
    n_obs_side: int = 8
    n_jobs: int = 0
    discrepancy_stop: bool = False
    record_trajectory: bool = False
    t_end: float | None = None
    mollifier_width: float = 0.0
    darcy_dirichlet_bottom: float = 100.0
    darcy_flux_left: float = 500.0
    darcy_source: float = 1.0

    def __post_init__(self) -> None:
        location = "Newt.experiment.ExperimentConfig"

        choices = (
            ("case", self.case, tuple(CASE_TRUTH)),
            ("method", self.method, NewtFlow.FLOW_KINDS),
            ("init", self.init, INIT_KINDS),
            ("model", self.model, MODEL_KINDS),
            ("scheme", self.scheme, NewtFlow.SCHEMES),
            ("perturb", self.perturb, NewtKalman.PERTURB_MODES),
        )
        for key, value, allowed in choices:
            if value not in allowed:
                NewtCons.error_msg(
                    f"Unknown {key}: {value}",
                    f"Allowed: {', '.join(str(item) for item in allowed)}",
                    location=f"{location} : {key}"
                )

        if self.ensemble_size < 2:
            NewtCons.error_msg(
                f"ensemble_size must be >= 2, got {self.ensemble_size}",
                location=f"{location} : ensemble_size"
            )
        if self.iterations < 0 or self.seed < 0 or self.n_sources < 1 or self.n_obs_side < 1:
            NewtCons.error_msg(
                "iterations and seed must be >= 0, n_sources and n_obs_side >= 1",
                f"Got iterations={self.iterations}, seed={self.seed}, "
                f"n_sources={self.n_sources}, n_obs_side={self.n_obs_side}",
                location=f"{location} : counts"
            )
        NewtCons.validate_positive(
            np.array([self.h0, self.delta, self.gamma, self.lam, self.prior_tau]),
            location=f"{location} : h0, delta, gamma, lambda, prior.tau"
        )


def _parse_float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        NewtCons.error_msg(
            f"Not a number for {key}: {text}",
            location="Newt.experiment.load_config : float"
        )
        return float("nan")


def _parse_int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        NewtCons.error_msg(
            f"Not an integer for {key}: {text}",
            location="Newt.experiment.load_config : int"
        )
        return 0


def _parse_optional_float(text: str, key: str) -> float | None:
    if text.strip().lower() in ("", "none", "auto"):
        return None
    return _parse_float(text, key)


# key in the file -> (field name, parser)
CONFIG_KEYS = {
    "case": ("case", _parse_int),
    "method": ("method", lambda text, key: text),
    "init": ("init", lambda text, key: text),
    "model": ("model", lambda text, key: text),
    "seed": ("seed", _parse_int),
    "ensemble_size": ("ensemble_size", _parse_int),
    "iterations": ("iterations", _parse_int),
    "h0": ("h0", _parse_float),
    "delta": ("delta", _parse_float),
    "gamma": ("gamma", _parse_float),
    "lambda": ("lam", _parse_float),
    "prior.alpha": ("prior_alpha", _parse_float),
    "prior.tau": ("prior_tau", _parse_float),
    "prior.a": ("prior_a", _parse_optional_float),
    "prior.kmax": ("prior_kmax", _parse_int),
    "grid_n": ("grid_n", _parse_int),
    "snapshot_iters": ("snapshot_iters", lambda text, key: tuple(NewtUtil.parse_int_list(text, location=key))),
    "output_dir": ("output_dir", lambda text, key: text),
    "scheme": ("scheme", lambda text, key: text),
    "perturb": ("perturb", lambda text, key: text),
    "n_sources": ("n_sources", _parse_int),
    "n_obs_side": ("n_obs_side", _parse_int),
    "n_jobs": ("n_jobs", _parse_int),
    "discrepancy_stop": ("discrepancy_stop", lambda text, key: NewtUtil.parse_bool(text, location=key)),
    "record_trajectory": ("record_trajectory", lambda text, key: NewtUtil.parse_bool(text, location=key)),
    "t_end": ("t_end", _parse_optional_float),
    "mollifier_width": ("mollifier_width", _parse_float),
    "darcy.dirichlet_bottom": ("darcy_dirichlet_bottom", _parse_float),
    "darcy.flux_left": ("darcy_flux_left", _parse_float),
    "darcy.source": ("darcy_source", _parse_float),
}


@dataclass(frozen=True, eq=False)
class ExperimentSetup:
    """ ## Everything shared by the arms of one case: problem, truth, noise and geometry. """

    problem: InverseProblem
    truth: SpectralField
    eta: np.ndarray
    noise_norm: float
    sources: list[tuple[float, float]]
    obs_points: list[tuple[float, float]]


# === CONFIG ===

def _format_value(
        value: object
        ) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return NewtUtil.format_float(value)
    if isinstance(value, tuple):
        return ",".join(str(item) for item in value)
    return str(value)


def config_to_dict(
        cfg: ExperimentConfig
        ) -> dict[str, str]:
    """ ## Config as `key -> text`, in the key order of the config file format. """

    return {key: _format_value(getattr(cfg, name)) for key, (name, _) in CONFIG_KEYS.items()}


def load_config(
        file_name: str,
        overrides: dict[str, str] | None = None,
        print_log: bool = True
        ) -> ExperimentConfig:
    """ ## Read a `key=value` experiment config; missing keys take their defaults.

    Keys starting with `manifest.` are ignored, so a run manifest
    is itself a valid config.

    Args:
        file_name (str):
            Path to the config file.
        overrides (dict[str, str] | None):
            Entries replacing the file's values (e.g. from the command line).
        print_log (bool):
            If True, prints the path and the number of keys read.<br>
            Defaults to True.

    Returns:
        out (ExperimentConfig):
            The resolved config.

    Raises:
        SystemExit:
            On a missing file, an unknown key or an unparsable value.
    """

    entries = NewtFiles.read_keyvalue_from_file(file_name, print_log=False)
    entries = {key: value for key, value in entries.items() if not key.startswith("manifest.")}
    if overrides:
        entries.update(overrides)

    NewtUtil.check_dict_keys(
        entries, set(CONFIG_KEYS), allow_missing=True,
        location=f"Newt.experiment.load_config : {file_name}"
    )

    kwargs = {}
    for key, value in entries.items():
        name, parser = CONFIG_KEYS[key]
        kwargs[name] = parser(value, key)

    if print_log:
        print("[Newt.experiment.load_config] Loaded config:")
        print(file_name)
        print(f"(keys={len(entries)})")

    return ExperimentConfig(**kwargs)


def prior_spec(
        cfg: ExperimentConfig
        ) -> CovarianceSpec:
    return CovarianceSpec(cfg.prior_alpha, cfg.prior_tau, cfg.prior_kmax)


# === BUILD ===

def build_truth(
        cfg: ExperimentConfig
        ) -> SpectralField:
    """ ## One truth sample with the case's (alpha, a), from the `truth` stream.

    The coefficients are returned under the inversion prior's spec.
    """

    alpha, a = CASE_TRUTH[cfg.case]
    truth_spec = CovarianceSpec(alpha, cfg.prior_tau, cfg.prior_kmax)
    draw = NewtField.sample_cm(truth_spec, a, NewtUtil.make_rng(cfg.seed, "truth"), warn=False)
    return NewtField.change_spec(draw, prior_spec(cfg))


def build_model(
        cfg: ExperimentConfig,
        spec: CovarianceSpec
        ) -> tuple[ForwardModel, list[tuple[float, float]], list[tuple[float, float]]]:
    """ ## Forward model of the config, with its source and observation coordinates.

    Sources come from the `sources` stream and exist for the eikonal model only.
    """

    obs_points = NewtModels.default_obs_points(cfg.n_obs_side)

    if cfg.model == "eikonal":
        sources = NewtModels.random_sources(cfg.n_sources, NewtUtil.make_rng(cfg.seed, "sources"))
        eikonal_cfg = NewtModels.EikonalConfig(
            n=cfg.grid_n, sources=sources, obs_points=obs_points,
            gamma=cfg.gamma, mollifier_width=cfg.mollifier_width
        )
        return NewtModels.EikonalModel(spec, eikonal_cfg), sources, obs_points

    if cfg.model == "darcy":
        darcy_cfg = NewtModels.DarcyConfig(
            n=cfg.grid_n, source_value=cfg.darcy_source,
            dirichlet_bottom=cfg.darcy_dirichlet_bottom, flux_left=cfg.darcy_flux_left,
            obs_points=obs_points, mollifier_width=cfg.mollifier_width
        )
        return NewtModels.DarcyModel(spec, darcy_cfg), [], obs_points

    return NewtProb.PointObservationModel(obs_points, spec), [], obs_points


def build_problem(
        cfg: ExperimentConfig
        ) -> ExperimentSetup:
    """ ## Truth, forward model and synthesized data y = G(truth) + eta, eta ~ N(0, gamma^2 I).

    The noise comes from the `noise` stream, so every arm of a case sees the same data.
    """

    spec = prior_spec(cfg)
    model, sources, obs_points = build_model(cfg, spec)
    truth = build_truth(cfg)

    noise = NewtProb.NoiseSpec.from_scalar(cfg.gamma, model.obs_dim)
    y, eta = NewtProb.synthesize_data(model, truth, noise, NewtUtil.make_rng(cfg.seed, "noise"))
    problem = InverseProblem(model, y, noise, spec, cfg.lam)

    return ExperimentSetup(
        problem=problem,
        truth=truth,
        eta=eta,
        noise_norm=NewtProb.noise_level(problem, truth, eta),
        sources=sources,
        obs_points=obs_points,
    )


def build_initial_ensemble(
        cfg: ExperimentConfig
        ) -> Ensemble:
    """ ## Initial ensemble: random draws or the leading KL eigenfunctions.

    `init=random` draws J fields with decay a from the `init` stream.
    `init=kl-basis` takes phi_k for the first J modes of `field.mode_order`.

    Raises:
        SystemExit:
            If kl-basis asks for more members than there are modes.
    """

    spec = prior_spec(cfg)
    size = cfg.ensemble_size

    if cfg.init == "kl-basis":
        order = NewtField.mode_order(spec)
        if size > len(order):
            NewtCons.error_msg(
                f"ensemble_size={size} exceeds the {len(order)} available modes",
                location="Newt.experiment.build_initial_ensemble : kl-basis"
            )
        return Ensemble.from_members([NewtField.unit_mode(spec, k) for k in order[:size]])

    a = cfg.prior_a if cfg.prior_a is not None else INIT_DECAY[cfg.method]
    rng = NewtUtil.make_rng(cfg.seed, "init")
    members = [NewtField.sample_cm(spec, a, rng, warn=(j == 0)) for j in range(size)]
    return Ensemble.from_members(members)


# === RUN ===

def _run_config(
        cfg: ExperimentConfig
        ) -> NewtFlow.RunConfig:
    return NewtFlow.RunConfig(
        iterations=cfg.iterations,
        h0=cfg.h0,
        delta=cfg.delta,
        snapshot_iters=cfg.snapshot_iters,
        n_jobs=cfg.n_jobs,
        t_end=cfg.t_end,
        discrepancy_stop=cfg.discrepancy_stop,
        record_trajectory=cfg.record_trajectory,
        scheme=cfg.scheme,
        perturb=cfg.perturb,
    )


def _format_points(
        points: list[tuple[float, float]]
        ) -> str:
    return ";".join(f"{NewtUtil.format_float(x1)}:{NewtUtil.format_float(x2)}" for x1, x2 in points)


def _save_vector(
        file_name: str,
        values: np.ndarray
        ) -> None:
    rows = [[NewtUtil.format_float(value)] for value in values]
    NewtFiles.save_csv_to_file(file_name, rows, print_log=False)


def run_experiment(
        cfg: ExperimentConfig,
        print_log: bool = True,
        capture_log: bool = False
        ) -> tuple[RunRecord, dict[str, str]]:
    """ ## Synthesize data, run one method/initialization arm and write its files.

    Files in `cfg.output_dir`:
        metrics.csv, mean_iter<k>.csv, truth.csv, data.csv, noise.csv,
        manifest.txt, and trajectory.npz when `record_trajectory` is on.

    The manifest holds the resolved config plus `manifest.*` entries
    (sources, observation points, noise level, version, wall time, status);
    it loads back as a config and replays the run.

    Args:
        cfg (ExperimentConfig):
            Resolved config.
        print_log (bool):
            If True, prints progress.<br>
            Defaults to True.
        capture_log (bool):
            If True, also writes the console output to `run_log.txt`.<br>
            Defaults to False.

    Returns:
        out (tuple[RunRecord, dict[str, str]]):
            The run record and the manifest entries.

    Raises:
        SystemExit:
            If building the problem fails; the manifest is then written with status=failed.
    """

    out_dir = cfg.output_dir
    manifest: dict[str, str] = dict(config_to_dict(cfg))
    manifest_file = os.path.join(out_dir, MANIFEST_FILE)
    started = time.perf_counter()

    setup_data = NewtFiles.setup_logging(out_dir) if capture_log else None
    try:
        if print_log:
            print(f"[Newt.experiment.run_experiment] case={cfg.case} method={cfg.method} "
                  f"init={cfg.init} model={cfg.model} seed={cfg.seed}")

        try:
            setup = build_problem(cfg)
            initial = build_initial_ensemble(cfg)
        except SystemExit:
            manifest["manifest.status"] = "failed"
            manifest["manifest.failure"] = "setup"
            NewtFiles.save_keyvalue_to_file(manifest_file, manifest, print_log=False)
            raise

        rng = NewtUtil.make_rng(cfg.seed, "perturb")
        record = NewtFlow.run(
            initial, setup.problem, cfg.method, _run_config(cfg),
            u_truth=setup.truth, noise_norm=setup.noise_norm,
            print_log=print_log, rng=rng
        )

        NewtFlow.save_run_record(record, out_dir, print_log=print_log)
        for iteration, snapshot in sorted(record.snapshots.items()):
            NewtField.save_grid_field(
                os.path.join(out_dir, f"mean_iter{iteration}.csv"),
                NewtField.synthesize(snapshot, cfg.grid_n), print_log=False
            )
        NewtField.save_grid_field(
            os.path.join(out_dir, "truth.csv"),
            NewtField.synthesize(setup.truth, cfg.grid_n), print_log=False
        )
        _save_vector(os.path.join(out_dir, "data.csv"), setup.problem.y)
        _save_vector(os.path.join(out_dir, "noise.csv"), setup.eta)

        if cfg.record_trajectory and record.trajectory:
            NewtFlow.save_trajectory(record, os.path.join(out_dir, TRAJECTORY_FILE), print_log=print_log)

        manifest.update({
            "manifest.version": newteki.__version__,
            "manifest.status": "failed" if record.failed else "ok",
            "manifest.failure": record.failure_note,
            "manifest.stop_reason": record.stop_reason,
            "manifest.rows": str(len(record.rows)),
            "manifest.noise_norm": NewtUtil.format_float(setup.noise_norm),
            "manifest.sources": _format_points(setup.sources),
            "manifest.obs_points": _format_points(setup.obs_points),
            "manifest.wall_time": NewtUtil.format_float(time.perf_counter() - started),
        })
        NewtFiles.save_keyvalue_to_file(manifest_file, manifest, print_log=False)

        if print_log:
            final = record.rows[-1] if record.rows else None
            print("[Newt.experiment.run_experiment] Finished:")
            print(out_dir)
            if final is not None:
                print(f"(rows={len(record.rows)}, misfit={final.misfit:.6g}, "
                      f"noise_level={final.noise_level:.6g}, rel_error={final.rel_error:.6g})")

    finally:
        if setup_data is not None:
            NewtFiles.cleanup_logging(setup_data, os.path.join(out_dir, "run_log.txt"))

    return record, manifest


def run_matrix(
        cfg: ExperimentConfig,
        print_log: bool = True
        ) -> list[dict[str, str]]:
    """ ## Run {eki, teki} x {random, kl-basis} on shared truth and data; write `summary.csv`.

    Each arm writes into `<output_dir>/<method>_<init>`. A failing arm is
    recorded with status=failed and does not stop the others.

    Returns:
        out (list[dict[str, str]]):
            One summary row per arm, keyed by `SUMMARY_HEADER`.
    """

    summary: list[dict[str, str]] = []

    for method in NewtFlow.FLOW_KINDS:
        for init in INIT_KINDS:
            arm = f"{method}_{init}"
            arm_cfg = replace(cfg, method=method, init=init, output_dir=os.path.join(cfg.output_dir, arm))
            row = {key: "" for key in SUMMARY_HEADER}
            row.update({"arm": arm, "method": method, "init": init})

            if print_log:
                NewtCons._divider()

            try:
                record, _ = run_experiment(arm_cfg, print_log=print_log)
            except SystemExit:
                row["status"] = "failed"
                summary.append(row)
                continue

            final = record.rows[-1]
            row.update({
                "status": "failed" if record.failed else "ok",
                "iterations": str(final.iteration),
                "final_t": NewtUtil.format_float(final.t),
                "final_rel_error": NewtUtil.format_float(final.rel_error),
                "final_misfit": NewtUtil.format_float(final.misfit),
                "noise_level": NewtUtil.format_float(final.noise_level),
                "below_noise": "true" if final.misfit < final.noise_level else "false",
            })
            summary.append(row)

    rows = [SUMMARY_HEADER] + [[row[key] for key in SUMMARY_HEADER] for row in summary]
    summary_file = os.path.join(cfg.output_dir, "summary.csv")
    NewtFiles.save_csv_to_file(summary_file, rows, print_log=False)

    if print_log:
        print("[Newt.experiment.run_matrix] Saved summary:")
        print(summary_file)
        print(f"(arms={len(summary)})")

    return summary


def check_trajectory(
        run_dir: str,
        print_log: bool = True
        ) -> list[CheckReport]:
    """ ## Run the theory checks on a saved run and write `checks.txt`.

    Needs `manifest.txt` and `trajectory.npz` (run with record_trajectory=true).
    Span and orthogonal invariance are checked for every run; the collapse
    bound for the TEKI flow; the KKT, convergence, Riccati and a-priori checks for
    TEKI on the linear-toy model.

    Returns:
        out (list[CheckReport]):
            The reports in the order written.
    """

    cfg = load_config(os.path.join(run_dir, MANIFEST_FILE), print_log=False)
    times, trajectory = NewtFlow.load_trajectory(os.path.join(run_dir, TRAJECTORY_FILE))

    spec = prior_spec(cfg)
    initial = Ensemble(trajectory[0], spec)
    basis = NewtTheory.span_basis(initial)

    residual = max(NewtKalman.subspace_residual(Ensemble(c, spec), basis.a_cols) for c in trajectory)
    drift = NewtTheory.orthogonal_drift(trajectory, basis)
    scale = max(1.0, float(np.abs(trajectory[0]).max()))
    reports = [
        CheckReport("subspace_residual", residual, residual <= 1e-8),
        CheckReport("orthogonal_drift", drift / scale, drift / scale <= 1e-9),
    ]

    if cfg.method == "teki" and cfg.scheme == "flow":
        lambda_m, _ = NewtTheory.lambda_bounds(basis)
        cov_norms = np.array([NewtFlow.covariance_norm(Ensemble(c, spec)) for c in trajectory])
        reports.append(NewtTheory.collapse_bound_check(times, cov_norms, cfg.lam * lambda_m))

    if cfg.method == "teki" and cfg.model == "linear-toy" and cfg.scheme == "flow":
        problem = build_problem(cfg).problem
        restriction = NewtTheory.kkt_solutions(problem, basis)
        identity = NewtTheory.map_identity_check(restriction, basis)
        reports.extend([
            CheckReport("map_identity", identity, identity <= 1e-10 * max(1.0, float(np.linalg.norm(restriction.u_dagger)))),
            NewtTheory.convergence_bound_check(times, trajectory, restriction, basis),
            NewtTheory.riccati_check(times, trajectory, restriction, basis),
            NewtTheory.apriori_bound_check(trajectory, problem),
        ])

    text = "\n\n".join(NewtTheory.format_report(report) for report in reports)
    checks_file = os.path.join(run_dir, "checks.txt")
    NewtFiles.save_text_to_file(checks_file, text, print_log=False)

    if print_log:
        for report in reports:
            status = "ok" if report.passed else "FAILED"
            print(f"[Newt.experiment.check_trajectory] {report.name}: {status} "
                  f"(worst_ratio={report.worst_ratio:.6g})")

    return reports


def forward_once(
        model_name: str,
        field_file: str,
        cfg: ExperimentConfig | None = None,
        output_file: str | None = None,
        print_log: bool = True
        ) -> np.ndarray:
    """ ## One forward solve on a log-coefficient GridField read from CSV.

    The field is u on the grid (log-slowness for eikonal, log-permeability
    for darcy, the field itself for linear-toy). Geometry and boundary data
    come from `cfg` (defaults when None), with the grid size taken from the file.
    For linear-toy the grid is analyzed onto the prior modes (kmax capped at n / 2)
    and read out by `PointObservationModel`, the same map the inversion uses.

    Returns:
        out (np.ndarray):
            The observation vector; also written one value per line to `output_file`.
    """

    if model_name not in MODEL_KINDS:
        NewtCons.error_msg(
            f"Unknown model: {model_name}",
            f"Allowed: {', '.join(MODEL_KINDS)}",
            location="Newt.experiment.forward_once : model"
        )

    grid = NewtField.read_grid_field(field_file, print_log=print_log)
    cfg = replace(cfg or ExperimentConfig(), model=model_name, grid_n=grid.n)
    obs_points = NewtModels.default_obs_points(cfg.n_obs_side)

    if model_name == "eikonal":
        sources = NewtModels.random_sources(cfg.n_sources, NewtUtil.make_rng(cfg.seed, "sources"))
        values = NewtModels.eikonal_observe(grid, NewtModels.EikonalConfig(
            n=grid.n, sources=sources, obs_points=obs_points,
            gamma=cfg.gamma, mollifier_width=cfg.mollifier_width
        ))
    elif model_name == "darcy":
        values = NewtModels.darcy_observe(grid, NewtModels.DarcyConfig(
            n=grid.n, source_value=cfg.darcy_source,
            dirichlet_bottom=cfg.darcy_dirichlet_bottom, flux_left=cfg.darcy_flux_left,
            obs_points=obs_points, mollifier_width=cfg.mollifier_width
        ))
    else:
        # grid file resolves at most n / 2 modes per axis
        spec = CovarianceSpec(cfg.prior_alpha, cfg.prior_tau, min(cfg.prior_kmax, grid.n // 2))
        model = NewtProb.PointObservationModel(obs_points, spec)
        values = model.apply(NewtField.analyze(grid, spec))

    if output_file:
        _save_vector(output_file, values)

    if print_log:
        print("[Newt.experiment.forward_once] Forward solve done:")
        print(f"(model={model_name}, n={grid.n}, obs_dim={values.size})")

    return values
