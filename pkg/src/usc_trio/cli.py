"""Command-line front end: ``simulate``, ``sweep`` and ``verify``.

Data (CSV or JSON lines) goes to ``out_path`` or standard output; every
diagnostic goes to standard error.

Exit codes: 0 success, 1 verification failure, 2 config error,
3 physicality violation.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from . import analysis, fock_oracle, milburn, model, symplectic
from .config import ConfigError, RunConfig, load_config
from .isotropic import IsotropicParams, iso_t_steady

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_PHYSICAL = 0, 1, 2, 3

#: Minimal symplectic eigenvalue allowed before the state is declared unphysical.
PHYSICALITY_TOL = 1e-9

GROUP_COLUMNS = {
    "excitations": ("N1", "N2", "N3"),
    "polygamy": ("Nab", "Nac", "Nbc", "Na_bc", "Nb_ac", "Nc_ab", "delta_a", "delta_b", "delta_c"),
    "entanglement": ("E_ab", "E_ac", "E_bc", "E_a_bc", "E_b_ac", "E_c_ab", "nu_min"),
    "covariance": tuple(
        f"sigma_{part}_{n}{m}" for n in range(6) for m in range(n, 6) for part in ("re", "im")
    ),
}
FOCK_COLUMNS = ("fock_N1", "fock_N2", "fock_N3", "fock_E_ab", "fock_E_ac", "fock_E_bc")
SERIES_COLUMNS = ("series_max_err",)


class PhysicalityViolation(RuntimeError):
    def __init__(self, where: str, detail: str):
        super().__init__(f"physicality violation at {where}: {detail}")


def _log(msg: str) -> None:
    print(f"usc-trio: {msg}", file=sys.stderr)


def worker_count() -> int:
    """Worker cap from USC_TRIO_THREADS (positive integer), default min(4, cpus)."""
    raw = os.environ.get("USC_TRIO_THREADS")
    if raw is None or raw.strip() == "":
        return max(1, min(4, os.cpu_count() or 1))
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"USC_TRIO_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"USC_TRIO_THREADS must be a positive integer, got {raw!r}")
    return n


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def data_columns(cfg: RunConfig) -> List[str]:
    cols: List[str] = []
    for group in cfg.outputs:
        cols.extend(GROUP_COLUMNS[group])
    if cfg.fock_oracle:
        cols.extend(FOCK_COLUMNS)
    if cfg.series_oracle and not cfg.schrodinger_limit:
        cols.extend(SERIES_COLUMNS)
    return cols


def state_row(sigma: np.ndarray, outputs: Sequence[str], where: str) -> Dict[str, float]:
    """All requested quantities of one covariance matrix.

    Raises:
        PhysicalityViolation: when the smallest symplectic eigenvalue falls
            below 1 - 1e-9 or a derived quantity is unphysical.
    """
    try:
        nus = analysis.symplectic_spectrum(sigma)
        if nus.min() < 1.0 - PHYSICALITY_TOL:
            raise PhysicalityViolation(where, f"symplectic eigenvalue {nus.min():.12g} < 1")
        row: Dict[str, float] = {}
        if "excitations" in outputs or "polygamy" in outputs:
            N = analysis.mean_excitations(sigma)
            row.update(zip(GROUP_COLUMNS["excitations"], N))
            rep = analysis.excitation_measures(N)
            values = np.concatenate([rep.Nbi, rep.Ntri, rep.delta])
            row.update(zip(GROUP_COLUMNS["polygamy"], values))
        if "entanglement" in outputs:
            ent = analysis.entanglement_report(sigma)
            values = np.concatenate([ent.E, ent.E_one_two, [ent.nu_tilde.min()]])
            row.update(zip(GROUP_COLUMNS["entanglement"], values))
        if "covariance" in outputs:
            s = np.asarray(sigma)
            for n in range(6):
                for m in range(n, 6):
                    row[f"sigma_re_{n}{m}"] = s[n, m].real
                    row[f"sigma_im_{n}{m}"] = s[n, m].imag
    except analysis.NonPhysicalError as exc:
        raise PhysicalityViolation(where, str(exc)) from None
    return row


def fock_row(fm: fock_oracle.FockMilburn, space: fock_oracle.FockSpace, cfg: RunConfig, t: float, gamma) -> Dict[str, float]:
    fcfg = fock_oracle.FockConfig(cutoff=cfg.fock_cutoff)
    obs = fock_oracle.observables(fm.density(t, gamma), fcfg, space)
    return dict(zip(FOCK_COLUMNS, np.concatenate([obs.N, obs.E])))


def _gamma_arg(params: model.SystemParams) -> Optional[float]:
    return None if params.schrodinger_limit else params.gamma


def _covariances(prop: milburn.MilburnPropagator, times) -> np.ndarray:
    return milburn.covariance_trajectory(prop, times, _gamma_arg(prop.params))


def _render_csv(header: Sequence[str], rows: Sequence[Dict[str, float]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_value(row[c]) for c in header) + "\n")
    return buf.getvalue()


def _emit(text: str, out_path: str) -> None:
    if out_path in ("", "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _require_params(cfg: RunConfig, **overrides) -> model.SystemParams:
    try:
        params = cfg.system_params(**overrides)
        model.require_bound_state(params)
    except model.ModelError as exc:
        raise ConfigError(str(exc)) from None
    return params


# ---------------------------------------------------------------- simulate


def simulate_rows(cfg: RunConfig) -> List[Dict[str, float]]:
    """One row per time point of the configured grid."""
    params = _require_params(cfg)
    prop = milburn.build_propagator(params)
    times = cfg.times
    sigmas = _covariances(prop, times)
    gamma = _gamma_arg(params)

    def one(i: int) -> Dict[str, float]:
        t = float(times[i])
        row = {"t": t}
        row.update(state_row(sigmas[i], cfg.outputs, f"t={t:.17g}"))
        if cfg.series_oracle and gamma is not None:
            ref = milburn.covariance_series_oracle(prop, t, gamma, cfg.series_epsilon).entries
            row["series_max_err"] = float(np.abs(ref - sigmas[i]).max())
        return row

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows = list(pool.map(one, range(len(times))))

    if cfg.fock_oracle:
        space = fock_oracle.FockSpace(cfg.fock_cutoff)
        fm = fock_oracle.FockMilburn(
            fock_oracle.build_hamiltonian(params, fock_oracle.FockConfig(cutoff=cfg.fock_cutoff), space)
        )
        for row in rows:
            row.update(fock_row(fm, space, cfg, row["t"], gamma))
    return rows


def cmd_simulate(cfg: RunConfig) -> int:
    rows = simulate_rows(cfg)
    _emit(_render_csv(["t"] + data_columns(cfg), rows), cfg.out_path)
    return EXIT_OK


# ------------------------------------------------------------------- sweep


def _is_isotropic(p: model.SystemParams) -> bool:
    return p.omega1 == p.omega2 == p.omega3 and p.J12 == p.J13 == p.J23


def evaluation_time(cfg: RunConfig, params: model.SystemParams) -> float:
    """10 t_steady for isotropic finite-gamma runs, otherwise t_end."""
    if _is_isotropic(params) and not params.schrodinger_limit:
        ts = iso_t_steady(IsotropicParams(params.omega1, params.J12, params.gamma))
        if math.isfinite(ts):
            return 10.0 * ts
    return cfg.t_end


def resonance_flags(detuning: Sequence[float], tol: float = 1e-12) -> List[bool]:
    """Flag rows at (or nearest to a sign change of) w1 + w3 - 4 w2."""
    f = np.asarray(detuning, dtype=float)
    flags = list(np.abs(f) <= tol)
    for i in range(len(f) - 1):
        if f[i] * f[i + 1] < 0:
            j = i if abs(f[i]) <= abs(f[i + 1]) else i + 1
            flags[j] = True
    return flags


@dataclass
class SweepPoint:
    value: float
    params: Optional[model.SystemParams]
    reason: str = ""


def sweep_points(cfg: RunConfig) -> List[SweepPoint]:
    points = []
    for v in cfg.sweep_values:
        try:
            params = cfg.system_params(**{cfg.sweep_param: float(v)})
            model.require_bound_state(params)
            points.append(SweepPoint(float(v), params))
        except model.ModelError as exc:
            points.append(SweepPoint(float(v), None, str(exc)))
    return points


def sweep_rows(cfg: RunConfig) -> List[Dict[str, float]]:
    points = sweep_points(cfg)
    for p in points:
        if p.params is None:
            _log(f"skipping {cfg.sweep_param}={p.value:.17g}: {p.reason}")
    valid = [p for p in points if p.params is not None]
    key = cfg.sweep_param

    def one(point: SweepPoint) -> Dict[str, float]:
        params = point.params
        prop = milburn.build_propagator(params)
        t = evaluation_time(cfg, params)
        gamma = _gamma_arg(params)
        sigma = _covariances(prop, [t])[0]
        row = {key: point.value, "t_eval": t}
        row.update(state_row(sigma, cfg.outputs, f"{key}={point.value:.17g}"))
        if cfg.series_oracle and gamma is not None:
            ref = milburn.covariance_series_oracle(prop, t, gamma, cfg.series_epsilon).entries
            row["series_max_err"] = float(np.abs(ref - sigma).max())
        if cfg.fock_oracle:
            space = fock_oracle.FockSpace(cfg.fock_cutoff)
            H = fock_oracle.build_hamiltonian(params, fock_oracle.FockConfig(cutoff=cfg.fock_cutoff), space)
            row.update(fock_row(fock_oracle.FockMilburn(H), space, cfg, t, gamma))
        return row

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows = list(pool.map(one, valid))

    detuning = [p.params.omega1 + p.params.omega3 - 4.0 * p.params.omega2 for p in valid]
    for row, flag, p in zip(rows, resonance_flags(detuning), valid):
        row["resonance"] = flag
        if flag:
            _log(f"resonance w1 + w3 = 4 w2 at {key}={p.value:.17g}")
    return rows


def sweep_header(cfg: RunConfig) -> List[str]:
    return [cfg.sweep_param or "sweep"] + data_columns(cfg) + ["t_eval", "resonance"]


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.sweep_param is None and cfg.sweep_steps > 0:
        raise ConfigError("sweep_param is required when sweep_steps > 0")
    rows = sweep_rows(cfg) if cfg.sweep_param else []
    _emit(_render_csv(sweep_header(cfg), rows), cfg.out_path)
    return EXIT_OK


# ------------------------------------------------------------------ verify


@dataclass
class SuiteResult:
    suite: str
    status: str  # "pass", "fail", "skipped" or "finding"
    max_residual: float
    tol: float
    detail: str = ""

    def to_json(self) -> str:
        res = self.max_residual
        return json.dumps(
            {
                "suite": self.suite,
                "status": self.status,
                "max_residual": res if math.isfinite(res) else None,
                "tol": self.tol,
                "detail": self.detail,
            },
            sort_keys=True,
        )


def _result(name: str, residual: float, tol: float, detail: str = "") -> SuiteResult:
    return SuiteResult(name, "pass" if residual <= tol else "fail", float(residual), tol, detail)


def random_bound_params(rng: np.random.Generator, n: int) -> List[model.SystemParams]:
    out = []
    while len(out) < n:
        w = rng.uniform(0.5, 2.0, 3)
        J = rng.uniform(-0.6, 0.6, 3)
        p = model.SystemParams(*w, *J, gamma=float(rng.uniform(1.0, 100.0)))
        if model.validate_bound_state(p):
            out.append(p)
    return out


def suite_diagonalization(params_list) -> SuiteResult:
    worst = 0.0
    for p in params_list:
        V = p.potential_matrix()
        data = model.diagonalize(p)
        ref = np.sort(np.linalg.eigvalsh(V))
        worst = max(worst, float(np.max(np.abs(np.sort(data.Omega ** 2) - ref) / ref)))
        R = model.euler_to_mode_matrix(*data.euler)
        D = R.T @ V @ R
        worst = max(worst, float(np.abs(D - np.diag(np.diag(D))).max()))
    return _result("diagonalization", worst, 1e-10, f"{len(params_list)} parameter sets")


def suite_symplectic(params_list, rotation_13: Callable = symplectic.rotation_13) -> SuiteResult:
    worst = 0.0
    for p in params_list:
        data = model.diagonalize(p)
        alpha, beta, gam = data.euler
        R, Rt = symplectic.frequency_ratios(p)
        factors = [
            symplectic.rotation_12(alpha, R),
            symplectic.rotation_12(gam, R),
            rotation_13(beta, Rt),
            symplectic.squeeze_123(*(-data.r)),
        ]
        factors.append(factors[1] @ factors[2] @ factors[0] @ factors[3])
        for S in factors:
            worst = max(worst, max(symplectic.residuals(S).values()))
    return _result("symplectic", worst, 1e-10, f"{len(params_list)} parameter sets")


def suite_factorization(params: model.SystemParams) -> SuiteResult:
    prop = milburn.build_propagator(params)
    G = symplectic.heisenberg_generator(params)
    worst = float(np.abs(prop.A @ prop.A_inv - np.eye(6)).max())
    for theta in (0.1, 0.7, 2.3, 5.0):
        D = symplectic.mode_phase_diag(prop.lam, theta)
        worst = max(worst, float(np.abs(prop.A @ D @ prop.A_inv - expm(theta * G)).max()))
    return _result("factorization", worst, 1e-9)


def suite_series(cfg: RunConfig, params: model.SystemParams) -> SuiteResult:
    if params.schrodinger_limit:
        return SuiteResult("series", "skipped", 0.0, 1e-8, "unitary limit")
    prop = milburn.build_propagator(params)
    times = [t for t in cfg.times if params.gamma * t <= 1e4][:: max(1, cfg.n_points // 8)]
    worst = 0.0
    for t in times:
        closed = milburn.covariance(prop, t, params.gamma).entries
        ref = milburn.covariance_series_oracle(prop, t, params.gamma, cfg.series_epsilon).entries
        worst = max(worst, float(np.abs(closed - ref).max()))
    return _result("series", worst, 1e-8, f"{len(times)} times")


def suite_fock(cfg: RunConfig, params: model.SystemParams) -> SuiteResult:
    if not cfg.fock_oracle:
        return SuiteResult("fock", "skipped", 0.0, 1e-4, "fock_oracle off")
    prop = milburn.build_propagator(params)
    times = cfg.times[:: max(1, cfg.n_points // 5)]
    sigmas = _covariances(prop, times)
    fcfg = fock_oracle.FockConfig(cutoff=cfg.fock_cutoff)
    space = fock_oracle.FockSpace(cfg.fock_cutoff)
    fm = fock_oracle.FockMilburn(fock_oracle.build_hamiltonian(params, fcfg, space))
    worst = 0.0
    for t, s in zip(times, sigmas):
        Nf = fock_oracle.mean_excitations(fm.density(float(t), _gamma_arg(params)), space)
        Ng = analysis.mean_excitations(s)
        diff = np.abs(Nf - Ng)
        # residual in units of the allowed error: relative 1e-4, absolute 1e-8 below 1e-4
        scaled = np.where(Ng < 1e-4, diff / 1e-8, diff / (1e-4 * np.maximum(Ng, 1e-300)))
        worst = max(worst, float(scaled.max()))
    return _result("fock", worst, 1.0, "residual in units of the allowed error")


def _spectra(cfg: RunConfig, params: model.SystemParams) -> np.ndarray:
    sigmas = _covariances(milburn.build_propagator(params), cfg.times)
    return np.array([analysis.symplectic_spectrum(s) for s in sigmas])


def suite_physicality(spectra: np.ndarray) -> SuiteResult:
    return _result("physicality", max(0.0, 1.0 - float(spectra.min())), PHYSICALITY_TOL)


def suite_purity(spectra: np.ndarray) -> SuiteResult:
    return _result("purity", float(np.abs(spectra - 1.0).max()), PHYSICALITY_TOL)


def suite_mixedness(spectra: np.ndarray, cfg: RunConfig) -> SuiteResult:
    # Poisson mixing of pure Gaussian states never raises purity above one,
    # and the vacuum start is pure.
    log_det = np.log(spectra).sum(axis=1)
    worst = max(0.0, float(-log_det.min()))
    if cfg.t_start == 0:
        worst = max(worst, float(np.abs(spectra[0] - 1.0).max()))
    return _result("mixedness", worst, PHYSICALITY_TOL)


def suite_polygamy(cfg: RunConfig, params: model.SystemParams) -> SuiteResult:
    sigmas = _covariances(milburn.build_propagator(params), cfg.times)
    worst = 0.0
    for s in sigmas:
        rep = analysis.excitation_measures(analysis.mean_excitations(s))
        worst = max(worst, float(-rep.delta.min()))
    return _result("polygamy", worst, 1e-9)


def suite_monogamy(cfg: RunConfig, params: model.SystemParams) -> SuiteResult:
    """Reported, never failing: a violation is a finding."""
    sigmas = _covariances(milburn.build_propagator(params), cfg.times)
    worst = 0.0
    for s in sigmas:
        worst = max(worst, float(-analysis.entanglement_report(s).monogamy_residual.min()))
    status = "pass" if worst <= 1e-9 else "finding"
    return SuiteResult("monogamy", status, worst, 1e-9, "violations are reported, not failed")


def run_verify(cfg: RunConfig, inject_printed_s13: bool = False, n_random: int = 200, seed: int = 20240607) -> List[SuiteResult]:
    params = _require_params(cfg)
    rng = np.random.default_rng(seed)
    population = [params] + random_bound_params(rng, n_random)
    rot13 = symplectic.rotation_13_as_printed if inject_printed_s13 else symplectic.rotation_13
    spectra = _spectra(cfg, params)
    results = [
        suite_diagonalization(population),
        suite_symplectic(population, rot13),
        suite_factorization(params),
        suite_series(cfg, params),
        suite_fock(cfg, params),
        suite_physicality(spectra),
    ]
    if params.schrodinger_limit:
        results.append(suite_purity(spectra))
        results.append(SuiteResult("mixedness", "skipped", 0.0, PHYSICALITY_TOL, "unitary limit"))
    else:
        results.append(SuiteResult("purity", "skipped", 0.0, PHYSICALITY_TOL, "finite gamma"))
        results.append(suite_mixedness(spectra, cfg))
    results.append(suite_polygamy(cfg, params))
    results.append(suite_monogamy(cfg, params))
    return results


def cmd_verify(cfg: RunConfig, inject_printed_s13: bool = False) -> int:
    results = run_verify(cfg, inject_printed_s13)
    _emit("".join(r.to_json() + "\n" for r in results), cfg.out_path)
    failed = [r for r in results if r.status == "fail"]
    for r in results:
        if r.status == "finding":
            _log(f"finding in {r.suite}: max residual {r.max_residual:.3e}")
    if failed:
        _log(f"suite '{failed[0].suite}' failed: max residual {failed[0].max_residual:.3e} > {failed[0].tol:g}")
        return EXIT_VERIFY
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="usc-trio", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "time series on the configured grid"),
        ("sweep", "one row per value of sweep_param"),
        ("verify", "run the oracle and invariant suites"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a key (repeatable, last wins)")
        if name == "verify":
            p.add_argument(
                "--inject-printed-s13",
                action="store_true",
                help="negative control: use the S13 matrix with the spurious entry",
            )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_verify(cfg, args.inject_printed_s13)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except PhysicalityViolation as exc:
        _log(str(exc))
        return EXIT_PHYSICAL


if __name__ == "__main__":
    sys.exit(main())
