"""Command-line front end: solve, sweep, jumpcost, verify.

Configs are INI documents with sections [model], [scheme], [verify] and
[output]; unknown sections or keys are rejected with a diagnostic.  All
floating-point output uses 17 significant digits so CSV round-trips are
lossless, and identical configs and seeds produce byte-identical files.

Exit codes: 0 verification PASS, 1 usage/parse/IO error, 2 verification FAIL.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import (
    CorrectionSpec,
    JumpRecord,
    PowerLq,
    QuadraticMu,
    RisProblem,
    State,
    Trajectory,
    TrivialH,
)
from .jump import SearchConfig, jump_cost
from .models import (
    Damage1dSpec,
    Delamination0dSpec,
    Plasticity0dSpec,
    Toy1dSpec,
    make_damage1d,
    make_delamination0d,
    make_plasticity0d,
    make_toy1d,
)
from .reduced import MinimizerConfig, reduce_energy
from .scheme import (
    DiscreteTrajectory,
    SchemeConfig,
    detect_jumps,
    interpolate,
    solve_incremental,
)
from .stability import residual_stability
from .verify import Certificate, TolConfig, balance_residual, verify_E, verify_VE

__all__ = ["main", "load_config", "RunConfig"]

CSV_VERSION = "# risolve-csv v1"

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2


class ConfigError(ValueError):
    """Raised for malformed configs; maps to exit code 1."""


# ---------------------------------------------------------------------------
# config parsing


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _floats(text: str) -> list[float]:
    return [float(p) for p in text.replace(",", " ").split()]


def _pair(text: str, key: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise ConfigError(f"key {key!r} needs exactly two numbers, got {text!r}")
    return (vals[0], vals[1])


def _bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key {key!r} must be boolean, got {text!r}")


def parse_correction(text: str) -> Optional[CorrectionSpec]:
    """Parse a correction descriptor.

    Grammar: ``none`` | ``quadratic:MU[:euclidean|dissipation]`` |
    ``power:Q:GAMMA`` | ``trivial:P:COEFF`` (the last meaning
    delta = COEFF * d(z, z')**P).
    """
    parts = [p.strip() for p in text.strip().split(":")]
    kind = parts[0].lower()
    try:
        if kind == "none":
            return None
        if kind == "quadratic":
            dist = parts[2] if len(parts) > 2 else "euclidean"
            return QuadraticMu(mu=float(parts[1]), dist=dist)
        if kind == "power":
            return PowerLq(q=float(parts[1]), gamma=float(parts[2]))
        if kind == "trivial":
            p, c = float(parts[1]), float(parts[2])
            if p <= 1 or c <= 0:
                raise ConfigError(
                    "trivial correction needs exponent > 1 and coefficient > 0"
                )
            return TrivialH(h=lambda r, _p=p, _c=c: _c * r**_p)
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad correction descriptor {text!r}: {exc}") from exc
    raise ConfigError(f"unknown correction kind {kind!r}")


_MODEL_KEYS = {
    "toy1d": {"kind", "well", "a", "b", "w", "kappa", "ell", "horizon", "z_box", "correction"},
    "plasticity0d": {"kind", "C", "sigma_y", "eps", "horizon", "z_box", "correction"},
    "damage1d": {"kind", "N", "E0", "eta", "r", "grad_weight", "kappa", "w_D", "horizon", "correction"},
    "delamination0d": {"kind", "k_minus", "k_plus", "a0", "kappa", "ell", "horizon", "brittle", "k", "correction"},
}
_SCHEME_KEYS = {"scheme", "tau", "epsilon", "initial_z", "t_span", "seed", "grid_resolution"}
_VERIFY_KEYS = {"minimality_tol", "stability_tol", "balance_tol", "jump_tol", "probe_count"}
_OUTPUT_KEYS = {"out_dir", "prefix"}


class RunConfig:
    """Parsed config: model spec/problem factory plus scheme and tolerances."""

    def __init__(self, model_kind, model_spec, problem, scheme, tol, out_dir, prefix, seed):
        self.model_kind = model_kind
        self.model_spec = model_spec
        self.problem = problem
        self.scheme = scheme
        self.tol = tol
        self.out_dir = out_dir
        self.prefix = prefix
        self.seed = seed


def _check_keys(section: str, present, allowed) -> None:
    extra = set(present) - allowed
    if extra:
        raise ConfigError(
            f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}"
        )


def _build_model(sec) -> tuple[str, object, RisProblem]:
    kind = sec.get("kind")
    if kind is None:
        raise ConfigError("[model] section needs a 'kind' key")
    if kind not in _MODEL_KEYS:
        raise ConfigError(f"unknown model kind {kind!r}")
    _check_keys("model", sec.keys(), _MODEL_KEYS[kind])
    corr = parse_correction(sec["correction"]) if "correction" in sec else "default"

    if kind == "toy1d":
        kw = {}
        for key, cast in (
            ("well", str), ("a", float), ("b", float), ("w", float),
            ("kappa", float), ("horizon", float),
        ):
            if key in sec:
                kw[key] = cast(sec[key])
        if "ell" in sec:
            kw["ell"] = _pair(sec["ell"], "ell")
        if "z_box" in sec:
            kw["z_box"] = _pair(sec["z_box"], "z_box")
        if corr != "default":
            kw["correction"] = corr
        spec = Toy1dSpec(**kw)
        return kind, spec, make_toy1d(spec)

    if kind == "plasticity0d":
        kw = {}
        for key in ("C", "sigma_y", "horizon"):
            if key in sec:
                kw[key] = float(sec[key])
        if "eps" in sec:
            kw["eps"] = _pair(sec["eps"], "eps")
        if "z_box" in sec:
            kw["z_box"] = _pair(sec["z_box"], "z_box")
        if corr != "default":
            kw["correction"] = corr
        spec = Plasticity0dSpec(**kw)
        return kind, spec, make_plasticity0d(spec)

    if kind == "damage1d":
        kw = {}
        if "N" in sec:
            kw["N"] = int(sec["N"])
        for key in ("eta", "r", "grad_weight", "horizon"):
            if key in sec:
                kw[key] = float(sec[key])
        for key in ("E0", "kappa"):
            if key in sec:
                vals = _floats(sec[key])
                kw[key] = vals[0] if len(vals) == 1 else tuple(vals)
        if "w_D" in sec:
            kw["w_D"] = _pair(sec["w_D"], "w_D")
        if corr != "default":
            kw["correction"] = corr
        spec = Damage1dSpec(**kw)
        return kind, spec, make_damage1d(spec)

    # delamination0d
    kw = {}
    for key in ("k_minus", "k_plus", "a0", "kappa", "horizon"):
        if key in sec:
            kw[key] = float(sec[key])
    if "ell" in sec:
        kw["ell"] = _pair(sec["ell"], "ell")
    if corr != "default":
        kw["correction"] = corr
    spec = Delamination0dSpec(**kw)
    brittle = _bool(sec["brittle"], "brittle") if "brittle" in sec else True
    k = float(sec["k"]) if "k" in sec else None
    return kind, spec, make_delamination0d(spec, brittle=brittle, k=k)


def load_config(path: str | Path, seed_override: Optional[int] = None) -> RunConfig:
    """Parse and validate an INI run config."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (N, E0, C, w_D, ...)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    known = {"model", "scheme", "verify", "output"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    if "model" not in cp:
        raise ConfigError("config needs a [model] section")

    kind, spec, problem = _build_model(cp["model"])

    sec = cp["scheme"] if "scheme" in cp else {}
    if sec:
        _check_keys("scheme", sec.keys(), _SCHEME_KEYS)
    seed = seed_override if seed_override is not None else int(sec.get("seed", 0))
    minimizer = MinimizerConfig(
        grid_resolution=int(sec.get("grid_resolution", 129)), seed=seed
    )
    kw = {
        "scheme": sec.get("scheme", "VE"),
        "tau": float(sec.get("tau", 1e-2)),
        "epsilon": float(sec.get("epsilon", 0.0)),
        "minimizer": minimizer,
        # the model's own correction doubles as the scheme correction
        "correction": getattr(spec, "correction", None),
    }
    if "initial_z" in sec:
        kw["initial_z"] = tuple(_floats(sec["initial_z"]))
    else:
        kw["initial_z"] = tuple(0.0 for _ in range(problem.n_z))
    if "t_span" in sec:
        kw["t_span"] = _pair(sec["t_span"], "t_span")
    try:
        scheme = SchemeConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"bad [scheme] values: {exc}") from exc

    vsec = cp["verify"] if "verify" in cp else {}
    if vsec:
        _check_keys("verify", vsec.keys(), _VERIFY_KEYS)
    tol = TolConfig(
        minimality_tol=float(vsec.get("minimality_tol", 1e-8)),
        stability_tol=float(vsec.get("stability_tol", 1e-6)),
        balance_tol=float(vsec.get("balance_tol", 5e-2)),
        jump_tol=float(vsec.get("jump_tol", 5e-2)),
        probe_count=int(vsec.get("probe_count", 512)),
        minimizer=minimizer,
    )

    osec = cp["output"] if "output" in cp else {}
    if osec:
        _check_keys("output", osec.keys(), _OUTPUT_KEYS)
    out_dir = osec.get("out_dir", "out")
    prefix = osec.get("prefix", kind)
    return RunConfig(kind, spec, problem, scheme, tol, out_dir, prefix, seed)


# ---------------------------------------------------------------------------
# CSV and report emission


def _csv_columns(problem: RisProblem) -> list[str]:
    cols = ["t"]
    cols += [f"z_{i + 1}" for i in range(problem.n_z)]
    cols += [f"u_{i + 1}" for i in range(problem.n_u)]
    cols += [
        "energy",
        "power",
        "step_dissipation",
        "cum_var_d",
        "residual_stability",
        "jump_flag",
    ]
    return cols


def write_trajectory_csv(path: Path, disc: DiscreteTrajectory) -> None:
    prob = disc.problem
    flags = np.zeros(len(disc.times), dtype=int)
    for a, b in detect_jumps(disc):
        flags[a + 1 : b + 2] = 1
    cum = np.concatenate([[0.0], np.cumsum(disc.step_diss)])
    lines = [CSV_VERSION, ",".join(_csv_columns(prob))]
    for n, t in enumerate(disc.times):
        s = disc.states[n]
        energy = prob.energy(float(t), s.u, s.z)
        power = prob.power(float(t), s.u, s.z)
        resid = residual_stability(
            prob, float(t), s.z, disc.config.minimizer
        ).residual
        row = [float(t), *s.z.tolist(), *s.u.tolist(), energy, power,
               float(disc.step_diss[n - 1]) if n > 0 else 0.0,
               float(cum[n]), resid]
        lines.append(",".join(_fmt(x) for x in row) + f",{int(flags[n])}")
    path.write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: Path, problem: RisProblem) -> Trajectory:
    """Rebuild a trajectory (with jump records from the flag column)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory file: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3:
        raise ConfigError(f"trajectory file {path} is empty or truncated")
    if lines[0].strip() != CSV_VERSION:
        raise ConfigError(
            f"unknown CSV version header {lines[0]!r}; expected {CSV_VERSION!r}"
        )
    cols = [c.strip() for c in lines[1].split(",")]
    expected = _csv_columns(problem)
    if cols != expected:
        raise ConfigError(
            f"CSV schema mismatch: got {cols}, expected {expected}"
        )
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[2:]])
    if data.shape[1] != len(cols):
        raise ConfigError("CSV row width does not match the header")
    nz, nu = problem.n_z, problem.n_u
    times = data[:, 0]
    states = tuple(
        State(u=data[n, 1 + nz : 1 + nz + nu], z=data[n, 1 : 1 + nz])
        for n in range(len(times))
    )
    flags = data[:, -1].astype(int)
    records = []
    n = 1
    while n < len(times):
        if flags[n]:
            m = n
            while m + 1 < len(times) and flags[m + 1]:
                m += 1
            diss = [problem.dissipation(states[i - 1].z, states[i].z) for i in range(n, m + 1)]
            k = n + int(np.argmax(diss))
            records.append(
                JumpRecord(
                    t=float(times[n]),
                    z_left=states[n - 1].z,
                    z_inner=states[k].z,
                    z_right=states[m].z,
                    t_end=float(times[m]),
                )
            )
            n = m + 1
        else:
            n += 1
    tau = float(np.median(np.diff(times))) if len(times) > 1 else 0.0
    return Trajectory(times=times, states=states, jump_records=tuple(records),
                      meta={"tau": tau})


def certificate_lines(cert: Certificate) -> list[str]:
    lines = [
        f"minimality_residual = {_fmt(cert.minimality_residual)}",
        f"stability_residual = {_fmt(cert.stability_residual)}",
        f"balance_residual = {_fmt(cert.balance_residual)}",
        f"jump_count = {len(cert.jump_checks)}",
    ]
    for i, jc in enumerate(cert.jump_checks, start=1):
        lines.append(f"jump_{i}_t = {_fmt(jc.t)}")
        lines.append(f"jump_{i}_worst = {_fmt(jc.worst)}")
        lines.append(f"jump_{i}_cost_gap = {_fmt(jc.cost_gap)}")
    for key in sorted(cert.verdict):
        lines.append(f"verdict_{key} = {'true' if cert.verdict[key] else 'false'}")
    lines.append(f"passed = {'true' if cert.passed else 'false'}")
    return lines


# ---------------------------------------------------------------------------
# subcommands


def _certify(run: RunConfig, disc: DiscreteTrajectory) -> Certificate:
    traj = interpolate(disc)
    if run.scheme.scheme == "E":
        return verify_E(disc.problem, traj, run.tol)
    return verify_VE(disc.problem, traj, run.tol)


def cmd_solve(args) -> int:
    run = load_config(args.config, args.seed)
    out = Path(args.out_dir or run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    disc = solve_incremental(run.problem, run.scheme)
    write_trajectory_csv(out / f"{run.prefix}_trajectory.csv", disc)
    cert = _certify(run, disc)
    text = "\n".join(certificate_lines(cert)) + "\n"
    (out / f"{run.prefix}_certificate.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_PASS if cert.passed else EXIT_FAIL


def _sweep_one(run: RunConfig, axis: str, value: float):
    scheme = run.scheme
    problem = run.problem
    if axis == "tau":
        scheme = replace(scheme, tau=value)
    elif axis == "epsilon":
        scheme = replace(scheme, scheme="BV", epsilon=value)
    elif axis == "mu":
        corr = QuadraticMu(mu=value)
        scheme = replace(scheme, scheme="VE", correction=corr)
    elif axis == "k":
        if run.model_kind != "delamination0d":
            raise ConfigError("axis 'k' applies to the delamination model only")
        problem = make_delamination0d(run.model_spec, brittle=False, k=value)
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    disc = solve_incremental(problem, scheme)
    traj = interpolate(disc)
    jt = traj.jump_records[0].t if traj.jump_records else float("nan")
    return disc, traj, jt, balance_residual(disc)


def cmd_sweep(args) -> int:
    run = load_config(args.config, args.seed)
    values = _floats(args.values)
    if len(values) < 2:
        raise ConfigError("sweep needs at least two values")
    if args.axis == "k" and run.model_kind != "delamination0d":
        raise ConfigError("axis 'k' applies to the delamination model only")
    out = Path(args.out_dir or run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: list = [None] * len(values)
    errors: list[str] = []

    def work(i):
        results[i] = _sweep_one(run, args.axis, values[i])

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        futures = {pool.submit(work, i): i for i in range(len(values))}
        for fut in futures:
            try:
                fut.result()
            except Exception as exc:  # partial report on any failure
                errors.append(f"{args.axis}={values[futures[fut]]}: {exc}")

    probe = None
    lines = [CSV_VERSION,
             f"{args.axis},jump_time,final_z_norm,balance_residual,sup_dist_prev"]
    prev_traj = None
    for v, res in zip(values, results):
        if res is None:
            continue
        disc, traj, jt, bal = res
        if probe is None:
            probe = np.linspace(float(traj.times[0]), float(traj.times[-1]), 129)
        if prev_traj is not None:
            sup = max(
                float(np.linalg.norm(traj.state_at(t).z - prev_traj.state_at(t).z))
                for t in probe
            )
        else:
            sup = float("nan")
        zfin = float(np.linalg.norm(traj.states[-1].z))
        lines.append(",".join(_fmt(x) for x in (v, jt, zfin, bal, sup)))
        prev_traj = traj
    (out / f"{run.prefix}_sweep_{args.axis}.csv").write_text("\n".join(lines) + "\n")
    for msg in errors:
        sys.stderr.write(f"sweep run failed: {msg}\n")
    return EXIT_FAIL if errors else EXIT_PASS


def cmd_jumpcost(args) -> int:
    run = load_config(args.config, args.seed)
    problem = run.problem
    z_minus = np.asarray(_floats(args.z_minus))
    z_plus = np.asarray(_floats(args.z_plus))
    if z_minus.shape != (problem.n_z,) or z_plus.shape != (problem.n_z,):
        raise ConfigError(f"endpoints must have dimension {problem.n_z}")
    out = Path(args.out_dir or run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bound = jump_cost(problem, args.t, z_minus, z_plus, SearchConfig(minimizer=run.tol.minimizer))
    feasible = np.isfinite(bound.upper)
    lines = [
        f"lower = {_fmt(bound.lower)}",
        f"upper = {_fmt(bound.upper)}" if feasible else "upper = inf",
        f"gap = {_fmt(bound.gap)}" if feasible else "gap = inf",
        f"feasible = {'true' if feasible else 'false'}",
    ]
    text = "\n".join(lines) + "\n"
    (out / f"{run.prefix}_jumpcost.txt").write_text(text)
    sys.stdout.write(text)
    if bound.witness is not None:
        ch = bound.witness
        rows = [CSV_VERSION,
                ",".join([f"z_{i+1}" for i in range(problem.n_z)]
                         + ["kind", "point_residual", "link_diss", "link_gap"])]
        for i, p in enumerate(ch.points):
            resid = ch.point_residual[i] if i < len(ch.point_residual) else 0.0
            ld = ch.link_diss[i] if i < len(ch.link_diss) else 0.0
            lg = ch.link_gap[i] if i < len(ch.link_gap) else 0.0
            rows.append(",".join([_fmt(x) for x in p] + [ch.kinds[i]]
                                 + [_fmt(resid), _fmt(ld), _fmt(lg)]))
        (out / f"{run.prefix}_jumpcost_chain.csv").write_text("\n".join(rows) + "\n")
    return EXIT_PASS if feasible else EXIT_FAIL


def cmd_verify(args) -> int:
    run = load_config(args.config, args.seed)
    traj = read_trajectory_csv(Path(args.trajectory), run.problem)
    if run.scheme.scheme == "E":
        cert = verify_E(run.problem, traj, run.tol)
    else:
        prob = run.problem.with_correction(run.scheme.correction)
        cert = verify_VE(prob, traj, run.tol)
    text = "\n".join(certificate_lines(cert)) + "\n"
    sys.stdout.write(text)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{run.prefix}_verify_certificate.txt").write_text(text)
    return EXIT_PASS if cert.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="risolve",
        description="Incremental solvers and certificates for rate-independent systems",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="INI run config")
        p.add_argument("--out-dir", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="minimizer seed override")

    p = sub.add_parser("solve", help="run the incremental scheme and certify")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="re-run over an axis of parameter values")
    common(p)
    p.add_argument("--axis", required=True, choices=["tau", "mu", "epsilon", "k"])
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("jumpcost", help="bound the jump cost between two states")
    common(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--z-minus", required=True, help="comma-separated left state")
    p.add_argument("--z-plus", required=True, help="comma-separated right state")
    p.set_defaults(func=cmd_jumpcost)

    p = sub.add_parser("verify", help="certify an existing trajectory CSV")
    common(p)
    p.add_argument("trajectory", help="trajectory CSV as emitted by solve")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
