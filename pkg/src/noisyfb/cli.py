"""Command-line front end.

Commands: ``nblock``, ``spectral``, ``sweep`` and ``check``.  Settings come
from an optional flat ``key = value`` file (``--config``) and are overridden
by flags.  Data goes to standard output (or ``--out``); logging goes to
standard error.

Exit codes: 0 success, 1 check failure, 2 configuration error, 3 solver
failure.
"""

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import maxdet, nblock, oracle, spectral
from .exceptions import ConfigError, InvalidModel, MaxIterations, SingularFeedbackNoise
from .noise import AR1, MA1, CustomAutocov, White, covariance

log = logging.getLogger("noisyfb")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

SWEEP_COLUMNS = [
    "sigma",
    "n",
    "P",
    "alpha",
    "upper_bound_bits",
    "nonfeedback_bits",
    "perfect_feedback_bits",
    "power_used",
    "solve_seconds",
]
NBLOCK_COLUMNS = [
    "n",
    "channel",
    "alpha",
    "feedback",
    "sigma",
    "P",
    "bound_bits",
    "nonfeedback_bits",
    "perfect_fb_bits",
    "power_used",
    "iterations",
    "gap",
]
SPECTRAL_COLUMNS = [
    "taps",
    "grid",
    "bound_bits",
    "lambda",
    "filter_power_fraction",
    "nonfeedback_shannon_bits",
]

# key -> parser; values are validated again when models are built
KEYS = {
    "n": int,
    "power": float,
    "seed": int,
    "channel.kind": str,
    "channel.alpha": float,
    "channel.variance": float,
    "channel.rho": float,
    "channel.innovation": float,
    "channel.autocov": str,
    "feedback.kind": str,
    "feedback.sigma": float,
    "feedback.variance": float,
    "feedback.alpha": float,
    "feedback.rho": float,
    "feedback.innovation": float,
    "feedback.autocov": str,
    "solver.t0": float,
    "solver.mu": float,
    "solver.gap_tol": float,
    "solver.newton_tol": float,
    "solver.max_iter": int,
    "spectral.taps": int,
    "spectral.grid": int,
    "sweep.param": str,
    "sweep.values": str,
    "output.format": str,
    "output.path": str,
    "output.timing": str,
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def n(self):
        return self.get("n", 30)

    @property
    def power(self):
        return self.get("power", 10.0)

    @property
    def seed(self):
        return self.get("seed", 0)

    @property
    def fmt(self):
        return self.get("output.format", "csv")

    @property
    def timing(self):
        return _parse_bool("output.timing", self.get("output.timing", "false"))

    def solver_config(self):
        cfg = maxdet.SolverConfig()
        for name in ("t0", "mu", "gap_tol", "newton_tol", "max_iter"):
            if f"solver.{name}" in self.values:
                setattr(cfg, name, self.values[f"solver.{name}"])
        return cfg

    def channel(self):
        return _model(self, "channel", default_kind="ma1")

    def feedback(self):
        return _model(self, "feedback", default_kind="white")

    def sigma(self):
        """Feedback standard deviation when the feedback noise is white, else None."""
        if self.get("feedback.kind", "white") != "white":
            return None
        if "feedback.sigma" in self.values:
            return self.values["feedback.sigma"]
        return float(np.sqrt(self.get("feedback.variance", 0.0)))

    def alpha(self):
        return self.get("channel.alpha", 0.1) if self.get("channel.kind", "ma1") == "ma1" else None


def _parse_bool(key, text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_list(key, text):
    try:
        return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers") from exc


def _set(values, key, raw):
    if key not in KEYS:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        values[key] = KEYS[key](raw) if KEYS[key] is not str else str(raw).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc


def read_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            _set(values, key, raw)
    return values


def _model(cfg, prefix, default_kind):
    kind = cfg.get(f"{prefix}.kind", default_kind).lower()
    g = lambda name, default=None: cfg.get(f"{prefix}.{name}", default)  # noqa: E731
    if kind == "white":
        if prefix == "feedback" and g("variance") is None:
            return White(g("sigma", 0.0) ** 2)
        return White(g("variance", 1.0))
    if kind == "ma1":
        return MA1(g("alpha", 0.1))
    if kind == "ar1":
        if g("rho") is None:
            raise ConfigError(f"{prefix}.rho is required for ar1")
        return AR1(g("rho"), g("innovation", 1.0))
    if kind == "custom":
        if g("autocov") is None:
            raise ConfigError(f"{prefix}.autocov is required for custom")
        return CustomAutocov(tuple(_parse_list(f"{prefix}.autocov", g("autocov"))))
    raise ConfigError(f"{prefix}.kind: unknown model {kind!r}")


def build_config(args):
    values = read_config(args.config) if args.config else {}
    flag_keys = {
        "n": "n",
        "power": "power",
        "seed": "seed",
        "taps": "spectral.taps",
        "grid": "spectral.grid",
        "format": "output.format",
        "out": "output.path",
        "param": "sweep.param",
        "values": "sweep.values",
    }
    for attr, key in flag_keys.items():
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = v
    if getattr(args, "sigma", None) is not None:
        values["feedback.kind"] = "white"
        values.pop("feedback.variance", None)
        values["feedback.sigma"] = args.sigma
    if getattr(args, "alpha", None) is not None:
        values["channel.kind"] = "ma1"
        values["channel.alpha"] = args.alpha
    if getattr(args, "timing", False):
        values["output.timing"] = "true"
    cfg = RunConfig(values)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if not 1 <= cfg.n <= nblock.N_MAX:
        raise ConfigError(f"n: must be between 1 and {nblock.N_MAX}, got {cfg.n}")
    if not (np.isfinite(cfg.power) and cfg.power > 0):
        raise ConfigError(f"power: must be positive, got {cfg.power}")
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"output.format: expected csv or json, got {cfg.fmt!r}")
    sigma = cfg.get("feedback.sigma")
    if sigma is not None and not (np.isfinite(sigma) and sigma >= 0):
        raise ConfigError(f"feedback.sigma: must be finite and >= 0, got {sigma}")
    cfg.timing  # noqa: B018 - parse errors surface here
    try:
        cfg.channel()
        cfg.feedback()
    except InvalidModel as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def render(records, columns, fmt):
    if fmt == "json":
        rows = [{c: (None if r.get(c) is None else r[c]) for c in columns} for r in records]
        for row in rows:
            for c, v in row.items():
                if isinstance(v, (float, np.floating)):
                    row[c] = float(_fmt(v))
                elif isinstance(v, np.integer):
                    row[c] = int(v)
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def emit(text, cfg):
    path = cfg.get("output.path")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _describe(model):
    if isinstance(model, White):
        return f"white({_fmt(model.variance)})"
    if isinstance(model, MA1):
        return f"ma1({_fmt(model.alpha)})"
    if isinstance(model, AR1):
        return f"ar1({_fmt(model.rho)},{_fmt(model.innovation)})"
    return f"custom({','.join(_fmt(v) for v in model.r)})"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def solve_point(channel, feedback, n, P, solver_cfg, baselines=None):
    """Bound plus both baselines for one configuration."""
    K_w = covariance(channel, n)
    K_v = covariance(feedback, n)
    if baselines is None:
        baselines = (
            nblock.nonfeedback_nblock(K_w, P),
            nblock.perfect_feedback_nblock(K_w, P, solver_cfg).value_bits,
        )
    t0 = time.perf_counter()
    sol = nblock.feedback_bound(K_w, K_v, P, solver_cfg)
    elapsed = time.perf_counter() - t0
    nf, pf = baselines
    if not nf - 1e-6 <= sol.value_bits <= pf + 1e-6:
        log.warning("sandwich violated: %.12g <= %.12g <= %.12g", nf, sol.value_bits, pf)
    return sol, baselines, elapsed


def cmd_nblock(cfg):
    channel, feedback = cfg.channel(), cfg.feedback()
    sol, (nf, pf), elapsed = solve_point(channel, feedback, cfg.n, cfg.power, cfg.solver_config())
    log.info("n-block bound solved in %.3f s", elapsed)
    rec = {
        "n": cfg.n,
        "channel": _describe(channel),
        "alpha": cfg.alpha(),
        "feedback": _describe(feedback),
        "sigma": cfg.sigma(),
        "P": cfg.power,
        "bound_bits": sol.value_bits,
        "nonfeedback_bits": nf,
        "perfect_fb_bits": pf,
        "power_used": sol.power_used,
        "iterations": sol.diagnostics.iterations,
        "gap": sol.diagnostics.gap_estimate,
    }
    emit(render([rec], NBLOCK_COLUMNS, cfg.fmt), cfg)
    return EXIT_OK


def cmd_spectral(cfg):
    channel, feedback = cfg.channel(), cfg.feedback()
    taps = cfg.get("spectral.taps", spectral.DEFAULT_TAPS)
    grid = cfg.get("spectral.grid", spectral.DEFAULT_GRID)
    try:
        prob = spectral.SpectralProblem(channel.psd(), feedback.psd(), cfg.power, taps, grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sol = spectral.noisy_spectral_bound(prob)
    rec = {
        "taps": taps,
        "grid": grid,
        "bound_bits": sol.value_bits,
        "lambda": sol.lam,
        "filter_power_fraction": sol.filter_power_fraction,
        "nonfeedback_shannon_bits": spectral.nonfeedback_shannon(channel.psd(), cfg.power, grid),
    }
    emit(render([rec], SPECTRAL_COLUMNS, cfg.fmt), cfg)
    return EXIT_OK


def cmd_sweep(cfg):
    param = cfg.get("sweep.param", "sigma")
    if param not in ("sigma", "alpha"):
        raise ConfigError(f"sweep.param: expected sigma or alpha, got {param!r}")
    raw = cfg.get("sweep.values")
    values = _parse_list("sweep.values", raw) if raw is not None else []
    if not values:
        raise ConfigError("sweep.values: the sweep list is empty")
    if not all(np.isfinite(v) for v in values):
        raise ConfigError("sweep.values: values must be finite")
    if param == "sigma" and min(values) < 0:
        raise ConfigError("sweep.values: sigma values must be >= 0")
    if param == "alpha" and cfg.get("channel.kind", "ma1") != "ma1":
        raise ConfigError("sweep.param: alpha sweeps need channel.kind = ma1")

    solver_cfg = cfg.solver_config()
    n, P = cfg.n, cfg.power
    cache = {}
    records = []
    failed = 0
    for v in values:
        vals = dict(cfg.values)
        if param == "sigma":
            vals.update({"feedback.kind": "white", "feedback.sigma": v})
            vals.pop("feedback.variance", None)
        else:
            vals.update({"channel.kind": "ma1", "channel.alpha": v})
        point = RunConfig(vals)
        try:
            channel, feedback = point.channel(), point.feedback()
        except InvalidModel as exc:
            raise ConfigError(str(exc)) from exc
        key = _describe(channel)
        rec = {"sigma": point.sigma(), "n": n, "P": P, "alpha": point.alpha()}
        try:
            sol, cache[key], elapsed = solve_point(channel, feedback, n, P, solver_cfg, cache.get(key))
        except (MaxIterations, SingularFeedbackNoise, ValueError) as exc:
            log.error("%s=%s failed: %s", param, _fmt(v), exc)
            failed += 1
            if key in cache:
                rec["nonfeedback_bits"], rec["perfect_feedback_bits"] = cache[key]
            records.append(rec)
            continue
        log.info("%s=%s bound=%.12g (%.2f s)", param, _fmt(v), sol.value_bits, elapsed)
        rec.update(
            upper_bound_bits=sol.value_bits,
            nonfeedback_bits=cache[key][0],
            perfect_feedback_bits=cache[key][1],
            power_used=sol.power_used,
            solve_seconds=elapsed if cfg.timing else None,
        )
        records.append(rec)
    emit(render(records, SWEEP_COLUMNS, cfg.fmt), cfg)
    return EXIT_SOLVER if failed else EXIT_OK


# ---------------------------------------------------------------------------
# self-check
# ---------------------------------------------------------------------------

CHECK_CONFIGS = [
    ("white/white", White(1.0), White(1.0), 1.0),
    ("ma1(0.5)/white(0.1)", MA1(0.5), White(0.1), 2.0),
    ("ar1(0.5)/white(0.5)", AR1(0.5), White(0.5), 1.0),
]


def run_checks(seed=0, samples=100_000):
    """Run the oracle suite; returns a list of ``(name, measured, tol, passed)``."""
    rng = np.random.default_rng(seed)
    results = []

    def record(name, measured, tol, passed=None):
        ok = measured <= tol if passed is None else passed
        results.append((name, float(measured), float(tol), bool(ok)))

    # identities on random feasible points and on indefinite K_s
    n = 4
    prob = nblock.NBlockProblem(covariance(MA1(0.3), n), covariance(White(0.25), n), 2.0)
    det_err = obj_err = 0.0
    consistent = True
    for _ in range(100):
        rep = oracle.schur_identity_check(
            prob.K_w, prob.K_v, oracle.random_feasible_point(prob, rng), raise_on_failure=False
        )
        det_err = max(det_err, rep.det_rel_err if rep.det_rel_err is not None else np.inf)
        obj_err = max(obj_err, rep.objective_err if rep.objective_err is not None else np.inf)
        consistent &= rep.lmi_consistent
    for _ in range(100):
        A = rng.standard_normal((n, n))
        K_s = A + A.T
        B = np.tril(rng.standard_normal((n, n)), -1)
        rep = oracle.schur_identity_check(
            prob.K_w, prob.K_v, oracle.FeasiblePoint(K_s, B), raise_on_failure=False
        )
        consistent &= rep.lmi_consistent
    record("identity.determinant", det_err, 1e-9)
    record("identity.objective", obj_err, 1e-9)
    record("identity.lmi_equivalence", 0.0 if consistent else 1.0, 0.0, consistent)

    # barrier derivatives on an n=3 instance
    n = 3
    K_w, K_v = covariance(MA1(0.3), n), covariance(White(0.25), n)
    mp, lay = nblock.build_noisy_problem(K_w, K_v, 2.0)
    x0 = lay.pack(K_w + np.eye(n), np.zeros((n, n)))
    g_err = h_err = 0.0
    for x in oracle.random_interior_points(mp, x0, 20, rng):
        ge, he = oracle.finite_diff_check(mp, x, t=1.0, h=1e-5)
        g_err, h_err = max(g_err, ge), max(h_err, he)
    record("derivatives.gradient", g_err, 1e-5)
    record("derivatives.hessian", h_err, 1e-4)

    # optimality against random search, plus solver certificates
    for label, ch, fb, P in CHECK_CONFIGS:
        for n in (2, 3):
            prob = nblock.NBlockProblem(covariance(ch, n), covariance(fb, n), P)
            sol = nblock.noisy_feedback_bound(prob)
            _, best = oracle.random_search(prob, samples, seed=int(rng.integers(2**31)))
            record(f"oracle.{label}.n{n}", best - sol.value_bits, 1e-6)
            lmi_min = np.linalg.eigvalsh(nblock.lmi_matrix(prob.K_w, prob.K_v, sol.H, sol.B))[0]
            record(f"certificate.{label}.n{n}.lmi", -lmi_min, 1e-8)
            slack = n * P - n * sol.power_used
            record(f"certificate.{label}.n{n}.power", -slack, 1e-8 * n * P)
    return results


def cmd_check(cfg, samples):
    results = run_checks(cfg.seed, samples)
    lines = []
    for name, measured, tol, ok in results:
        lines.append(f"{'PASS' if ok else 'FAIL'} {name} measured={measured:.3e} tol={tol:.1e}")
    failed = sum(not r[3] for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    text = "\n".join(lines) + "\n"
    emit(text, cfg)
    return EXIT_CHECK if failed else EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--sigma", type=float, help="feedback noise standard deviation (white)")
    common.add_argument("--alpha", type=float, help="MA(1) channel coefficient")
    common.add_argument("--n", type=int, help="block length")
    common.add_argument("--power", type=float, help="average power per transmission")
    common.add_argument("--taps", type=int, help="causal filter taps (spectral)")
    common.add_argument("--grid", type=int, help="frequency grid intervals on [0, pi]")
    common.add_argument("--seed", type=int, help="random seed for checks")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="write data here instead of standard output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="noisyfb", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("nblock", parents=[common], help="n-block upper bound for one configuration")
    sub.add_parser("spectral", parents=[common], help="spectral (n -> infinity) upper bound")
    sw = sub.add_parser("sweep", parents=[common], help="n-block bound over a list of values")
    sw.add_argument("--param", choices=["sigma", "alpha"], help="swept parameter")
    sw.add_argument("--values", help="comma-separated values")
    sw.add_argument("--timing", action="store_true", help="fill the solve_seconds column")
    ck = sub.add_parser("check", parents=[common], help="run the oracle self-check suite")
    ck.add_argument("--samples", type=int, default=100_000, help="random-search samples")
    return p


def _configure_logging(verbose):
    # a private handler, so that embedding applications (and test runners)
    # with their own root configuration still see our diagnostics
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    _configure_logging(args.verbose)
    try:
        cfg = build_config(args)
        if args.command == "nblock":
            return cmd_nblock(cfg)
        if args.command == "spectral":
            return cmd_spectral(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_check(cfg, args.samples)
    except (ConfigError, OSError) as exc:
        print(f"noisyfb: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MaxIterations, SingularFeedbackNoise) as exc:
        print(f"noisyfb: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
