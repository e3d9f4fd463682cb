"""Command-line front end: ``crack solve|verify|bounds|norms|special``.

Every command reads a ``key = value`` config (``--config``), accepts
``--key value`` overrides and writes its artifacts plus ``manifest.json``
under ``--out``.  Outputs are deterministic; wall-clock timings go to
``timing.txt``, which is left out of the checksummed inventory.

Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 a numerical
stage raised.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import mpmath
import numpy as np
import scipy

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, CrackError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2, 3
COMMANDS = ("solve", "verify", "bounds", "norms", "special")


def fmt(x) -> str:
    """17 significant digits, round-trip safe."""
    return "%.17g" % x


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def write_json(path: Path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Output directory, stage timing and the manifest."""

    def __init__(self, command: str, cfg: RunConfig, out: Path):
        self.command, self.cfg, self.out = command, cfg, out
        out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.timing: list[tuple[str, float]] = []
        self.estimates: dict = {}

    def stage(self, name, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        except CrackError as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timing.append((name, time.perf_counter() - t0))

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def finish(self, status: str):
        with open(self.path("config.txt"), "w", newline="\n") as fh:
            fh.write(self.cfg.to_text())
        with open(self.out / "timing.txt", "w") as fh:
            for name, dt in self.timing:
                fh.write(f"{name} {dt:.3f} s\n")
        manifest = {
            "command": self.command,
            "status": status,
            "config": self.cfg.to_dict(),
            "versions": {"crackmellin": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "mpmath": mpmath.__version__,
                         "python": platform.python_version()},
            "stages": [name for name, _ in self.timing],
            "timing_file": "timing.txt",
            "error_estimates": self.estimates,
            "files": {name: _sha256(self.out / name) for name in sorted(set(self.files))},
        }
        write_json(self.out / "manifest.json", manifest)


class StageError(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"stage {stage}: {type(exc).__name__}: {exc}")
        self.stage, self.exc = stage, exc


# ---------------------------------------------------------------------------
# commands

def _grids(cfg: RunConfig):
    r = np.logspace(np.log10(cfg.r_min), np.log10(cfg.r_max), cfg.n_r)
    theta = np.linspace(-np.pi, np.pi, cfg.n_theta)
    return r, theta


def _solve(run: Run):
    from .solver import solve
    cfg = run.cfg
    f = run.stage("source", cfg.build_source)
    params = cfg.solver_params()
    r, theta = _grids(cfg)
    bundle = run.stage("solve", solve, f, params, r=r, theta=theta,
                       compat_rel_tol=cfg.compat_rel_tol)
    run.estimates.update({k: float(v) for k, v in bundle.diagnostics.items()})
    return f, params, bundle


def cmd_solve(run: Run) -> int:
    _, _, b = _solve(run)
    write_csv(run.path("q.csv"), ["r", "q", "q_prime", "q_second"],
              zip(b.r, b.q, b.q_prime, b.q_second))
    write_csv(run.path("p.csv"), ["r", "theta", "p"],
              ((rv, tv, b.p[i, j]) for i, rv in enumerate(b.r) for j, tv in enumerate(b.theta)))
    tr = b.p_at(b.r, [np.pi, -np.pi])
    write_csv(run.path("traces.csv"),
              ["r", "p_plus", "p_minus", "p_theta_plus", "p_theta_minus", "q"],
              zip(b.r, tr[:, 0], tr[:, 1], b.p_theta_plus, b.p_theta_minus, b.q))
    print(f"solved: {len(b.r)} radii x {len(b.theta)} angles -> {run.out}")
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    from . import verify as V
    _, params, b = _solve(run)
    reports = run.stage("residuals", V.run_all, b, sign_audit=run.cfg.sign_audit)
    reports += run.stage("polynomial_oracle", V.polynomial_oracle_check, seed=run.cfg.seed)
    write_json(run.path("residuals.json"), [r.to_dict() for r in reports])
    table = V.summary_table(reports)
    with open(run.path("summary.txt"), "w") as fh:
        fh.write(table + "\n")
    print(table)
    for r in reports:
        if r.name == "ode_coupling" and "audit_minimizer" in r.details:
            print(f"sign audit: residual-minimizing coupling sign is "
                  f"{r.details['audit_minimizer']} (ratio {r.details['audit_ratio']:.3g})")
    failed = [r.name for r in reports if r.passed is False]
    run.estimates["failed_checks"] = failed
    return EXIT_CHECK if failed else EXIT_OK


def cmd_bounds(run: Run) -> int:
    from . import bounds as B
    cfg = run.cfg
    grid = B.default_grid(cfg.bounds_extent, cfg.bounds_step)
    master = run.stage("master_bound", B.check_phi_master_bound, cfg.sigma, cfg.vartheta,
                       cfg.M, grid, keep_rows=True)
    lemmas = run.stage("lemma_bounds", B.check_lemma_bounds, cfg.sigma, cfg.vartheta, cfg.M, grid)
    write_csv(run.path("regions.csv"), ["region", "eta", "tau", "abs_phi", "majorant", "ratio"],
              master.rows)
    out = {"master": master.to_dict(), "lemmas": [c.to_dict() for c in lemmas],
           "sigma": cfg.sigma, "vartheta": cfg.vartheta, "M": cfg.M}
    checks = [master] + lemmas
    ok = all(c.passed for c in checks)
    lines = [c.line() for c in checks]
    if cfg.g2:
        g2 = run.stage("g2_bound", B.check_g2_bound, cfg.vartheta, cfg.g2_sigma,
                       2.0 * cfg.kappa2)
        d = g2.to_dict()
        d["g2"] = [[v.real, v.imag] for v in g2.g2]
        out["g2"] = d
        ok = ok and g2.passed
        lines.append(f"{'PASS' if g2.passed else 'FAIL'}  G2 bound               C {g2.C:10.3e}  "
                     f"slopes {g2.slope_small:.3f} / {g2.slope_large:.3f} (sigma {g2.sigma})")
    params = cfg.solver_params()
    tip = run.stage("q2_tip_bound", B.check_q2_tip_bound, cfg.build_source(), params)
    out["q2_tip"] = tip.to_dict()
    ok = ok and tip.passed
    lines.append(f"{'PASS' if tip.passed else 'FAIL'}  q2' tip bound          C {tip.C:10.3e}  "
                 f"slope {tip.slope:.3f} (target {tip.target:.3f})")
    write_json(run.path("constants.json"), out)
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_norms(run: Run) -> int:
    from . import verify as V
    cfg = run.cfg
    f = run.stage("source", cfg.build_source)
    rep = run.stage("norms", V.norm_estimate_report, f, cfg.solver_params())
    d = rep.to_dict()
    d["bound"] = V.NORM_RATIO_BOUND
    d["within_bound"] = bool(rep.ratio <= V.NORM_RATIO_BOUND)
    write_json(run.path("norms.json"), d)
    print(f"ratio {rep.ratio:.6g} (bound {V.NORM_RATIO_BOUND}); ||p||_Omega {rep.p_domain:.6g}, "
          f"||p||_Sigma {rep.p_trace:.6g}, ||q||_Sigma {rep.q_trace:.6g}, ||f|| {rep.f_norm:.6g}")
    return EXIT_OK if d["within_bound"] else EXIT_CHECK


def _special_row(z: complex, kappa0: float):
    from . import special as S
    vals = []
    for fn in (lambda v: S.gamma(v), lambda v: S.omega(v), lambda v: S.k_product(v),
               lambda v: S.k0(v), lambda v: S.k1(v), lambda v: S.d0(v, kappa0)):
        try:
            w = complex(fn(z).value)
        except CrackError:
            w = complex("nan+nanj")
        vals += [w.real, w.imag]
    return [z.real, z.imag] + vals


def parse_points(text: str):
    try:
        return [complex(p.strip().replace(" ", "")) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad point list {text!r}: {exc}") from None


def cmd_special(run: Run) -> int:
    pts = parse_points(run.cfg.points)
    rows = [run.stage("special", _special_row, z, 2.0 * run.cfg.kappa2) for z in pts]
    header = ["re", "im"] + [f"{n}_{p}" for n in ("gamma", "omega", "K", "K0", "K1", "d0")
                             for p in ("re", "im")]
    write_csv(run.path("special.csv"), header, rows)
    for row in rows:
        print(" ".join(fmt(v) for v in row))
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "verify": cmd_verify, "bounds": cmd_bounds,
            "norms": cmd_norms, "special": cmd_special}


def _split_overrides(extra):
    """--key value pairs (also --key=value) into a dict."""
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            try:
                val = next(it)
            except StopIteration:
                raise ConfigError(f"missing value for --{key}") from None
        out[key] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crack", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", default="crack_out", help="output directory")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    try:
        threads = os.environ.get("CRACK_THREADS")
        if threads is not None and not (threads.isdigit() and int(threads) > 0):
            raise ConfigError(f"CRACK_THREADS must be a positive integer, got {threads!r}")
        cfg = load_config(args.config, _split_overrides(extra))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = Run(args.command, cfg, Path(args.out))
    try:
        code = HANDLERS[args.command](run)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.finish(f"error: {exc}")
        return EXIT_STAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run.finish("ok" if code == EXIT_OK else "checks failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
