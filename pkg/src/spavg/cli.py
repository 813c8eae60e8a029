"""Command-line front end: ``spavg <subcommand> [--config file.toml] [flags]``.

Config files are TOML with sections ``[system] [domain] [integrator] [sweep]
[constants]`` (plus an optional ``[figures]``); command-line flags override
config keys. Every written CSV/text file starts with a ``# seed = N`` line
followed by the library's own serialization.

Exit codes: 0 success, 1 domain or assumption failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from spavg.averaging import AverageNotWellDefined, build_fav_field, compute_fav_many, estimate_gamma
from spavg.bounds import CoarseGridError, ConstantSet, bound_report, bounds_to_csv
from spavg.constants import (
    BOUND_SAFETY,
    LIPSCHITZ_SAFETY,
    DecayViolation,
    estimate_bound_P,
    estimate_lav,
    estimate_lipschitz,
    fit_exponential_decay,
)
from spavg.experiments import FigureConfig, closeness_sweep, fit_order, reproduce_figures
from spavg.integrate import (
    IntegrationError,
    IntegratorConfig,
    integrate_boundary_layer,
    integrate_full,
    integrate_reduced,
)
from spavg.model import DomainError, DomainSpec, get_system
from spavg.scheme import GridResolutionError, build_time_grid, solve_Seps

DEFAULT_SEED = 42
SECTIONS = {"system", "domain", "integrator", "sweep", "constants", "figures"}


class ConfigError(ValueError):
    pass


FAILURES = (DomainError, DecayViolation, AverageNotWellDefined, IntegrationError, CoarseGridError,
            GridResolutionError)


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    unknown = set(cfg) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return cfg


class Settings:
    """Flag-over-config lookup."""

    def __init__(self, args, cfg):
        self.args, self.cfg = args, cfg

    def get(self, section, key, default=None, flag=None):
        v = getattr(self.args, flag or key, None)
        if v is not None:
            return v
        return self.cfg.get(section, {}).get(key, default)

    def floats(self, section, key, default=None, flag=None):
        v = self.get(section, key, default, flag)
        if v is None:
            return None
        try:
            return [float(a) for a in (v if isinstance(v, (list, tuple)) else [v])]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}.{key}: expected numbers, got {v!r}") from exc

    def scalar(self, section, key, default=None, flag=None):
        v = self.floats(section, key, default, flag)
        if v is None:
            return None
        if len(v) != 1:
            raise ConfigError(f"{section}.{key}: expected a single number")
        return v[0]


def _system(st: Settings):
    name = st.get("system", "name", "example", flag="system")
    try:
        sys_, dom, att = get_system(name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    R = st.scalar("domain", "R")
    eps1 = st.scalar("domain", "eps1")
    if R is not None or eps1 is not None:
        dom = DomainSpec(R=R or dom.R, M=dom.M, eps1=eps1 or dom.eps1)
    return sys_, dom, att


def _integrator(st: Settings) -> IntegratorConfig:
    sec = dict(st.cfg.get("integrator", {}))
    if st.args.method is not None:
        sec["method"] = st.args.method
    allowed = {"method", "h", "rel_tol", "abs_tol", "max_steps", "max_step"}
    bad = set(sec) - allowed
    if bad:
        raise ConfigError(f"unknown integrator keys: {sorted(bad)}")
    try:
        return IntegratorConfig(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from exc


def _constants(st: Settings, required=True):
    path = st.args.constants_file
    base = {}
    if path is not None:
        try:
            c = ConstantSet.from_text(Path(path).read_text())
        except (OSError, TypeError, ValueError) as exc:
            raise ConfigError(f"constants file {path}: {exc}") from exc
        base = {k: getattr(c, k) for k in ("L", "P", "L_av", "R", "z_bar", "T", "r_y", "beta_y", "delta_y")}
    base.update(st.cfg.get("constants", {}))
    for k in ("L", "P", "L_av", "R", "z_bar", "T", "r_y", "beta_y", "delta_y"):
        v = getattr(st.args, k, None)
        if v is not None:
            base[k] = v
    if not base and not required:
        return None
    try:
        return ConstantSet(**{k: float(v) for k, v in base.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"constants: {exc}") from exc


def _emit(text: str, out, seed: int, name: str | None = None):
    body = f"# seed = {seed}\n{text}"
    if out is None:
        sys.stdout.write(body)
        return
    p = Path(out)
    if name is not None:
        p.mkdir(parents=True, exist_ok=True)
        p = p / name
    else:
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(body)


def _gamma_fn(st: Settings):
    c = st.scalar("constants", "gamma_c", flag="gamma_c")
    if c is None:
        return None
    return lambda s: c / s


# --- subcommands ----------------------------------------------------------------------


def cmd_simulate(st: Settings):
    sys_, dom, _ = _system(st)
    cfg = _integrator(st)
    x0 = st.floats("sweep", "x0", [2.0])
    z0 = st.floats("sweep", "z0", [0.0, 1.5])
    T = st.scalar("sweep", "T", 10.0)
    kind = st.args.kind
    if kind == "full":
        eps = st.scalar("sweep", "eps", None)
        if eps is None:
            raise ConfigError("simulate full needs --eps")
        xt, zt = integrate_full(sys_, x0, z0, eps, T, cfg, dom)
        _emit(xt.to_csv(), st.args.out, st.seed, "x.csv" if st.args.out else None)
        _emit(zt.to_csv(), st.args.out, st.seed, "z.csv" if st.args.out else None)
    elif kind == "boundary":
        tau_end = st.scalar("sweep", "tau_end", 10.0, flag="tau_end")
        tr = integrate_boundary_layer(sys_, x0, z0, tau_end, cfg)
        _emit(tr.to_csv(), st.args.out, st.seed)
    else:
        f_av = sys_.f_av if sys_.f_av is not None else build_fav_field(sys_, z0, cfg=cfg)
        _emit(integrate_reduced(f_av, x0, T, cfg).to_csv(), st.args.out, st.seed)
    return 0


def cmd_average(st: Settings):
    sys_, dom, _ = _system(st)
    cfg = _integrator(st)
    xs = np.array(st.floats("sweep", "x", [0.7]))[:, None]
    z0 = st.floats("sweep", "z0", [1.2, 0.0])
    T_av = st.scalar("sweep", "T_av", 500.0, flag="T_av")
    res = compute_fav_many(sys_, xs, np.tile(z0, (len(xs), 1)), T_av, cfg)
    lines = ["x,f_av,cauchy_gap"]
    for r in res:
        lines.append(",".join(repr(float(v)) for v in (r.x[0], r.f_av[0], r.cauchy_gap)))
    out = st.args.out
    _emit("\n".join(lines) + "\n", out, st.seed, "fav.csv" if out else None)
    s_grid = st.floats("sweep", "s_grid", [5.0, 10.0, 20.0, 50.0, 100.0])
    f_av = sys_.f_av if sys_.f_av is not None else build_fav_field(sys_, z0, T_av, cfg)
    env = estimate_gamma(sys_, f_av, xs, [z0], s_grid, [0.0], cfg)
    _emit(env.to_csv(), out, st.seed, "gamma.csv" if out else None)
    return 0


def cmd_grid(st: Settings):
    eps = st.scalar("sweep", "eps")
    L = st.scalar("constants", "L")
    T = st.scalar("constants", "T", flag="T")
    if eps is None or L is None or T is None:
        raise ConfigError("grid needs --eps, --L and --T")
    _system(st)
    S = solve_Seps(L, T, eps)
    grid = build_time_grid(eps, S, T)
    lines = [f"# S_eps = {S!r}", f"# intervals = {grid.n_floor + 1}", "l,t_l"]
    if grid.resolvable:
        lines += [f"{l},{float(t)!r}" for l, t in enumerate(grid.t_grid)]
    else:
        print(f"grid spacing {grid.spacing!r} is below double resolution of T; table omitted",
              file=sys.stderr)
    _emit("\n".join(lines) + "\n", st.args.out, st.seed)
    return 0


def cmd_bounds(st: Settings):
    c = _constants(st)
    eps_list = st.floats("sweep", "eps")
    if not eps_list:
        raise ConfigError("bounds needs --eps")
    reports = [bound_report(e, c, _gamma_fn(st)) for e in eps_list]
    _emit(bounds_to_csv(reports), st.args.out, st.seed)
    return 0


def _sweep_eps(st: Settings):
    eps = st.floats("sweep", "eps")
    if eps:
        return eps
    e0 = st.scalar("sweep", "eps0", 0.15)
    k = int(st.scalar("sweep", "k_max", 6))
    return [e0 * 2.0 ** -i for i in range(k + 1)]


def cmd_sweep(st: Settings):
    sys_, dom, att = _system(st)
    cfg = _integrator(st)
    T = st.scalar("sweep", "T", 10.0)
    t_a = st.scalar("sweep", "t_a", None)
    c = _constants(st, required=False)
    res = closeness_sweep(sys_, dom, att, st.floats("sweep", "x0", [2.0]), st.floats("sweep", "z0", [0.0, 1.5]),
                          T, t_a, _sweep_eps(st), cfg, constants=c, gamma=_gamma_fn(st))
    _emit(res.to_csv(), st.args.out, st.seed)
    fit = fit_order(res)
    verdict = "PASS" if fit.supports_sqrt_order else "FAIL"
    for note in fit.notes:
        print(f"note: {note}", file=sys.stderr)
    print(f"slope = {fit.slope!r}, r2 = {fit.r2!r}, order >= 0.5: {verdict}")
    return 0


def cmd_figures(st: Settings):
    fig = st.cfg.get("figures", {})
    fc = FigureConfig(
        eps_values=tuple(float(e) for e in fig.get("eps_values", (0.15, 0.015))),
        T=float(fig.get("T", 10.0)),
        x0=float(fig.get("x0", 2.0)),
        z0=tuple(float(v) for v in fig.get("z0", (0.0, 1.5))),
        n_points=int(fig.get("n_points", 2001)),
        integrator=_integrator(st),
    )
    out = Path(st.args.out or "figures")
    data = reproduce_figures(fc)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("fig1.csv", "fig2.csv"):
        (out / name).write_text(f"# seed = {st.seed}\n{data[name]}")
    for name in ("fig1.svg", "fig2.svg"):
        (out / name).write_text(data[name])
    print(f"wrote {out}/fig1.csv fig2.csv fig1.svg fig2.svg")
    return 0


def cmd_estimate(st: Settings):
    sys_, dom, att = _system(st)
    cfg = _integrator(st)
    seed = st.seed
    T = st.scalar("constants", "T", 10.0, flag="T")
    n_pairs = int(st.scalar("constants", "n_pairs", 10_000, flag="n_pairs"))
    L = estimate_lipschitz(sys_, dom, n_pairs, seed=seed)
    P = estimate_bound_P(sys_, dom, max(1000, n_pairs), seed=seed)
    if sys_.f_av is not None:
        f_av = sys_.f_av
    else:
        f_av = build_fav_field(sys_, dom.M.sample(np.random.default_rng(seed), 1)[0], cfg=cfg)
    L_av = estimate_lav(f_av, dom.R, 1000, n=sys_.n, seed=seed)
    rng = np.random.default_rng(seed)
    z0s = dom.M.sample(rng, 6)
    x_fr = dom.sample_x(rng, 6, sys_.n)
    # log-linear fit down to dist 1e-8 needs near machine-precision runs
    tight = IntegratorConfig(rel_tol=min(cfg.rel_tol, 1e-12), abs_tol=min(cfg.abs_tol, 1e-14))
    runs = [integrate_boundary_layer(sys_, x, z, 15.0, tight) for x, z in zip(x_fr, z0s)
            if att.dist(z) > 1e-3]
    r_y, beta_y = fit_exponential_decay(runs, att)
    meta = {"seed": seed, "lipschitz_safety": LIPSCHITZ_SAFETY, "bound_safety": BOUND_SAFETY,
            "n_pairs": n_pairs, "system": sys_.name}
    c = ConstantSet(L=L, P=P, L_av=max(L_av, 1e-300), R=dom.R, z_bar=dom.z_bar, T=T, r_y=r_y,
                    beta_y=beta_y, meta=meta)
    text = c.to_text()
    if st.args.out is None:
        sys.stdout.write(text)
    else:
        Path(st.args.out).write_text(text)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "average": cmd_average,
    "grid": cmd_grid,
    "bounds": cmd_bounds,
    "sweep": cmd_sweep,
    "figures": cmd_figures,
    "estimate": cmd_estimate,
}


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--system", help="registered system name (default: example)")
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--out", help="output file or directory (default: stdout)")
    common.add_argument("--method", choices=["rk4-fixed", "rk45-adaptive"])
    common.add_argument("--eps", type=_floats, help="eps value(s), comma separated")
    common.add_argument("--T", type=float)
    common.add_argument("--x0", type=_floats)
    common.add_argument("--z0", type=_floats)
    common.add_argument("--constants-file", dest="constants_file", help="ConstantSet text file")
    for k in ("L", "P", "L_av", "R", "z_bar", "r_y", "beta_y", "delta_y", "gamma_c"):
        common.add_argument(f"--{k.replace('_', '-')}", dest=k, type=float)

    p = argparse.ArgumentParser(prog="spavg", description="Averaging analysis of singularly perturbed ODEs")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="full, boundary-layer or reduced trajectory")
    s.add_argument("--kind", choices=["full", "boundary", "reduced"], default="full")
    s.add_argument("--tau-end", dest="tau_end", type=float)
    a = sub.add_parser("average", parents=[common], help="average field and gamma envelope")
    a.add_argument("--x", type=_floats)
    a.add_argument("--T-av", dest="T_av", type=float)
    a.add_argument("--s-grid", dest="s_grid", type=_floats)
    sub.add_parser("grid", parents=[common], help="S_eps and the interval table")
    sub.add_parser("bounds", parents=[common], help="bound report over an eps list")
    sub.add_parser("sweep", parents=[common], help="closeness sweep and order fit")
    sub.add_parser("figures", parents=[common], help="datasets and plots of the example")
    e = sub.add_parser("estimate", parents=[common], help="estimate the analysis constants")
    e.add_argument("--n-pairs", dest="n_pairs", type=int)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
        st = Settings(args, cfg)
        seed = args.seed if args.seed is not None else cfg.get("sweep", {}).get("seed", DEFAULT_SEED)
        st.seed = int(seed)
        return COMMANDS[args.command](st)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FAILURES as exc:
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return 2


def main():
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
