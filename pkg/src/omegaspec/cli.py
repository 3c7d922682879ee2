"""``omega`` command-line interface.

Subcommands: ``catalog`` (closed-form spectra), ``mesh`` (FEM pipeline),
``verify`` (property suites) and ``probe`` (flat-torus positivity probe).
Every run prints or writes an ``omega-report/1`` JSON document.

Exit codes: 0 success, 1 a verification case or probe failed,
2 invalid input, 3 insufficient spectrum or unresolved numerics.
"""

from __future__ import annotations

import os

_THREADS = os.environ.get("OMEGA_THREADS", "1")
if _THREADS.isdigit() and int(_THREADS) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS)

import argparse  # noqa: E402
import configparser  # noqa: E402
import logging  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import catalog as cat  # noqa: E402
from .errors import ConvergenceError, InputError, InsufficientSpectrumError, ResolutionError  # noqa: E402
from .report import build_report, dumps, spectrum_csv  # noqa: E402

log = logging.getLogger("omega")

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_SPECTRUM = 0, 1, 2, 3
CONFIG_SECTION = "omega"


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text}") from None


def _global_options(p, default):
    kw = {} if default else {"default": argparse.SUPPRESS}
    p.add_argument("--config", help="INI file with an [omega] section; CLI flags override its keys", **kw)
    p.add_argument("--output", "-o", help="write the JSON report here instead of stdout", **kw)
    p.add_argument("--csv", help="also write the spectrum table as CSV (k, value, multiplicity, witness)", **kw)
    p.add_argument("--verbose", "-v", action="store_true", **kw)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="omega", description="Omega_k = Lambda_k(Ric) spectra: catalog, meshes, verification, torus probes.")
    _global_options(p, default=True)
    # the same flags are accepted after the subcommand as well
    common = _Parser(add_help=False)
    _global_options(common, default=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("catalog", help="closed-form spectra")
    csub = c.add_subparsers(dest="target", required=True, parser_class=_Parser)
    s = csub.add_parser("sphere", parents=[common])
    s.add_argument("--dim", type=_positive_int, default=2)
    s.add_argument("--radius", type=_positive_float, default=1.0)
    s.add_argument("--top", type=_positive_int, default=3)
    s.add_argument("--max-level", type=_positive_int, default=None)
    t = csub.add_parser("torus", parents=[common])
    t.add_argument("--periods", type=_float_list, default=(2 * math.pi, 2 * math.pi))
    t.add_argument("--top", type=_positive_int, default=3)
    t.add_argument("--max-norm", type=_positive_float, default=None)
    pr = csub.add_parser("product", parents=[common])
    pr.add_argument("--factor1", default=None, help="sphere:DIM:RADIUS")
    pr.add_argument("--factor2", default=None, help="sphere:DIM:RADIUS")
    pr.add_argument("--a1", type=float, default=None, help="Einstein constant of factor 1 (with --spectrum1)")
    pr.add_argument("--a2", type=float, default=None)
    pr.add_argument("--dim1", type=_positive_int, default=2)
    pr.add_argument("--dim2", type=_positive_int, default=2)
    pr.add_argument("--spectrum1", default=None, help="CSV of 'eigenvalue,multiplicity' rows starting at 0,1")
    pr.add_argument("--spectrum2", default=None)
    pr.add_argument("--top", type=_positive_int, default=10)
    h = csub.add_parser("heisenberg", parents=[common])
    h.add_argument("--n", type=_positive_int, default=1)
    h.add_argument("--d", type=_float_list, default=None)
    h.add_argument("--g-last", type=_positive_float, default=1.0)
    h.add_argument("--sup", action="store_true", help="report the supremum over metrics and a metric attaining it")
    u = csub.add_parser("unitary", parents=[common])
    u.add_argument("--n", type=_positive_int, default=2)
    u.add_argument("--r", type=_positive_float, default=1.0)

    m = sub.add_parser("mesh", parents=[common], help="FEM Omega spectrum of a closed surface")
    m.add_argument("--gen", choices=["icosphere", "ellipsoid", "blob", "flat-torus", "torus"], default=None)
    m.add_argument("--input", default=None, help="OFF or OBJ file")
    m.add_argument("--subdiv", type=_nonneg_int, default=4)
    m.add_argument("--axes", type=_float_list, default=(2.0, 1.0, 1.0))
    m.add_argument("--eps", type=_float_list, default=(0.4, 0.2, 0.1))
    m.add_argument("--resolution", type=_positive_int, default=32, help="grid size for torus generators")
    m.add_argument("--eigs", type=_positive_int, default=100, help="Galerkin basis size")
    m.add_argument("--top", type=_positive_int, default=5)

    v = sub.add_parser("verify", parents=[common], help="property suites")
    v.add_argument("--suite", default="all")
    v.add_argument("--seed", type=_nonneg_int, default=0)
    v.add_argument("--cases", type=_positive_int, default=None)
    v.add_argument("--ci", action="store_true", help="use the larger CI case count")

    q = sub.add_parser("probe", parents=[common], help="flat-torus positivity probe")
    q.add_argument("--field", default="identity")
    q.add_argument("--field-file", default=None, help="CSV rows i,j,S11,S12,S22")
    q.add_argument("--periods", type=_float_list, default=(2 * math.pi, 2 * math.pi))
    q.add_argument("--k", type=_positive_int, default=1)
    q.add_argument("--grid", type=_positive_int, default=64)
    q.add_argument("--fourier-max-freq", type=_nonneg_int, default=0, help="also count positive Fourier values")
    q.add_argument("--seed", type=_nonneg_int, default=0)
    return p


# --- config handling --------------------------------------------------------------------


def _subparser(parser, args):
    """The innermost parser handling ``args.command`` (and the catalog target)."""
    for action in parser._subparsers._group_actions:
        sp = action.choices[args.command]
        if args.command == "catalog":
            for a in sp._subparsers._group_actions:
                return a.choices[args.target]
        return sp
    raise AssertionError


def _config_argv(path, subparser) -> list:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise InputError(f"cannot read config file {path}")
    if cp.sections() != [CONFIG_SECTION]:
        raise InputError(f"config file must have exactly one [{CONFIG_SECTION}] section")
    options = {}
    for act in subparser._actions:
        for s in act.option_strings:
            if s.startswith("--"):
                options[s[2:].replace("-", "_")] = (s, act)
    out = []
    for key, value in cp[CONFIG_SECTION].items():
        name = key.replace("-", "_")
        if name not in options or name in ("help", "config"):
            raise InputError(f"unknown config key {key!r} for this command")
        flag, act = options[name]
        if isinstance(act, argparse._StoreTrueAction):
            if cp[CONFIG_SECTION].getboolean(key):
                out.append(flag)
        else:
            out += [flag, value]
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    sp = _subparser(parser, args)
    extra = _config_argv(args.config, sp)
    # insert config flags right after the (sub)command so later CLI flags win
    idx = argv.index(args.command) + 1
    if args.command == "catalog":
        idx = argv.index(args.target, idx) + 1
    return parser.parse_args(list(argv[:idx]) + extra + list(argv[idx:]))


def _config_dict(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in ("config", "output", "csv", "verbose")}
    return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(d.items())}


# --- commands -----------------------------------------------------------------------------


def _values(omegas):
    return [o.to_dict() for o in omegas]


def _read_spectrum(path, a, dim, label):
    if path is None:
        raise InputError(f"{label}: give --factorN or both --aN and --spectrumN")
    try:
        rows = [ln for ln in Path(path).read_text().splitlines() if ln.split("#", 1)[0].strip()]
        data = np.loadtxt(rows, delimiter=",", ndmin=2) if rows else None
    except (OSError, ValueError) as exc:
        raise InputError(f"{label}: cannot read spectrum file {path}: {exc}") from None
    if data is None:
        raise InputError(f"{label}: spectrum file {path} is empty")
    if data.shape[1] != 2:
        raise InputError(f"{label}: spectrum rows must be 'eigenvalue,multiplicity'")
    if a is None:
        raise InputError(f"{label}: Einstein constant missing")
    return cat.EinsteinFactor(a, tuple(data[:, 0]), tuple(int(x) for x in data[:, 1]), dim, label)


def _factor_builder(spec):
    try:
        kind, dim, radius = spec.split(":")
        dim, radius = int(dim), float(radius)
    except ValueError:
        raise InputError(f"factor must look like sphere:DIM:RADIUS, got {spec!r}") from None
    if kind != "sphere":
        raise InputError(f"only sphere factors can be generated, got {kind!r}")
    return lambda level: cat.sphere_spectrum(dim, radius, level), dim


def cmd_catalog(args):
    t = args.target
    if t == "sphere":
        level = args.max_level or max(args.top, 10)
        f = cat.sphere_spectrum(args.dim, args.radius, level)
        omegas = cat.einstein_omega(f, args.top)
        results = {"omega": _values(omegas), "lambda_of_g": _values(cat.catalog_lambda_of_g(f, args.top)), "einstein_const": f.einstein_const}
        dim = args.dim
    elif t == "torus":
        if len(args.periods) < 1 or any(p <= 0 for p in args.periods):
            raise InputError("periods must be positive")
        max_norm = args.max_norm
        if max_norm is None:
            max_norm = (2 * math.pi / min(args.periods)) ** 2 * (args.top + 1) ** 2
        f = cat.torus_spectrum(args.periods, max_norm)
        omegas = cat.einstein_omega(f, args.top)
        results = {"omega": _values(omegas), "lambda_of_g": _values(cat.catalog_lambda_of_g(f, args.top)), "einstein_const": 0.0}
        dim = len(args.periods)
    elif t == "product":
        if args.factor1 and args.factor2:
            b1, d1 = _factor_builder(args.factor1)
            b2, d2 = _factor_builder(args.factor2)
            omegas, _ = cat.product_spectra_for(b1, b2, args.top)
        else:
            f1 = _read_spectrum(args.spectrum1, args.a1, args.dim1, "factor1")
            f2 = _read_spectrum(args.spectrum2, args.a2, args.dim2, "factor2")
            d1, d2 = f1.dim, f2.dim
            omegas = cat.product_omega(f1, f2, args.top)
        results = {"omega": _values(omegas)}
        dim = d1 + d2
    elif t == "heisenberg":
        if args.sup:
            sup = cat.heisenberg_sup(args.n)
            metric = cat.heisenberg_sup_metric(args.n, tail=0.0 if args.n <= 2 else 1e-3)
            om = cat.heisenberg_omega1(metric)
            results = {"sup": sup, "witness_metric": {"d": metric.d, "g_last": metric.g_last}, "omega": [om.to_dict()]}
            omegas = [om]
            value = sup
        else:
            d = args.d or (1.0,) * args.n
            metric = cat.HeisenbergMetric(d, args.g_last)
            om = cat.heisenberg_omega1(metric)
            omegas = [om]
            results = {"omega": [om.to_dict()], "maximizer": cat.heisenberg_maximizer(metric)}
            value = om.value
        dim = 2 * len(metric.d) + 1
        margin = cat.bochner_ceiling(dim) - value
        return results, {"bound": cat.bochner_ceiling(dim), "omega1": value, "margin": margin}, omegas
    elif t == "unitary":
        val = cat.unitary_omega1(args.n, args.r)
        omegas = [cat.OmegaValue(val, None, f"U({args.n}), r={args.r:g}")]
        results = {"omega": _values(omegas)}
        dim = args.n**2
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown catalog target {t}")
    omega1 = omegas[0].value if omegas else 0.0
    margins = {"bound": cat.bochner_ceiling(dim), "omega1": omega1, "margin": cat.bochner_ceiling(dim) - omega1}
    return results, margins, omegas


def _mesh_from_args(args):
    from .mesh import ellipsoid, flat_torus, icosphere, load_mesh, revolution_torus

    if args.input:
        return load_mesh(args.input)
    gen = args.gen or "icosphere"
    if gen == "icosphere":
        return icosphere(args.subdiv)
    if gen == "ellipsoid":
        if len(args.axes) != 3:
            raise InputError("--axes needs three semi-axes")
        return ellipsoid(args.axes, args.subdiv)
    if gen == "flat-torus":
        return flat_torus(args.resolution, args.resolution)
    if gen == "torus":
        return revolution_torus(nu=2 * args.resolution, nv=args.resolution)
    raise InputError(f"unknown generator {gen}")


def cmd_mesh(args):
    from .mesh import blob_experiment, omega_spectrum

    if args.input and args.gen:
        raise InputError("give either --input or --gen, not both")
    if args.gen == "blob":
        rows = blob_experiment(args.eps, basis_size=args.eigs, base_subdiv=args.subdiv)
        table = [{"eps": r.eps, "omega1": r.omega1, "n_vertices": r.n_vertices, "converged": r.converged} for r in rows]
        om = [r.omega1 for r in rows]
        results = {"blob": table, "monotone": bool(all(b > a for a, b in zip(om, om[1:])))}
        margins = {"bound": 0.5, "omega1": om[-1], "margin": 0.5 - om[-1]}
        omegas = [cat.OmegaValue(r.omega1, 1, f"eps={r.eps:g}") for r in rows]
        return results, margins, omegas, {}
    mesh = _mesh_from_args(args)
    res = omega_spectrum(mesh, basis_size=args.eigs, top=args.top)
    from .forms import group_values

    grouped = group_values(res.omega, rtol=1e-6)
    omegas = [cat.OmegaValue(float(v), m, "galerkin") for v, m in grouped]
    results = {
        "mesh": {"name": mesh.name, "vertices": mesh.n_vertices, "faces": mesh.n_faces, "euler_characteristic": mesh.euler_characteristic},
        "omega": _values(omegas),
        "omega_values": res.omega,
        "omega_half_basis": res.omega_half,
        "converged": res.converged,
        "gauss_bonnet_residual": res.gauss_bonnet_residual,
        "fallback_faces": res.fallback_count,
        "lambda1": res.lambda1,
        "zero_dim": res.spectrum.zero_dim,
    }
    margins = {"bound": 0.5, "omega1": res.omega1, "margin": res.margin}
    return results, margins, omegas, res.timings


def cmd_verify(args):
    from .verify import CI_CASES, DEFAULT_CASES, SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else args.suite.split(",")
    for n in names:
        if n not in SUITES:
            raise InputError(f"unknown suite {n!r}; choose from {sorted(SUITES)} or 'all'")
    cases = args.cases or (CI_CASES if args.ci else DEFAULT_CASES)
    reports = [run_suite(n, cases=cases, seed=args.seed) for n in names]
    results = {"suites": [r.to_dict() for r in reports]}
    timings = {r.suite: r.wall_time for r in reports}
    failed = sum(len(r.failures) for r in reports)
    return results, {"failures": failed}, [], timings, failed == 0


def cmd_probe(args):
    from .torus import field_from_csv, fourier_omega, named_field, positivity_probe

    if args.grid < 16 or args.grid & (args.grid - 1):
        raise InputError("--grid must be a power of 2 >= 16")
    field = field_from_csv(args.field_file, args.periods) if args.field_file else named_field(args.field, args.grid, args.periods)
    res = positivity_probe(field, args.k)
    lam = res.sample_lambda(100, args.seed)
    results = {
        "field": field.name,
        "k": args.k,
        "K": res.K,
        "N": res.N,
        "gram_min_eig": res.gram_min_eig,
        "delta": res.delta,
        "passed": res.passed,
        "inconclusive": not res.passed,
        "sample_lambda_min": float(lam.min()),
    }
    if args.fourier_max_freq:
        spec = fourier_omega(field, args.fourier_max_freq)
        results["fourier_positive_count"] = int(spec.positive.size)
    return results, {"gram_min_eig": res.gram_min_eig}, [], {}, res.passed


def run(args):
    """Execute a parsed command; returns (report, omegas, ok)."""
    t0 = time.perf_counter()
    ok = True
    if args.command == "catalog":
        results, margins, omegas = cmd_catalog(args)
        timings = {}
    elif args.command == "mesh":
        results, margins, omegas, timings = cmd_mesh(args)
    elif args.command == "verify":
        results, margins, omegas, timings, ok = cmd_verify(args)
    else:
        results, margins, omegas, timings, ok = cmd_probe(args)
    timings = {**timings, "total": time.perf_counter() - t0}
    report = build_report(args.command if args.command != "catalog" else f"catalog {args.target}", _config_dict(args), results, margins, timings)
    return report, omegas, ok


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="omega: %(message)s")
    try:
        if not (_THREADS.isdigit() and int(_THREADS) > 0):
            raise InputError(f"OMEGA_THREADS must be a positive integer, got {_THREADS!r}")
        args = parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        report, omegas, ok = run(args)
    except InsufficientSpectrumError as exc:
        print(f"omega: insufficient spectrum: {exc}", file=sys.stderr)
        return EXIT_SPECTRUM
    except (ConvergenceError, ResolutionError) as exc:
        print(f"omega: {exc}", file=sys.stderr)
        return EXIT_SPECTRUM
    except InputError as exc:
        print(f"omega: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = dumps(report)
    if args.output:
        Path(args.output).write_text(text)
        log.info("report written to %s", args.output)
    else:
        sys.stdout.write(text)
    if args.csv:
        Path(args.csv).write_text(spectrum_csv([o.to_dict() for o in omegas]))
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
