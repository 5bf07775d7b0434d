"""Command-line front end.

Exit status: 0 success, 1 check failure, 2 input error.  Every command writes
its reports into the output directory; JSON is written with sorted keys and
floats in ``repr`` form, so reruns with the same configuration and seed give
identical bytes.
"""

from __future__ import annotations

import argparse
import itertools
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .config import ConfigError, RunConfig, load_config
from .deformations import (FluxNotZero, NotHarmonic, homotopy_eval, ldefor2_family,
                           ldefor2_hamiltonian_residual, ldefor2_sequence_report, weinstein_deform)
from .examples import (NotHamiltonianConjugator, RotationSpec, build_conjugated, build_rotation,
                       build_strip_scenario, conjugated_trend, mollified_conjugator,
                       smooth_conjugator)
from .flows import (Isotopy, LiftBroken, NoConvergence, StepUnstable, compose, generator_of,
                    path_distance, time_shift)
from .flux import (basis_classes, class_vectors, duality_table, flux, flux_direct,
                   hamiltonian_classifier, mass_flow_trace)
from .hodge import NotClosed
from .generators import (DiscretizationMismatch, Generator, cauchy_report_gen, group_inverse,
                         group_product, linf_family_norm, vf_norms)
from .hofer import (NoDisplacer, NoValidCandidate, Region, RotationSearch, displacement_energy_upper,
                    displacement_test, length_report, norm_upper)
from .io import (ContainerError, dumps_json, load_generator, load_isotopy, rows_to_csv, save_family,
                 save_generator, save_isotopy, write_json, write_text)
from .torus import DimensionMismatch, TorusGrid, flat_vector
from .verify import SUITES, checks_to_csv, run_suite, sin_harmonic_generator

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2

BUILTINS = ("zero", "rotation", "random", "random-ham", "sin-harmonic", "constant-harmonic",
            "bump", "conjugated")

CHECK_ERRORS = (NoDisplacer, NoValidCandidate, StepUnstable, NoConvergence, LiftBroken)
INPUT_ERRORS = (FluxNotZero, NotClosed, NotHamiltonianConjugator, NotHarmonic, ContainerError,
                ConfigError, DiscretizationMismatch, DimensionMismatch, FileNotFoundError, ValueError)


class CheckFailed(RuntimeError):
    """A command's own acceptance check failed."""


class Context:
    """Resolved configuration, grid, integrator and output directory of one run."""

    def __init__(self, cfg: RunConfig, plot: bool):
        self.cfg = cfg
        self.plot = plot
        self.grid = TorusGrid(cfg.n, cfg.grid_size)
        self.intg = cfg.integrator()
        self.out = Path(cfg.out)
        self.written = []

    def path(self, name: str) -> Path:
        return self.out / name

    def json(self, name: str, obj) -> None:
        self.written.append(write_json(self.path(name), obj))

    def text(self, name: str, text: str) -> None:
        self.written.append(write_text(self.path(name), text))

    def figure(self, fn, name: str, *args, **kwargs) -> None:
        if self.plot:
            self.written.append(fn(*args, self.path(name), **kwargs))


# --- generator sources ----------------------------------------------------------

def resolve_generator(ctx: Context, source: str) -> tuple:
    """Return ``(generator, provenance)`` for a manifest path or a builtin name.

    Builtins take an optional ``:arg``: ``rotation:J`` reparametrizes by
    f_J, ``bump:W`` sets the bump width.
    """
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        g = load_generator(path)
        return g, {"file": str(path)}
    name, _, arg = source.partition(":")
    if name not in BUILTINS:
        raise ValueError(f"{source!r} is neither a generator file nor a builtin {BUILTINS}")
    cfg, grid, steps = ctx.cfg, ctx.grid, ctx.cfg.steps
    prov = {"builtin": name}
    if name == "zero":
        g = Generator.zero(grid, steps)
    elif name == "rotation":
        j = int(arg) if arg else None
        g = build_rotation(RotationSpec(cfg.rotation, j), grid, steps)
        prov.update(v=list(cfg.rotation), reparam_j=j)
    elif name in ("random", "random-ham"):
        rng = np.random.default_rng(cfg.seed + (int(arg) if arg else 0))
        g = Generator.random(rng, grid, steps, amplitude=cfg.amplitude,
                             hamiltonian_only=name == "random-ham")
        prov.update(seed=cfg.seed, offset=int(arg) if arg else 0, amplitude=cfg.amplitude)
    elif name == "sin-harmonic":
        amp = float(arg) if arg else 0.3
        g = sin_harmonic_generator(grid, steps, amp)
        prov.update(amplitude=amp)
    elif name == "constant-harmonic":
        e1 = np.zeros(grid.dim)
        e1[0] = float(arg) if arg else 1.0
        g = Generator.autonomous(grid, steps, harm=e1)
        prov.update(coeffs=e1.tolist())
    elif name == "bump":
        width = float(arg) if arg else 0.15
        g = smooth_conjugator(grid, steps, cfg.conj_amplitude, width)
        prov.update(amplitude=cfg.conj_amplitude, width=width)
    else:
        width = float(arg) if arg else cfg.conj_widths[-1]
        conj = mollified_conjugator(grid, steps, cfg.conj_amplitude, width)
        g, _ = build_conjugated(RotationSpec(cfg.rotation), conj, ctx.intg)
        prov.update(v=list(cfg.rotation), amplitude=cfg.conj_amplitude, width=width)
    return g, prov


def parse_region(text: str, grid: TorusGrid) -> Region:
    """``strip:NU``, ``ball:C1,..,C2n:R`` or ``whole``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "strip":
            return Region.strip(float(rest))
        if kind == "ball":
            center, _, radius = rest.rpartition(":")
            return Region.ball(tuple(float(x) for x in center.split(",")), float(radius))
        if kind == "whole":
            return Region.whole(grid)
    except ValueError as exc:
        raise ValueError(f"bad region {text!r}: {exc}") from exc
    raise ValueError(f"unknown region {text!r}; use strip:NU, ball:C..:R or whole")


def _summary_lengths(g: Generator, ctx: Context) -> dict:
    return length_report(g, ctx.intg).to_dict()


# --- commands -------------------------------------------------------------------

def cmd_integrate(ctx: Context, args) -> dict:
    g, prov = resolve_generator(ctx, args.generator)
    phi = ctx.intg.integrate(g)
    ctx.written.append(save_isotopy(ctx.path("isotopy.json"), phi))
    lengths = _summary_lengths(g, ctx)
    ctx.json("lengths.json", {"source": prov, "lengths": lengths})
    ctx.figure(plotting.plot_isotopy, "isotopy.png", phi)
    ctx.figure(plotting.plot_lengths, "lengths.png", g)
    return {"lengths": lengths, "steps": phi.steps, "lift_jump": phi.lift_jump()}


def cmd_generator_of(ctx: Context, args) -> dict:
    phi = load_isotopy(args.isotopy)
    g = generator_of(phi, ctx.intg)
    ctx.written.append(save_generator(ctx.path("generator.json"), g))
    ctx.figure(plotting.plot_lengths, "lengths.png", g)
    return {"linf_norm": linf_family_norm(g), "harmonic_max": float(np.abs(g.harms).max())}


def cmd_product(ctx: Context, args) -> dict:
    a, pa = resolve_generator(ctx, args.first)
    b, pb = resolve_generator(ctx, args.second)
    ab = group_product(a, b, ctx.intg)
    ctx.written.append(save_generator(ctx.path("product.json"), ab))
    lhs = ctx.intg.integrate(ab)
    rhs = compose(ctx.intg.integrate(a), ctx.intg.integrate(b), ctx.intg)
    dbar = path_distance(lhs, rhs, ctx.intg).dbar
    report = {"first": pa, "second": pb, "isomorphism_dbar": dbar, "tol": ctx.cfg.check_tol}
    ctx.json("product_report.json", report)
    return report


def cmd_inverse(ctx: Context, args) -> dict:
    g, prov = resolve_generator(ctx, args.generator)
    inv = group_inverse(g, ctx.intg)
    ctx.written.append(save_generator(ctx.path("inverse.json"), inv))
    unit = ctx.intg.integrate(group_product(g, inv, ctx.intg))
    dbar = path_distance(unit, Isotopy.identity(ctx.grid, g.steps), ctx.intg).dbar
    report = {"source": prov, "inverse_law_dbar": dbar, "tol": ctx.cfg.check_tol}
    ctx.json("inverse_report.json", report)
    return report


def cmd_flux(ctx: Context, args) -> dict:
    g, prov = resolve_generator(ctx, args.generator)
    report = {"source": prov, "flux": flux(g).coeffs.tolist(),
              "classifier": hamiltonian_classifier(g, ctx.cfg.flux_tol).to_dict()}
    try:
        report["flux_direct"] = flux_direct(ctx.intg.integrate(g), ctx.cfg.path_closed_tol).coeffs.tolist()
    except NotClosed as exc:
        report["flux_direct"] = None
        report["flux_direct_error"] = str(exc)
    ctx.json("flux.json", report)
    return report


def cmd_massflow(ctx: Context, args) -> dict:
    g, prov = resolve_generator(ctx, args.generator)
    phi = ctx.intg.integrate(g)
    classes = class_vectors(ctx.cfg.n, args.bound) if args.bound else basis_classes(ctx.cfg.n)
    traces = np.stack([mass_flow_trace(phi, m) for m in classes], axis=1)
    labels = [" ".join(str(int(x)) for x in m) for m in classes]
    ctx.text("massflow.csv", rows_to_csv(["m", "value"], [(lab, float(traces[-1, i]))
                                                          for i, lab in enumerate(labels)]))
    ctx.text("massflow_trace.csv", rows_to_csv(["t"] + labels,
                                               [[float(t)] + [float(x) for x in row]
                                                for t, row in zip(phi.times, traces)]))
    return {"source": prov, "classes": len(classes),
            "max_abs": float(np.abs(traces[-1]).max())}


def cmd_duality(ctx: Context, args) -> dict:
    g, prov = resolve_generator(ctx, args.generator)
    classes = class_vectors(ctx.cfg.n, args.bound) if args.bound else None
    table = duality_table(g, ctx.intg.integrate(g), classes)
    ctx.text("duality.csv", table.to_csv())
    report = {"source": prov, "max_gap": table.max_gap, "classes": len(table.rows)}
    ctx.json("duality.json", report)
    ctx.figure(plotting.plot_duality, "duality.png", table)
    return report


def cmd_shift(ctx: Context, args) -> dict:
    s = args.s if args.s is not None else ctx.cfg.shift
    g, prov = resolve_generator(ctx, args.generator)
    phi = ctx.intg.integrate(g)
    shifted = time_shift(phi, s, ctx.intg)
    ctx.written.append(save_isotopy(ctx.path("shifted.json"), shifted))
    j = int(round(s / phi.dt))
    recovered = generator_of(shifted, ctx.intg)
    expected = Generator(ctx.grid, shifted.times, g.hams[j:], g.harms[j:])
    report = {"source": prov, "s": s, "samples": int(shifted.times.size),
              "generator_gap_linf": linf_family_norm(recovered - expected)}
    ctx.json("shift.json", report)
    return report


def cmd_lengths(ctx: Context, args) -> dict:
    g, prov = resolve_generator(ctx, args.generator)
    inv = group_inverse(g, ctx.intg)
    rep = length_report(g, ctx.intg).to_dict()
    ctx.json("lengths.json", {"source": prov, "lengths": rep})
    ctx.text("lengths.csv", rows_to_csv(["t", "integrand", "inverse_integrand"],
                                        zip(map(float, g.times), map(float, vf_norms(g)),
                                            map(float, vf_norms(inv)))))
    ctx.figure(plotting.plot_lengths, "lengths.png", g, inverse=inv)
    return rep


def lattice_candidates(target: Generator, ctx: Context, bound: int = 1) -> list:
    """Constant flows by v + m, m integer, v the mean time-one displacement of the target."""
    disp = ctx.intg.integrate(target).disp[-1]
    v = disp.reshape(ctx.grid.dim, -1).mean(axis=1)
    out = []
    for m in itertools.product(range(-bound, bound + 1), repeat=ctx.grid.dim):
        w = v + np.asarray(m, dtype=float)
        label = "translation " + " ".join(f"{x:.6g}" for x in w)
        out.append((label, Generator.autonomous(ctx.grid, target.steps, harm=flat_vector(w))))
    return out


def cmd_norm_upper(ctx: Context, args) -> dict:
    target, prov = resolve_generator(ctx, args.target)
    pairs = [(src, resolve_generator(ctx, src)[0]) for src in args.candidates]
    if args.lattice:
        pairs += lattice_candidates(target, ctx)
    if not pairs:
        pairs = [("target", target)]
    res = norm_upper(target, [g for _, g in pairs], ctx.intg, args.version, ctx.cfg.endpoint_tol,
                     labels=[lab for lab, _ in pairs])
    ctx.text("norm_upper.csv", res.to_csv())
    report = dict(res.to_dict(), target=prov, best_label=res.rows[res.best].label)
    ctx.json("norm_upper.json", report)
    ctx.figure(plotting.plot_norm_upper, "norm_upper.png", res)
    return report


def cmd_displace(ctx: Context, args) -> dict:
    g, prov = resolve_generator(ctx, args.generator)
    region = parse_region(args.region, ctx.grid)
    phi = ctx.intg.integrate(g)
    res = displacement_test(phi, region)
    report = dict(res.to_dict(), region=region.describe(), source=prov)
    ctx.json("displacement.json", report)
    ctx.figure(plotting.plot_displacement, "displacement.png", phi, region)
    return report


def cmd_energy(ctx: Context, args) -> dict:
    region = parse_region(args.region, ctx.grid)
    step = args.step if args.step is not None else ctx.cfg.energy_step
    search = RotationSearch.uniform(step, axis=args.axis)
    cert = displacement_energy_upper(region, search, ctx.grid, ctx.intg, args.version)
    report = dict(cert.to_dict(), family={"kind": "rotations", "step": step, "axis": args.axis,
                                          "count": len(search.amplitudes)})
    ctx.json("energy.json", report)
    return report


def cmd_weinstein(ctx: Context, args) -> dict:
    g, prov = resolve_generator(ctx, args.generator)
    res = weinstein_deform(g, ctx.intg, ctx.cfg.flux_tol, ctx.cfg.check_tol, ctx.cfg.s_steps)
    hom = homotopy_eval(res.family, res.base, ctx.intg)
    ctx.written.append(save_isotopy(ctx.path("hamiltonian_isotopy.json"), res.ham_isotopy))
    if args.dump_family:
        ctx.written.append(save_family(ctx.path("family.json"), res.family))
    report = {"source": prov, "report": res.report.to_dict(), "homotopy": hom.to_dict()}
    ctx.json("weinstein.json", report)
    ctx.figure(plotting.plot_family, "weinstein_family.png", res.family, title="theta_1^t")
    if not res.report.ok:
        raise CheckFailed(f"deformation defects exceed {ctx.cfg.check_tol:g}")
    return report


def cmd_ldefor2(ctx: Context, args) -> dict:
    v = np.asarray(ctx.cfg.rotation)
    times = np.linspace(0.0, 1.0, ctx.cfg.steps + 1)
    js = sorted(ctx.cfg.reparam)
    bundles = [ldefor2_family(np.broadcast_to(j / (1 + j) * v, (times.size, ctx.grid.dim)),
                              ctx.grid, ctx.cfg.s_steps, times) for j in js]
    rows = ldefor2_sequence_report(bundles)
    ctx.text("ldefor2.csv", rows_to_csv(
        ["i", "j", "z_gap", "y_gap", "zst_gap", "zst_bound", "zst_ok", "y_ok"],
        [(r.index, js[r.index], r.z_gap, r.y_gap, r.zst_gap, 3 * r.z_gap, int(r.zst_ok), int(r.y_ok))
         for r in rows]))
    ctx.text("ldefor2_per_s.csv", rows_to_csv(
        ["i"] + [f"s={s:.6g}" for s in bundles[0].s_times],
        [[r.index] + list(r.zst_gap_per_s) for r in rows]))
    report = {"reparam": js, "v": v.tolist(), "rows": len(rows),
              "all_ok": all(r.zst_ok and r.y_ok for r in rows)}
    if args.residual:
        report["hamiltonian_residual"] = ldefor2_hamiltonian_residual(bundles[-1], ctx.intg)
    ctx.json("ldefor2.json", report)
    ctx.figure(plotting.plot_ldefor2, "ldefor2.png", rows)
    if not report["all_ok"]:
        raise CheckFailed("transfer bounds violated")
    return report


def cmd_cauchy(ctx: Context, args) -> dict:
    if args.generators:
        items = [resolve_generator(ctx, s) for s in args.generators]
    else:
        items = [resolve_generator(ctx, f"rotation:{j}") for j in range(1, max(ctx.cfg.reparam) + 1)]
    rep = cauchy_report_gen([g for g, _ in items], ctx.intg)
    ctx.text("cauchy.csv", rep.to_csv())
    report = {"items": [p for _, p in items], "flags": rep.flags}
    ctx.json("cauchy.json", report)
    ctx.figure(plotting.plot_cauchy, "cauchy.png", rep)
    return report


def cmd_verify(ctx: Context, args) -> dict:
    checks = run_suite(args.suite, ctx.cfg)
    ctx.text(f"verify_{args.suite}.csv", checks_to_csv(checks))
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.suite}: {c.name}  "
              f"value={c.value:.6g} {c.relation} {c.threshold:.6g}", file=sys.stderr)
    ctx.figure(plotting.plot_checks, f"verify_{args.suite}.png", checks)
    failed = [c.name for c in checks if not c.passed]
    report = {"suite": args.suite, "checks": len(checks), "failed": failed}
    ctx.json(f"verify_{args.suite}.json", report)
    if failed:
        raise CheckFailed(f"{len(failed)} of {len(checks)} checks failed")
    return report


def cmd_example(ctx: Context, args) -> dict:
    cfg = ctx.cfg
    if args.name == "rotation":
        g, prov = resolve_generator(ctx, "rotation")
        ctx.written.append(save_generator(ctx.path("rotation.json"), g))
        return prov
    if args.name == "lengths":
        v = np.asarray(cfg.rotation)
        rows = []
        for j in cfg.reparam:
            g = build_rotation(RotationSpec(cfg.rotation, j), ctx.grid, cfg.steps)
            rep = length_report(g, ctx.intg)
            rows.append((j, j / (1 + j) * float(np.abs(v).sum()), rep.l_inf, rep.l_1inf, rep.l_sym_inf))
        ctx.text("example_lengths.csv",
                 rows_to_csv(["j", "closed_form", "l_inf", "l_1inf", "l_sym_inf"], rows))
        return {"rows": len(rows), "max_error": max(abs(r[1] - r[2]) for r in rows)}
    if args.name == "conjugated":
        spec = RotationSpec(cfg.rotation)
        trend = conjugated_trend(spec, ctx.grid, cfg.steps, cfg.conj_widths, cfg.conj_amplitude, ctx.intg)
        ctx.text("conjugator_trend.csv", rows_to_csv(["width_i", "width_i+1", "mu_gap"], trend.rows()))
        conj = mollified_conjugator(ctx.grid, cfg.steps, cfg.conj_amplitude, cfg.conj_widths[-1])
        gen, path = build_conjugated(spec, conj, ctx.intg)
        ctx.written.append(save_generator(ctx.path("conjugated.json"), gen))
        end = ctx.intg.integrate(gen).disp[-1]
        report = {"flux": flux(gen).coeffs.tolist(), "eta": spec.harmonic().coeffs.tolist(),
                  "lengths": length_report(gen, ctx.intg).to_dict(),
                  "endpoint_gap": float(np.abs(end - path.disp[-1]).max()),
                  "mu_gaps": list(trend.mu_gaps)}
        ctx.json("conjugated_report.json", report)
        return report
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sc = build_strip_scenario(cfg.nu, cfg.a1, ctx.grid, cfg.steps, integrator=ctx.intg,
                                  search=RotationSearch.uniform(cfg.energy_step))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    report = sc.to_dict()
    ctx.json("strip.json", report)
    ctx.figure(plotting.plot_displacement, "strip.png", sc.path, sc.region)
    return report


# --- parser ---------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", help="flat key = value configuration file")
    g.add_argument("--out", help="output directory")
    g.add_argument("--n", type=int, help="half-dimension of the torus")
    g.add_argument("--grid", type=int, help="grid points per axis")
    g.add_argument("--steps", type=int, help="time steps M")
    g.add_argument("--seed", type=int)
    g.add_argument("--samples", type=int, help="random samples per check suite")
    g.add_argument("--tol-closed", type=float, help="closedness tolerance of Hodge splits")
    g.add_argument("--tol-endpoint", type=float, help="endpoint tolerance of norm bounds")
    g.add_argument("--tol-flux", type=float, help="flux tolerance")
    g.add_argument("--tol-check", type=float, help="threshold of numerical checks")
    g.add_argument("--plot", action="store_true", help="also render PNG figures")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="symplab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    gen_help = f"generator manifest or builtin ({', '.join(BUILTINS)}; optional :ARG)"

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    add("integrate", cmd_integrate, "integrate a generator").add_argument("generator", help=gen_help)
    add("generator-of", cmd_generator_of, "recover the generator of a path").add_argument("isotopy")
    p = add("product", cmd_product, "group product of two generators")
    p.add_argument("first", help=gen_help)
    p.add_argument("second", help=gen_help)
    add("inverse", cmd_inverse, "group inverse").add_argument("generator", help=gen_help)
    add("flux", cmd_flux, "flux and Hamiltonian classification").add_argument("generator", help=gen_help)
    for name, fn, help_ in (("massflow", cmd_massflow, "direct mass flow values"),
                            ("duality", cmd_duality, "mass flow formula against direct values")):
        p = add(name, fn, help_)
        p.add_argument("generator", help=gen_help)
        p.add_argument("--bound", type=int, default=0, help="use all classes with entries in [-B, B]")
    p = add("shift", cmd_shift, "time-shifted path and its generator")
    p.add_argument("generator", help=gen_help)
    p.add_argument("--s", type=float)
    add("lengths", cmd_lengths, "length report").add_argument("generator", help=gen_help)
    p = add("norm-upper", cmd_norm_upper, "upper bound on the symmetric norm")
    p.add_argument("target", help=gen_help)
    p.add_argument("candidates", nargs="*", help=gen_help)
    p.add_argument("--lattice", action="store_true", help="add integer-shifted translations")
    p.add_argument("--length-version", dest="version", choices=("linf", "l1inf"), default="linf")
    p = add("displace", cmd_displace, "displacement test of a region")
    p.add_argument("generator", help=gen_help)
    p.add_argument("--region", required=True, help="strip:NU, ball:C..:R or whole")
    p = add("energy", cmd_energy, "displacement energy upper bound over rotations")
    p.add_argument("--region", required=True)
    p.add_argument("--step", type=float, help="rotation amplitude step")
    p.add_argument("--axis", type=int, default=0)
    p.add_argument("--length-version", dest="version", choices=("linf", "l1inf"), default="linf")
    p = add("weinstein", cmd_weinstein, "deform a flux-zero path to a Hamiltonian one")
    p.add_argument("generator", help=gen_help)
    p.add_argument("--dump-family", action="store_true")
    p = add("ldefor2", cmd_ldefor2, "sequential deformation of reparametrized rotations")
    p.add_argument("--residual", action="store_true", help="also compute the Hamiltonian residual")
    add("cauchy", cmd_cauchy, "consecutive gaps of a generator sequence").add_argument(
        "generators", nargs="*", help=gen_help)
    add("verify", cmd_verify, "run a check suite").add_argument("suite", choices=SUITES)
    add("example", cmd_example, "worked examples").add_argument(
        "name", choices=("rotation", "lengths", "conjugated", "strip"))
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.replace(n=args.n, grid_size=args.grid, steps=args.steps, seed=args.seed,
                       samples=args.samples, out=args.out, closed_tol=args.tol_closed,
                       endpoint_tol=args.tol_endpoint, flux_tol=args.tol_flux,
                       check_tol=args.tol_check)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        ctx = Context(cfg, args.plot or cfg.plot)
        ctx.out.mkdir(parents=True, exist_ok=True)
        ctx.json("run.json", {"command": args.command,
                              "config": {k: v for k, v in cfg.to_dict().items() if k != "out"}})
        summary = args.func(ctx, args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except CHECK_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except INPUT_ERRORS as exc:
        print(f"input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(dumps_json(summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
