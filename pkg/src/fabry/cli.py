"""Command-line interface.

Subcommands: generate, analyze, probe, cover, density.  Numeric settings
live in one Config block that can be loaded from a JSON file and overridden
by flags; every report embeds a manifest sufficient to reproduce it
byte-identically (no timestamps, exact arithmetic defaults, recorded
seeds and input digests).

Exit codes: 0 success, 2 input error, 3 a report was written but contains
an inconclusive verdict, 4 no window passed the anchor test.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction

from . import __version__, density as dens, fileio, probe as prb
from .analysis import IntervalSet, multiplicity_audit, select_cover
from .envelope import PwlFunction
from .seqcore import (
    GeneratorSpec,
    SequenceError,
    WindowPolicy,
    extract_windows,
    generate,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INCONCLUSIVE = 3
EXIT_EMPTY_FAMILY = 4


@dataclass(frozen=True)
class Config:
    m_min: int = 16
    beta_policy: str = "arg"
    surrogate_tol: float = 0.05
    r_grid_low: int = 1
    r_grid_high: int = 10
    delta_grid: str = "1/10:9/10:9"
    a_tol: str = "1/64"
    helly_points: int = 17
    cluster_tol: float = 0.1
    chain_tol: float = 0.05
    min_points: int = 64
    pade_dps: int = 50
    froissart_tol: float = 1e-6
    angular_tol: float = 0.15
    radius_lo: float = 0.8
    radius_hi: float = 1.2
    rotations: int = 64

    def r_grid(self):
        return [Fraction(1, 2**j) for j in range(self.r_grid_low, self.r_grid_high + 1)]

    def delta_values(self):
        lo, hi, n = self.delta_grid.split(":")
        lo, hi, n = Fraction(lo), Fraction(hi), int(n)
        if n == 1:
            return [lo]
        step = (hi - lo) / (n - 1)
        return [lo + k * step for k in range(n)]

    def helly_grid(self):
        n = self.helly_points
        return [Fraction(j, n - 1) for j in range(n)]


def _load_config(args) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        doc = fileio.load_json(args.config)
        known = {f.name for f in fields(Config)}
        bad = set(doc) - known
        if bad:
            raise fileio.InputError(f"unknown config keys: {sorted(bad)}")
        cfg = replace(cfg, **doc)
    overrides = {}
    for f in fields(Config):
        v = getattr(args, f"cfg_{f.name}", None)
        if v is not None:
            overrides[f.name] = v
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _policy(cfg: Config, source: str) -> WindowPolicy:
    return WindowPolicy(
        m_min=cfg.m_min,
        beta=cfg.beta_policy,
        surrogate_tol=cfg.surrogate_tol,
        source=source,
    )


def _manifest(args, command, inputs, cfg: Config, seeds=None):
    return fileio.build_manifest(
        command=command,
        argv=[command] + list(args.raw_args),
        inputs=inputs,
        config=asdict(cfg),
        seeds=seeds,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    spec_doc = fileio.load_json(args.spec)
    try:
        spec = GeneratorSpec(
            family=spec_doc["family"],
            params=spec_doc.get("params", {}),
            seed=int(spec_doc.get("seed", 0)),
            n_max=int(spec_doc["N"]),
        )
        seq = generate(spec)
    except (KeyError, SequenceError) as exc:
        print(f"error: bad generator spec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    fileio.write_coefficients(seq, args.out)
    truth_path = args.truth_out or (str(args.out) + ".truth.json")
    fileio.dump_report(fileio.truth_to_doc(seq.truth), truth_path)
    print(f"wrote {seq.n_max + 1} coefficients to {args.out}")
    print(f"wrote ground truth to {truth_path}")
    return EXIT_OK


def _analyze_to_doc(args, cfg: Config):
    seq = fileio.read_coefficients(args.coeffs)
    truth = None
    inputs = [args.coeffs]
    truth_path = args.truth
    if truth_path is None:
        import os

        cand = str(args.coeffs) + ".truth.json"
        if os.path.exists(cand):
            truth_path = cand
    if truth_path:
        truth = fileio.truth_from_doc(fileio.load_json(truth_path))
        inputs.append(truth_path)
    fam = extract_windows(seq, _policy(cfg, args.mode))
    if not fam.windows:
        return None, fam.diagnostics, inputs
    report = dens.density_report(
        fam,
        truth=truth,
        r_grid=cfg.r_grid(),
        delta_grid=cfg.delta_values(),
        a_tol=Fraction(cfg.a_tol),
        helly_grid=cfg.helly_grid(),
        cluster_tol=cfg.cluster_tol,
        chain_tol=cfg.chain_tol,
        min_points=cfg.min_points,
    )
    doc = {
        "schema_version": fileio.SCHEMA_VERSION,
        "kind": "density_report",
        **report.to_doc(),
        "manifest": _manifest(args, "analyze", inputs, cfg),
    }
    return doc, report, inputs


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    try:
        doc, report, _ = _analyze_to_doc(args, cfg)
    except (fileio.InputError, SequenceError, dens.DensityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if doc is None:
        print("error: no window passed the anchor surrogate", file=sys.stderr)
        print(f"diagnostics: {report}", file=sys.stderr)
        return EXIT_EMPTY_FAMILY
    fileio.validate_report(doc)
    fileio.dump_report(doc, args.out)
    inconclusive = any(
        e.inconclusive for e in report.envelope.values()
    )
    print(f"wrote density report to {args.out}")
    print(
        "predicted arc half-angle: "
        f"{doc['predicted']['half_angle']:.4f} rad (delta {doc['predicted']['delta']:.4f})"
    )
    print(f"chain_ok: {doc['chain_ok']}")
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_OK


def cmd_probe(args) -> int:
    cfg = _load_config(args)
    try:
        seq = fileio.read_coefficients(args.coeffs)
    except fileio.InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    inputs = [args.coeffs]
    methods = []
    details = {}
    detections = []
    try:
        if args.pade:
            l_deg, m_deg = args.pade
            res = prb.pade_poles(
                seq, l_deg, m_deg, dps=cfg.pade_dps, froissart_tol=cfg.froissart_tol
            )
            methods.append("pade")
            details["pade"] = res.to_doc()
            detections.extend(prb.detections_from_pade(res))
        if args.rays:
            radii = [float(r) for r in args.radii.split(",")]
            methods.append("ray_growth")
            details["rays"] = []
            for th in args.rays.split(","):
                theta = _parse_angle(th)
                prof = prb.ray_growth(seq, theta, radii)
                details["rays"].append(prof.to_doc())
    except prb.ProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    predicted = None
    consistent = None
    narrative = "no density report supplied; consistency not evaluated"
    mode = "sign"
    if args.report:
        rep_doc = fileio.load_json(args.report)
        inputs.append(args.report)
        predicted = rep_doc["predicted"]["half_angle"]
        mode = rep_doc.get("mode", "sign")
        consistent, narrative = prb.arc_consistency(
            rep_doc["predicted"]["delta"],
            detections,
            mode=mode,
            angular_tol=cfg.angular_tol,
            radius_band=(cfg.radius_lo, cfg.radius_hi),
            rotations=cfg.rotations,
        )
    report = prb.ProbeReport(
        methods=tuple(methods),
        detections=tuple(detections),
        predicted_half_angle=predicted,
        consistent=consistent,
        narrative=narrative,
        details=details,
    )
    doc = {
        "schema_version": fileio.SCHEMA_VERSION,
        "kind": "probe_report",
        **report.to_doc(),
        "manifest": _manifest(args, "probe", inputs, cfg),
    }
    fileio.validate_report(doc)
    fileio.dump_report(doc, args.out)
    print(f"wrote probe report to {args.out}")
    print(f"detections: {len(detections)}; consistent: {consistent}")
    if consistent is not None:
        print(narrative)
    return EXIT_OK


def cmd_cover(args) -> int:
    cfg = _load_config(args)
    try:
        doc = fileio.load_json(args.intervals)
        ivs = IntervalSet(tuple(fileio.intervals_from_doc(doc)))
    except (fileio.InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sel = select_cover(ivs)
    import random

    rng = random.Random(0)
    comps = sel.merged_components()
    pts = []
    for _ in range(10_000):
        a, b = comps[rng.randrange(len(comps))]
        t = Fraction(rng.randrange(1, 4096), 4096)
        pts.append(a + (b - a) * t)
    mult = multiplicity_audit(sel, pts)
    out_doc = {
        "schema_version": fileio.SCHEMA_VERSION,
        "kind": "cover_report",
        "selected": [[fileio.format_number(a), fileio.format_number(b)] for a, b in sel.intervals],
        "input_count": len(ivs),
        "selected_count": len(sel),
        "max_multiplicity": mult,
        "union_preserved": sel.merged_components() == ivs.merged_components(),
        "manifest": _manifest(args, "cover", [args.intervals], cfg),
    }
    fileio.validate_report(out_doc)
    fileio.dump_report(out_doc, args.out)
    print(
        f"kept {len(sel)} of {len(ivs)} intervals; "
        f"max multiplicity {mult}; union preserved: {out_doc['union_preserved']}"
    )
    return EXIT_OK


def cmd_density(args) -> int:
    """Stand-alone density estimates for explicit inputs."""
    cfg = _load_config(args)
    try:
        if args.indexset:
            doc = fileio.load_json(args.indexset)
            from .seqcore import IndexSet

            lam = IndexSet.from_iterable(doc["members"])
            est = dens.max_density(lam, cfg.r_grid())
            print(f"max_density: {est.value:.6f} (stable: {est.stable})")
            result = {"max_density": est.to_doc()}
        elif args.pwl:
            f = fileio.pwl_from_doc(fileio.load_json(args.pwl))
            est = dens.envelope_density(
                f, cfg.delta_values(), Fraction(cfg.a_tol)
            )
            print(f"envelope_density: {est.value:.6f} bracket {est.bracket}")
            result = {"envelope_density": est.to_doc()}
        else:
            spec = fileio.profile_from_doc(fileio.load_json(args.selfsimilar))
            est = dens.envelope_density(
                spec, cfg.delta_values(), Fraction(cfg.a_tol)
            )
            print(f"envelope_density: {est.value:.6f} bracket {est.bracket}")
            result = {"envelope_density": est.to_doc()}
    except (fileio.InputError, dens.DensityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        src = args.indexset or args.pwl or args.selfsimilar
        result["manifest"] = _manifest(args, "density", [src], cfg)
        fileio.dump_report(result, args.out)
    if result and "envelope_density" in result and result["envelope_density"]["inconclusive"]:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _parse_angle(text: str) -> float:
    text = text.strip()
    if text.endswith("pi"):
        coef = text[:-2].rstrip("*")
        return math.pi * (float(Fraction(coef)) if coef else 1.0)
    return float(text)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_config_flags(p):
    p.add_argument("--config", help="JSON file of Config overrides")
    p.add_argument("--m-min", dest="cfg_m_min", type=int)
    p.add_argument("--beta", dest="cfg_beta_policy", choices=["arg", "zero", "half_pi", "best"])
    p.add_argument("--a-tol", dest="cfg_a_tol")
    p.add_argument("--delta-grid", dest="cfg_delta_grid")
    p.add_argument("--cluster-tol", dest="cfg_cluster_tol", type=float)
    p.add_argument("--min-points", dest="cfg_min_points", type=int)
    p.add_argument("--angular-tol", dest="cfg_angular_tol", type=float)
    p.add_argument("--pade-dps", dest="cfg_pade_dps", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fabry",
        description="gap/sign-change densities and singularity probes for power series",
    )
    ap.add_argument("--version", action="version", version=f"fabry {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a coefficient family to a file")
    g.add_argument("--spec", required=True, help="generator spec JSON")
    g.add_argument("--out", required=True)
    g.add_argument("--truth-out", default=None)
    _add_config_flags(g)
    g.set_defaults(fn=cmd_generate)

    a = sub.add_parser("analyze", help="density report for a coefficient file")
    a.add_argument("coeffs")
    a.add_argument("--out", required=True)
    a.add_argument("--mode", choices=["sign", "support"], default="sign")
    a.add_argument("--truth", default=None, help="ground truth sidecar JSON")
    _add_config_flags(a)
    a.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("probe", help="locate singularities numerically")
    p.add_argument("coeffs")
    p.add_argument("--out", required=True)
    p.add_argument("--pade", nargs=2, type=int, metavar=("L", "M"))
    p.add_argument("--rays", help="comma-separated angles; accepts e.g. 0,1/3pi")
    p.add_argument("--radii", default="0.9,0.99,0.999")
    p.add_argument("--report", help="density report to check arc consistency against")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_probe)

    c = sub.add_parser("cover", help="bounded-multiplicity interval cover")
    c.add_argument("intervals")
    c.add_argument("--out", required=True)
    _add_config_flags(c)
    c.set_defaults(fn=cmd_cover)

    d = sub.add_parser("density", help="estimates for explicit index sets or profiles")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--indexset")
    src.add_argument("--pwl")
    src.add_argument("--selfsimilar")
    d.add_argument("--out", default=None)
    _add_config_flags(d)
    d.set_defaults(fn=cmd_density)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    args.raw_args = argv[1:]
    try:
        return args.fn(args)
    except fileio.InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
