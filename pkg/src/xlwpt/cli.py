"""Command-line interface.

Exit status: 0 on success, 2 on invalid input (usage, scenario or data
files), 1 on failures during computation.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

import numpy as np

from . import analysis, beamform, csvio, optimize
from .arrays import local_angles
from .scenario import Scenario, load_scenario

BEAMFORMERS = ("mrt", "pw", "sw-los", "sw-smc")


class InputError(Exception):
    pass


def parse_range(text: str) -> np.ndarray:
    """``start:step:stop`` (inclusive), or a comma-separated list."""
    try:
        if ":" in text:
            a, s, b = (float(x) for x in text.split(":"))
            if s <= 0 or b < a:
                raise ValueError
            n = int(np.floor((b - a) / s + 1e-9)) + 1
            return a + s * np.arange(n)
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise InputError(f"invalid range {text!r}; expected start:step:stop or a,b,c")


class Context:
    """Inputs shared by all subcommands."""

    def __init__(self, args):
        self.args = args
        try:
            self.scenario: Scenario = load_scenario(args.scenario)
        except (OSError, ValueError) as exc:
            raise InputError(str(exc)) from exc
        try:
            self.device_pos = self.scenario.device(args.device)
        except IndexError as exc:
            raise InputError(str(exc)) from exc
        self._h = None

    @property
    def wavelength(self):
        return self.scenario.wavelength

    def true_channel(self) -> np.ndarray:
        """Imported channel when ``--channel`` is given, else the synthesized one."""
        if self._h is None:
            if self.args.channel:
                try:
                    self._h, _ = csvio.read_channel(self.args.channel, self.scenario.num_elements)
                except (OSError, ValueError) as exc:
                    raise InputError(str(exc)) from exc
            else:
                self._h = self.scenario.channel(self.device_pos, seed=self.args.seed)
        return self._h


def _out(args):
    return args.out if args.out else sys.stdout


def _db(x):
    return float(beamform.to_db(x))


def _beamformer_weights(ctx: Context, bf: str, optimize_mode: str = "none", **search):
    """Weights of the selected beamformer for the configured device; also returns extras."""
    sc, p = ctx.scenario, ctx.device_pos
    extras = {}
    if bf == "mrt":
        return beamform.mrt_weights(ctx.true_channel()), extras
    if bf == "pw":
        th, ph = local_angles(sc.layout, "center", p)
        extras.update(theta_deg=np.rad2deg(th), phi_deg=np.rad2deg(ph))
        return beamform.pw_weights(sc.layout, th, ph, sc.wavelength), extras
    if bf == "sw-los":
        return beamform.sw_los_weights(sc.layout, p, sc.wavelength), extras
    opt_phase = optimize_mode in ("phases", "both")
    opt_gamma = optimize_mode in ("gammas", "both")
    chans = sc.component_channels(p, unit_reflection=opt_gamma)
    beam = optimize.fit_smc_beam(chans, ctx.true_channel(), opt_phase, opt_gamma, **search)
    extras["phases_deg"] = np.rad2deg(beam.phases)
    if beam.gammas is not None:
        extras["gammas"] = beam.gammas
    return beam.weights, extras


def _search_kwargs(args):
    return dict(method=args.method, step=np.deg2rad(args.grid_step),
                budget=args.budget, seed=args.seed)


def cmd_synth(ctx: Context):
    h = ctx.scenario.channel(ctx.device_pos, seed=ctx.args.seed)
    if ctx.args.out:
        csvio.write_channel(ctx.args.out, h, ctx.wavelength)
    else:
        csvio.write_complex_vector(sys.stdout, h)


def cmd_beamform(ctx: Context):
    a = ctx.args
    w, extras = _beamformer_weights(ctx, a.bf, a.optimize, **_search_kwargs(a))
    csvio.write_complex_vector(_out(a), w)
    h = ctx.true_channel()
    pg = beamform.path_gain(h, w)
    header = ["bf", "pg", "pg_db", "pg_full_csi_db"]
    row = [a.bf, pg, _db(pg), _db(np.vdot(h, h).real)]
    for k, v in enumerate(extras.get("phases_deg", ()), start=1):
        header.append(f"phase_{k}_deg")
        row.append(v)
    for k, v in enumerate(extras.get("gammas", ()), start=1):
        header.append(f"gamma_{k}")
        row.append(v)
    for key in ("theta_deg", "phi_deg"):
        if key in extras:
            header.append(key)
            row.append(extras[key])
    summary = a.summary if a.summary else (sys.stderr if a.out is None else sys.stdout)
    csvio.write_rows(summary, header, [row])


def cmd_budget(ctx: Context):
    sc = ctx.scenario
    comps = sc.components(ctx.device_pos)
    chans = sc.component_channels(ctx.device_pos)
    pgs = optimize.per_smc_budget(ctx.true_channel(), chans)
    rows = []
    for c, pg in zip(comps, pgs):
        rows.append([c.index, c.generating_wall.name if c.generating_wall else "los",
                     int(c.visibility.sum()), c.refl_coeff, pg, _db(pg)])
    csvio.write_rows(_out(ctx.args), ["k", "wall", "visible", "gamma", "pg", "pg_db"], rows)


def cmd_sweep(ctx: Context):
    a, sc = ctx.args, ctx.scenario
    h = ctx.true_channel()
    if a.bf == "pw":
        th0, ph0 = np.rad2deg(local_angles(sc.layout, "center", ctx.device_pos))
        thetas = parse_range(a.theta_deg) if a.theta_deg else np.round(th0) + np.arange(-10, 11)
        phis = parse_range(a.phi_deg) if a.phi_deg else np.round(ph0) + np.arange(-10, 11)
        res = analysis.pw_sweep(h, sc.layout, sc.wavelength, np.deg2rad(thetas), np.deg2rad(phis))
        rows = [[np.rad2deg(t), np.rad2deg(p), _db(g)] for (t, p), g in zip(res.grid, res.pg)]
        csvio.write_rows(_out(a), ["theta_deg", "phi_deg", "pg_db"], rows)
    elif a.bf == "sw-los":
        step = a.step if a.step else sc.wavelength / 2
        pts = analysis.box_grid(ctx.device_pos, a.half_width, step)
        res = analysis.sw_sweep(h, sc.layout, sc.wavelength, pts)
        rows = [[x, y, z, _db(g)] for (x, y, z), g in zip(res.grid, res.pg)]
        csvio.write_rows(_out(a), ["x", "y", "z", "pg_db"], rows)
    else:
        raise InputError("sweep supports --bf pw or --bf sw-los")
    print("argmax " + ",".join(csvio.fmt(v) for v in res.best) + f" pg_db={_db(res.pg_max):.4f}",
          file=sys.stderr)


def cmd_heatmap(ctx: Context):
    a, sc = ctx.args, ctx.scenario
    w, _ = _beamformer_weights(ctx, a.bf, a.optimize, **_search_kwargs(a))
    pts = analysis.planar_grid(ctx.device_pos, a.nx, a.ny, a.spacing_wavelengths * sc.wavelength)
    pg = analysis.heatmap(w, pts, lambda q: sc.channel(q, dm_variance=0))
    rows = [[x, y, z, _db(g)] for (x, y, z), g in zip(pts, pg)]
    csvio.write_rows(_out(a), ["x", "y", "z", "pg_db"], rows)


def cmd_mc(ctx: Context):
    a = ctx.args
    h = ctx.true_channel()
    snr_db = parse_range(a.snr_db)
    pts = analysis.reciprocity_sweep(h, snr_db, a.realizations, a.seed, a.workers)
    L = h.size
    rows = [[s, _db(p.pg_analytic), _db(p.pg_mc_mean), p.pg_mc_std, *p.coverage, p.regime,
             s + 10 * np.log10(L)] for s, p in zip(snr_db, pts)]
    csvio.write_rows(_out(a), ["snr_db", "pg_analytic_db", "pg_mc_db", "sigma", "cov1", "cov2",
                               "cov3", "regime", "l_snr_db"], rows)


def cmd_optimize_phases(ctx: Context):
    a = ctx.args
    chans = ctx.scenario.component_channels(ctx.device_pos)
    obj = optimize.phase_objective(ctx.true_channel(), chans)
    res = optimize.optimize_phases(obj, len(chans), keep_candidates=bool(a.candidates),
                                   **_search_kwargs(a))
    K = len(chans)
    header = ["pg", "pg_db"] + [f"phase_{k}_deg" for k in range(1, K + 1)]
    csvio.write_rows(_out(a), header, [[res.pg, _db(res.pg), *np.rad2deg(res.params)]])
    if a.candidates:
        csvio.write_rows(a.candidates, header,
                         ([v, _db(v), *np.rad2deg(c)] for c, v in zip(res.candidates, res.values)))


def cmd_optimize_gammas(ctx: Context):
    a = ctx.args
    chans = ctx.scenario.component_channels(ctx.device_pos, unit_reflection=True)
    K = len(chans)
    h = ctx.true_channel()
    if a.phases_deg:
        phases = np.deg2rad(parse_range(a.phases_deg))
        if phases.shape != (K,):
            raise InputError(f"--phases-deg needs {K} values")
    else:
        phases = optimize.optimize_phases(optimize.phase_objective(h, chans), K,
                                          **_search_kwargs(a)).params
    grid = np.linspace(0.0, 1.0, a.gamma_points)
    res = optimize.optimize_reflcoeffs(h, chans, phases, grid, mode=a.mode)
    header = (["pg", "pg_db"] + [f"gamma_{k}_db" for k in range(1, K + 1)]
              + [f"phase_{k}_deg" for k in range(1, K + 1)])
    gam_db = [20 * np.log10(g) if g > 0 else -np.inf for g in res.params]
    csvio.write_rows(_out(a), header, [[res.pg, _db(res.pg), *gam_db, *np.rad2deg(phases)]])


COMMANDS = {
    "synth": cmd_synth,
    "beamform": cmd_beamform,
    "budget": cmd_budget,
    "sweep": cmd_sweep,
    "heatmap": cmd_heatmap,
    "mc-reciprocity": cmd_mc,
    "optimize-phases": cmd_optimize_phases,
    "optimize-gammas": cmd_optimize_gammas,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="scenario JSON file or bundled scenario name (e.g. hallway)")
    common.add_argument("--channel", help="measured/exported channel CSV used instead of synthesis")
    common.add_argument("--out", help="output CSV (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--device", type=int, default=1, help="1-based device index")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--method", choices=("grid", "random"), default="grid")
    search.add_argument("--grid-step", type=float, default=5.0, help="phase grid step in degrees")
    search.add_argument("--budget", type=int, default=10_000, help="random-search draws")

    bf = argparse.ArgumentParser(add_help=False)
    bf.add_argument("--bf", choices=BEAMFORMERS, default="sw-los")
    bf.add_argument("--optimize", choices=("none", "phases", "gammas", "both"), default="none",
                    help="searches applied to the sw-smc beamformer")

    parser = argparse.ArgumentParser(prog="xlwpt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="synthesize the channel vector")
    p = sub.add_parser("beamform", parents=[common, bf, search], help="compute weights")
    p.add_argument("--summary", help="summary CSV (default: stdout, or stderr without --out)")
    sub.add_parser("budget", parents=[common], help="per-component power budgets")
    p = sub.add_parser("sweep", parents=[common, bf], help="beam sweep")
    p.add_argument("--theta-deg", help="elevation grid start:step:stop")
    p.add_argument("--phi-deg", help="azimuth grid start:step:stop")
    p.add_argument("--half-width", type=float, default=0.5, help="SW box half width (m)")
    p.add_argument("--step", type=float, help="SW box step (m), default lambda/2")
    p = sub.add_parser("heatmap", parents=[common, bf, search], help="path-gain field")
    p.add_argument("--nx", type=int, default=8)
    p.add_argument("--ny", type=int, default=8)
    p.add_argument("--spacing-wavelengths", type=float, default=0.375)
    p = sub.add_parser("mc-reciprocity", parents=[common],
                       help="reciprocity beamformer: Monte Carlo vs analytic")
    p.add_argument("--snr-db", default="-40:5:40")
    p.add_argument("--realizations", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("optimize-phases", parents=[common, search], help="SMC beam phase search")
    p.add_argument("--candidates", help="also write every evaluated candidate to this CSV")
    p = sub.add_parser("optimize-gammas", parents=[common, search],
                       help="reflection-coefficient search")
    p.add_argument("--phases-deg", help="fixed beam phases (comma list); searched when omitted")
    p.add_argument("--gamma-points", type=int, default=41)
    p.add_argument("--mode", choices=("coordinate", "joint"), default="coordinate")
    return parser


# values such as "-40:5:40" would otherwise be taken for option flags
_RANGE_FLAGS = ("--snr-db", "--theta-deg", "--phi-deg", "--phases-deg")


def _join_range_flags(argv: List[str]) -> List[str]:
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _RANGE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_join_range_flags(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        ctx = Context(args)
        COMMANDS[args.command](ctx)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
