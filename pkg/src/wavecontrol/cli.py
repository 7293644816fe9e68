"""
Command-line front end.

Verbs::

    wavecontrol run <config> [-o DIR]
    wavecontrol check-gradient <config> [-o DIR]
    wavecontrol dispersion <config> [-o DIR]
    wavecontrol validate-mesh <meshfile>

``<config>`` may also be ``preset:<name>`` for a bundled preset. Exit status:
0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import cmath
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (PRESETS, RunConfig, dispersion_settings, preset_path, read_config)
from .errors import (BuoyancyImbalance, ConfigError, InvalidGeometry, WaveControlError)
from .fem import assemble, assemble_membrane_tensors, assemble_plate_tensor
from .geometry import build_slice_mesh, read_mesh, validate_mesh, write_mesh
from .ocp import (PassiveProblem, PressureProblem, fd_gradient_check, motion_term,
                  solve_lq_pressure, solve_passive)
from .physics import solve_dispersion
from .solver import EPS_CONTROL, build_system, scattered_ratio, solve_state_pressure

log = logging.getLogger("wavecontrol")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
DOF_NAMES = ("surge", "heave", "roll")


def fmt(x: float) -> str:
    """Fixed 12-significant-digit rendering used in every output file."""
    return f"{x:.11e}"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def _resolve(spec: str) -> Path:
    if spec.startswith("preset:"):
        return preset_path(spec.split(":", 1)[1])
    return Path(spec)


# ----------------------------------------------------------------------------
# scenarios
# ----------------------------------------------------------------------------

def _tensors(mode, ops):
    return assemble_membrane_tensors(ops) if mode == "membrane" else assemble_plate_tensor(ops)


def _neutral(l):
    return np.full(l, EPS_CONTROL), np.full(l, 1 - EPS_CONTROL)


def execute(cfg: RunConfig, out: Path | None = None) -> dict:
    """Run the configured scenario and write all result files.

    Returns a dict of headline numbers (also rendered in ``summary.txt``).
    """
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    env, geo = cfg.env, cfg.geometry
    notes = []
    if geo.half_width - geo.body_radius < 1.5 * env.wavelength:
        msg = (f"truncation lines closer than 1.5 wavelengths to the body "
               f"(L - r = {geo.half_width - geo.body_radius:.3g} m, "
               f"lambda = {env.wavelength:.3g} m); absorbing condition may reflect")
        log.warning(msg)
        notes.append("warning: " + msg)

    mesh = build_slice_mesh(geo)
    write_mesh(mesh, out / "mesh.txt")
    ops = assemble(mesh, env)
    body = cfg.body
    l = ops.control.size
    info = {"mode": cfg.mode, "n_potential_dofs": ops.n, "n_control_dofs": l}

    # uncontrolled reference: free surface everywhere (pressure mode, u = 0),
    # or neutral membrane when there is no body to scatter
    tensors = None
    if body is None:
        tensors = assemble_membrane_tensors(ops)
        u_n, v_n = _neutral(l)
        system = build_system(ops, None, "membrane", tensors, u_n, v_n)
        y, res = system.solve(system.rhs())
        ref = system.state(y, res)
        info["scattered_ratio"] = scattered_ratio(ops, ref.phi)
    else:
        ref = solve_state_pressure(ops, body)
    m_ref = motion_term(ref.X, cfg.cost.C)
    info["motion_uncontrolled"] = m_ref

    result = None
    if cfg.mode == "pressure":
        result = solve_lq_pressure(ops, body, cfg.cost)
        info["kkt_residual"] = result.kkt_residual
    elif cfg.mode in ("membrane", "plate"):
        if body is None:
            raise ConfigError(f"{cfg.mode} optimization needs a body (geometry.with_body)",
                              "geometry.with_body")
        tensors = _tensors(cfg.mode, ops)
        result = solve_passive(cfg.mode, ops, tensors, body, cfg.cost,
                               np.full(l, cfg.u0), np.full(l, cfg.v0), cfg.optimizer,
                               cfg.length)

    state = result.state if result is not None else ref
    x = ops.control.x
    if result is not None:
        info.update(J=result.J, motion_controlled=result.motion,
                    motion_ratio=result.motion / m_ref if m_ref > 0 else float("nan"),
                    termination=result.termination, iterations=result.iterations)
        _write_csv(out / "history.csv", ("iter", "J", "motion_term", "pg_norm"),
                   ([str(i), J, m, p] for i, (J, m, p) in
                    enumerate(zip(result.J_history, result.motion_history, result.pg_history))))
        if cfg.mode == "pressure":
            _write_csv(out / "control_u.csv", ("x", "value_re", "value_im"),
                       zip(x, result.u.real, result.u.imag))
        else:
            _write_csv(out / "control_u.csv", ("x", "value"), zip(x, result.u))
            _write_csv(out / "control_v.csv", ("x", "value"), zip(x, result.v))
    else:
        _write_csv(out / "history.csv", ("iter", "J", "motion_term", "pg_norm"),
                   [("0", m_ref, m_ref, 0.0)])

    xz = ops.space.coords
    _write_csv(out / "field.csv", ("x", "z", "re_phi_s", "im_phi_s"),
               zip(xz[:, 0], xz[:, 1], state.phi.real, state.phi.imag))
    if state.eta is not None and tensors is not None:
        eta = tensors.values(state.eta)
        _write_csv(out / "eta.csv", ("x", "re_eta", "im_eta"),
                   zip(tensors.node_x, eta.real, eta.imag))

    _write_summary(out / "summary.txt", cfg, info, ref.X, state.X if result else None, notes)
    return info


def _write_summary(path, cfg, info, X0, X1, notes):
    env = cfg.env
    lines = [
        f"mode: {cfg.mode}",
        f"wave: period {fmt(2 * math.pi / env.omega)} s, depth {fmt(env.depth)} m, "
        f"amplitude {fmt(env.amplitude)} m",
        f"wavenumber: {fmt(env.k)} 1/m, wavelength {fmt(env.wavelength)} m",
        f"potential dofs: {info['n_potential_dofs']}, control dofs: {info['n_control_dofs']}",
    ]
    if cfg.body is not None:
        lines.append("")
        lines.append("dof      |X| uncontrolled   phase[rad]         |X| controlled     phase[rad]")
        for i, name in enumerate(DOF_NAMES):
            row = f"{name:<8} {fmt(abs(X0[i]))}  {fmt(cmath.phase(X0[i]))}"
            if X1 is not None:
                row += f"  {fmt(abs(X1[i]))}  {fmt(cmath.phase(X1[i]))}"
            lines.append(row)
    lines.append("")
    lines.append(f"motion_term uncontrolled: {fmt(info['motion_uncontrolled'])}")
    for key in ("motion_controlled", "motion_ratio", "J", "kkt_residual", "scattered_ratio"):
        if key in info:
            lines.append(f"{key.replace('_', ' ')}: {fmt(info[key])}")
    for key in ("termination", "iterations"):
        if key in info:
            lines.append(f"{key}: {info[key]}")
    lines += notes
    path.write_text("\n".join(lines) + "\n")


def check_gradient(cfg: RunConfig, out: Path | None = None):
    """Finite-difference check of the reduced gradient for ``cfg.mode``."""
    if cfg.mode == "baseline":
        raise ConfigError("check-gradient needs mode pressure, membrane or plate", "mode")
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ops = assemble(build_slice_mesh(cfg.geometry), cfg.env)
    l = ops.control.size
    if cfg.mode == "pressure":
        prob = PressureProblem(ops, cfg.body, cfg.cost)
        rng = np.random.default_rng(cfg.seed)
        env = cfg.env
        u = env.rho * env.g * env.amplitude * (rng.standard_normal(l) + 1j * rng.standard_normal(l))
        point = prob.pack(u)
    else:
        if cfg.body is None:
            raise ConfigError(f"{cfg.mode} mode needs a body", "geometry.with_body")
        prob = PassiveProblem(cfg.mode, ops, _tensors(cfg.mode, ops), cfg.body, cfg.cost,
                              cfg.length)
        point = prob.pack(np.full(l, cfg.check_point[0]), np.full(l, cfg.check_point[1]))
    report = fd_gradient_check(prob, point, cfg.check_directions, seed=cfg.seed)
    rows = []
    for d in range(len(report.adjoint)):
        for t, e in zip(report.steps, report.errors[d]):
            rows.append((str(d), t, report.adjoint[d], e))
    _write_csv(out / "gradient_check.csv", ("direction", "step", "adjoint_dJ", "rel_error"), rows)
    return report


def dispersion_table(omega, depths, g, path: Path):
    rows = []
    for h0 in depths:
        for w in omega:
            k = solve_dispersion(w, h0, g)
            res = abs(w * w - g * k * math.tanh(k * h0)) / (w * w)
            rows.append((w, h0, k, 2 * math.pi / k, res))
    _write_csv(path, ("omega", "h0", "k", "lambda", "residual"), rows)
    return rows


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavecontrol",
                                description="Floating-body wave control (2D slice).")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, help_ in (("run", "run the configured scenario"),
                        ("check-gradient", "finite-difference gradient check"),
                        ("dispersion", "tabulate the dispersion relation")):
        s = sub.add_parser(verb, help=help_)
        s.add_argument("config", help=f"config file or preset:<name> ({', '.join(PRESETS)})")
        s.add_argument("-o", "--output", type=Path, help="output directory (overrides output.dir)")
    s = sub.add_parser("validate-mesh", help="check a mesh file")
    s.add_argument("mesh", type=Path)
    s.add_argument("--control-intervals", type=int, default=2)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return _dispatch(args)
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"config error{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidGeometry, BuoyancyImbalance) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WaveControlError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _dispatch(args) -> int:
    if args.verb == "validate-mesh":
        try:
            mesh = read_mesh(args.mesh)
        except OSError as exc:
            raise ConfigError(f"cannot read mesh {args.mesh}: {exc.strerror}") from None
        report = validate_mesh(mesh, args.control_intervals)
        print(report)
        return EXIT_OK if report.passed else EXIT_NUMERIC

    raw = read_config(_resolve(args.config))
    if args.verb == "dispersion":
        omega, depths, g = dispersion_settings(raw)
        out = Path(args.output or raw.get("output.dir", "output"))
        out.mkdir(parents=True, exist_ok=True)
        rows = dispersion_table(omega, depths, g, out / "dispersion.csv")
        print(f"wrote {len(rows)} rows to {out / 'dispersion.csv'}")
        return EXIT_OK

    cfg = RunConfig.from_mapping(raw)
    if args.verb == "run":
        execute(cfg, args.output)
        print((Path(args.output or cfg.output_dir) / "summary.txt").read_text(), end="")
        return EXIT_OK
    report = check_gradient(cfg, args.output)
    print(report)
    ok = report.passed()
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
