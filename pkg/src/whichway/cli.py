"""Command-line front end.

Subcommands
-----------
vg                   generalized visibility for a channel and preparation
distinguishability   which-way distinguishability from the canonical dilation
verify               both quantities plus the trade-off slack (exit 1 if violated)
table                theory grid of filtering probabilities and fractional
                     visibilities for the four-unitary noise mixture
reproduce            full pipeline: simulate (or ingest measured records via
                     --from-csv), fit, and assemble visibility/which-way bounds

Channel grammar (--channel): identity | transpose | pauli | replace[:STATE]
| random:K:SEED | file:PATH. Preparation grammar (--prep): pure:S0,S1 |
mixed | ensemble:W,S0,S1;W,S0,S1;... where a STATE token is h, v, d, a, l, r
(d=2) or a basis index for general dimension.

Exit codes: 0 success, 1 constraint or inequality violation, 2 input error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds as bnd
from . import channels as chn
from . import duality as dua
from . import interferometer as itf
from .errors import (
    ContractionError,
    ConventionError,
    DimensionError,
    NumericalError,
    SupportError,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_STATE_TOKENS = {
    "h": np.array([1.0, 0.0], dtype=complex),
    "v": np.array([0.0, 1.0], dtype=complex),
    "d": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2),
    "a": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2),
    "l": np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2),
    "r": np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2),
}


def _parse_state(token: str, d: int) -> np.ndarray:
    token = token.strip()
    if token in _STATE_TOKENS:
        if d != 2:
            raise ValueError(f"state token {token!r} is only defined for d=2")
        return _STATE_TOKENS[token]
    try:
        index = int(token)
    except ValueError:
        raise ValueError(f"unknown state token {token!r}") from None
    if not 0 <= index < d:
        raise ValueError(f"basis index {index} out of range for d={d}")
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def parse_channel(spec: str, d: int) -> chn.PathChannel:
    kind, _, rest = spec.partition(":")
    if kind == "identity":
        return chn.identity_channel(d)
    if kind == "transpose":
        return chn.transpose_channel(d)
    if kind == "pauli":
        if d != 2:
            raise ValueError("the pauli mixture channel is defined for d=2")
        return chn.pauli_mixture_channel()
    if kind == "replace":
        if rest:
            psi = _parse_state(rest, d)
            sigma0 = np.outer(psi, psi.conj())
        else:
            sigma0 = np.eye(d, dtype=complex) / d
        return chn.replace_channel(sigma0)
    if kind == "random":
        try:
            k_str, seed_str = rest.split(":")
            return chn.random_path_channel(d, int(k_str), int(seed_str))
        except ValueError:
            raise ValueError("random channel spec must be random:K:SEED") from None
    if kind == "file":
        return chn.load_channel(rest)
    raise ValueError(f"unknown channel spec {spec!r}")


def parse_preparation(spec: str, d: int) -> chn.Preparation:
    kind, _, rest = spec.partition(":")
    if kind == "pure":
        tokens = rest.split(",")
        if len(tokens) != 2:
            raise ValueError("pure preparation spec must be pure:S0,S1")
        return chn.Preparation.pure(
            _parse_state(tokens[0], d), _parse_state(tokens[1], d), label=spec
        )
    if kind == "mixed":
        return chn.Preparation.completely_mixed(d, label="mixed")
    if kind == "ensemble":
        weights, pairs = [], []
        for part in rest.split(";"):
            fields = part.split(",")
            if len(fields) != 3:
                raise ValueError("ensemble terms must be W,S0,S1")
            weights.append(float(fields[0]))
            pairs.append((_parse_state(fields[1], d), _parse_state(fields[2], d)))
        return chn.Preparation.ensemble(weights, pairs, label=spec)
    raise ValueError(f"unknown preparation spec {spec!r}")


def _emit(text: str, out_path: str | None) -> None:
    print(text)
    if out_path:
        with open(out_path, "w", encoding="ascii") as fh:
            fh.write(text + "\n")


def cmd_vg(args) -> int:
    ch = parse_channel(args.channel, args.d)
    prep = parse_preparation(args.prep, args.d)
    _emit(f"V_G = {dua.generalized_visibility(ch, prep):.4f}", args.out)
    return EXIT_OK


def cmd_distinguishability(args) -> int:
    ch = parse_channel(args.channel, args.d)
    prep = parse_preparation(args.prep, args.d)
    e0, e1 = dua.environment_states(chn.dilate(ch), prep)
    _emit(f"D = {dua.distinguishability(e0, e1):.4f}", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    ch = parse_channel(args.channel, args.d)
    prep = parse_preparation(args.prep, args.d)
    e0, e1 = dua.environment_states(chn.dilate(ch), prep)
    d_val = dua.distinguishability(e0, e1)
    v_val = dua.generalized_visibility(ch, prep)
    slack = 1.0 - d_val**2 - v_val**2
    bound = float(np.sqrt(max(1.0 - v_val**2, 0.0)))
    lines = [
        f"D     = {d_val:.4f}",
        f"V_G   = {v_val:.4f}",
        f"D_max = {bound:.4f}  (sqrt(1 - V_G^2))",
        f"slack = {slack:.4f}  (1 - D^2 - V_G^2)",
    ]
    _emit("\n".join(lines), args.out)
    return EXIT_OK if slack >= -args.tol else EXIT_VIOLATION


def cmd_table(args) -> int:
    ch = chn.pauli_mixture_channel()
    preps = bnd.rectilinear_preparations()
    filters = bnd.rectilinear_filters()
    labels = sorted(preps)
    records = [
        bnd.fractional_visibility(ch, preps[mu], filters[nu], mu=mu)
        for mu in labels
        for nu in labels
    ]
    recs = {r.key: r for r in records}
    lines = ["fractional visibilities V (rows mu, columns nu)"]
    header = "      " + "  ".join(f"{nu:>7}" for nu in labels)
    lines.append(header)
    for mu in labels:
        cells = "  ".join(f"{abs(recs[(mu, nu)].visibility):7.4f}" for nu in labels)
        lines.append(f"{mu:>4}  {cells}")
    lines.append("filtering probabilities p")
    lines.append(header)
    for mu in labels:
        cells = "  ".join(f"{recs[(mu, nu)].p:7.4f}" for nu in labels)
        lines.append(f"{mu:>4}  {cells}")
    print("\n".join(lines))
    if args.out:
        bnd.write_records_csv(records, args.out)
    return EXIT_OK


_COMPLEMENTARY = {"hh": "vv", "vv": "hh", "hv": "vh", "vh": "hv"}


def cmd_reproduce(args) -> int:
    if args.from_csv:
        records = bnd.read_records_csv(args.from_csv)
        source = f"records from {args.from_csv}"
    else:
        if args.seed is None:
            raise ValueError("--seed is required when simulating (no --from-csv)")
        filters = bnd.rectilinear_filters()
        if args.filters:
            wanted = [f.strip() for f in args.filters.split(",")]
            unknown = [f for f in wanted if f not in filters]
            if unknown:
                raise ValueError(f"unknown filter labels {unknown}")
            filters = {f: filters[f] for f in wanted}
        records = itf.run_experiment(
            chn.pauli_mixture_channel(),
            filters=filters,
            shots_per_phase=args.shots,
            contrast=args.contrast,
            seed=args.seed,
        )
        source = (
            f"simulated records (seed={args.seed}, shots/phase={args.shots}, "
            f"contrast={args.contrast})"
        )
    recs = {r.key: r for r in records}

    lines = [f"source: {source}", f"records: {len(records)}"]
    try:
        cert = bnd.swap_certificate(records)
        lines.append("four-term mixed-preparation bound:")
        lines.append(f"  V_G >= {cert.vg_lower:.4f} +/- {cert.sigma_vg:.4f}")
        lines.append(f"  D   <= {cert.d_upper:.4f} +/- {cert.sigma_d:.4f}")
        lines.append(f"  contraction slack = {cert.contraction_slack:.3e}")
    except DimensionError as exc:
        lines.append(f"four-term mixed-preparation bound unavailable: {exc}")

    lines.append("single-preparation bounds (complementary orthonormal filters):")
    best = None
    for mu in sorted({r.mu for r in records}):
        for nu in sorted(n for (m, n) in recs if m == mu):
            partner = _COMPLEMENTARY.get(nu)
            if partner is None or (mu, partner) not in recs or partner < nu:
                continue
            subset = [recs[(mu, nu)], recs[(mu, partner)]]
            sub_cert = bnd.single_preparation_certificate(mu, subset)
            lines.append(
                f"  mu={mu}, nu in {{{nu},{partner}}}: V_G >= {sub_cert.vg_lower:.4f} "
                f"+/- {sub_cert.sigma_vg:.4f}  ->  D <= {sub_cert.d_upper:.4f} "
                f"+/- {sub_cert.sigma_d:.4f}"
            )
            if best is None or sub_cert.vg_lower > best[1].vg_lower:
                best = (mu, sub_cert)
    if best is not None:
        lines.append(
            f"  best single preparation: mu={best[0]} "
            f"(V_G >= {best[1].vg_lower:.4f}, D <= {best[1].d_upper:.4f})"
        )
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whichway",
        description="Which-way information versus interference visibility "
        "for a particle with an internal degree of freedom.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, prep=True):
        p.add_argument("--channel", required=True,
                       help="identity | transpose | pauli | replace[:STATE] | "
                            "random:K:SEED | file:PATH")
        p.add_argument("--d", type=int, default=2, help="spin dimension (default 2)")
        if prep:
            p.add_argument("--prep", required=True,
                           help="pure:S0,S1 | mixed | ensemble:W,S0,S1;...")
        p.add_argument("--tol", type=float, default=1e-8,
                       help="tolerance for the trade-off check")
        p.add_argument("--out", help="write the primary output to this path")

    p_vg = sub.add_parser("vg", help="generalized visibility")
    add_common(p_vg)
    p_vg.set_defaults(func=cmd_vg)

    p_d = sub.add_parser("distinguishability", help="which-way distinguishability")
    add_common(p_d)
    p_d.set_defaults(func=cmd_distinguishability)

    p_verify = sub.add_parser("verify", help="verify the trade-off")
    add_common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_table = sub.add_parser("table", help="theory grid for the noise mixture")
    p_table.add_argument("--out", help="write the grid as a records CSV")
    p_table.set_defaults(func=cmd_table)

    p_rep = sub.add_parser("reproduce", help="simulate / ingest records and bound")
    p_rep.add_argument("--seed", type=int, help="master seed (required when simulating)")
    p_rep.add_argument("--shots", type=int, default=10_000, help="shots per phase")
    p_rep.add_argument("--contrast", type=float, default=0.96,
                       help="fringe contrast factor in (0, 1]")
    p_rep.add_argument("--filters", help="comma-separated filter labels to "
                                         "simulate (default: all of hh,hv,vh,vv)")
    p_rep.add_argument("--from-csv", dest="from_csv",
                       help="skip simulation; read a records CSV")
    p_rep.add_argument("--out", help="write the report to this path")
    p_rep.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SupportError, ContractionError) as exc:
        print(f"constraint violated: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (NumericalError, ConventionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        # includes DimensionError/PositivityError raised while building inputs
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
