"""Command line: critical weights, quantizations, verification runs and golden files.

Exit codes: 0 success, 2 usage, 3 critical weight rejected, 4 verification failed.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .calculus import CURVED, FLAT, laplacian
from .coeff_ring import MalformedCoefficient, coeff, latex_coeff, parse_coeff, render_coeff
from .critical_weights import (
    NoWitness, latex_form, natural_operator_witness, sigma as critical_sigma, text_form,
)
from .coordinate_oracle import Chart, random_instances, report
from .index_algebra import Expr, decompose_symbol_space
from .quantization import (
    CriticalWeightError, NotCritical, QuantizationOp, build_critical_Q, build_Q,
    leading_symbol, principal_block, yamabe,
)
from .textio import render_latex, render_text
from .tractor_core import apply_tractor_D

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CRITICAL = 3
EXIT_VERIFY = 4

OUTPUT_ENV = "TRACTORQUANT_OUTPUT_DIR"
FORMATS = ("text", "latex", "json")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    n: int | None = None
    signature: str = "both"
    mode: str = FLAT
    format: str = "text"
    seed: int = 0
    output: str = "."

    def __post_init__(self):
        if self.n is not None and self.n < 3:
            raise UsageError("concrete n must be at least 3")
        if self.format not in FORMATS:
            raise UsageError(f"unknown format {self.format!r}")
        if self.mode not in (FLAT, CURVED):
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.signature not in ("both", "euclidean", "lorentzian"):
            raise UsageError(f"unknown signature {self.signature!r}")


def load_config(path: str | None) -> RunConfig:
    """key = value lines; unknown keys are usage errors."""
    cfg = RunConfig()
    if path:
        parser = configparser.ConfigParser()
        try:
            text = Path(path).read_text()
            parser.read_string("[run]\n" + text, source=path)
        except (OSError, configparser.Error) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        values = dict(parser["run"])
        known = {"n", "signature", "mode", "format", "seed", "output"}
        extra = set(values) - known
        if extra:
            raise UsageError(f"unknown config keys: {', '.join(sorted(extra))}")
        try:
            if "n" in values:
                cfg.n = None if values["n"] in ("", "symbolic") else int(values["n"])
            if "seed" in values:
                cfg.seed = int(values["seed"])
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
        for key in ("signature", "mode", "format", "output"):
            if key in values:
                setattr(cfg, key, values[key])
    env = os.environ.get(OUTPUT_ENV)
    if env:
        cfg.output = env
    cfg.__post_init__()
    return cfg


def _merge(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates = {}
    for key in ("n", "format", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            updates[key] = v
    if getattr(args, "curved", False):
        updates["mode"] = CURVED
    if getattr(args, "signature", None):
        updates["signature"] = args.signature
    out = replace(cfg, **updates)
    out.__post_init__()
    return out


def _weight(text: str | None):
    if text is None:
        return None
    try:
        return parse_coeff(text.replace("δ′", "d").replace("d'", "d"))
    except (MalformedCoefficient, ValueError) as exc:
        raise UsageError(f"cannot parse weight {text!r}: {exc}") from None


# ------------------------------------------------------------------ critical

def cmd_critical(kprime: int, ell: int, fmt: str = "text", n: int | None = None) -> str:
    if kprime < 0 or ell < 0:
        raise UsageError("k' and l must be non-negative")
    s = critical_sigma(kprime, ell)
    rows = []
    for family, part in s.parts():
        for x in part:
            wit = natural_operator_witness(kprime, ell, x)
            rows.append((family, x, wit))
    if fmt == "json":
        return json.dumps({
            "kprime": kprime, "ell": ell, "n": n,
            "rows": [{"family": fam, "weight": text_form(x),
                      "value": None if n is None else str(x.at(n)),
                      "witness": w.describe()} for fam, x, w in rows],
            "overlap": sorted(text_form(x) for x in s.overlap()),
        }, indent=2, sort_keys=True)
    if not rows:
        return "empty"
    if fmt == "latex":
        lines = [r"\begin{tabular}{lll}", r"family & $\delta'$ & witness \\ \hline"]
        for fam, x, w in rows:
            val = latex_form(x) if n is None else str(x.at(n))
            fam_tex = {"Sigma0": r"$\Sigma_{%d,0}$" % kprime, "Sigma'": r"$\Sigma'$",
                       "Sigma''": r"$\Sigma''$"}[fam]
            lines.append(f"{fam_tex} & ${val}$ & {w.describe()} \\\\")
        lines.append(r"\end{tabular}")
        return "\n".join(lines)
    width = max(len(text_form(x)) for _, x, _ in rows)
    lines = [f"Sigma_{{{kprime},{ell}}}" + (f" at n={n}" if n is not None else "")]
    for fam, x, w in rows:
        val = text_form(x) if n is None else f"{text_form(x):<{width}}  = {x.at(n)}"
        lines.append(f"  {fam:<8} {val:<{width}}  {w.describe()}")
    if n is not None:
        vals = sorted({x.at(n) for _, x, _ in rows})
        lines.append("  values: {" + ", ".join(str(v) for v in vals) + "}")
        for x, y, v in s.numeric_coincidences(n):
            lines.append(f"  note: {text_form(x)} and {text_form(y)} coincide at n={n} ({v})")
    for x in sorted(s.overlap()):
        lines.append(f"  overlap of Sigma' and Sigma'': {text_form(x)}")
    return "\n".join(lines)


# ------------------------------------------------------------------ quantize

def _channel_form(q: QuantizationOp) -> Expr | None:
    """The displayed top channel when a transcription of the same operator exists."""
    if q.mode != CURVED or q.bindings.get("d") is not None:
        return None
    from . import golden
    if (q.kprime, q.ell) == (3, 0) and q.expr == golden.example1_pairing():
        return golden.example1_top_channel()
    if (q.kprime, q.ell) == (1, 1) and q.expr == golden.example2_pairing():
        return golden.example2_top_channel()
    return None


def cmd_quantize(kprime: int, ell: int, delta=None, mode: str = FLAT, fmt: str = "text",
                 critical: bool = False, n: int | None = None, w=None, check: bool = True) -> str:
    if kprime < 0 or ell < 0:
        raise UsageError("k' and l must be non-negative")
    if critical:
        if delta is None:
            raise UsageError("--critical needs --delta")
        try:
            q = build_critical_Q(kprime, ell, delta, mode, n)
        except NotCritical as exc:
            raise UsageError(str(exc)) from None
        status = "critical"
    else:
        q = build_Q(kprime, ell, delta, w, mode, n)
        status = "symbolic" if delta is None else "not critical"
    mono, lead = leading_symbol(q)
    verdict = None
    if check:
        verdict = "invariant" if q.residual().is_zero() else "NOT invariant"
    block = principal_block(kprime, mode) if ell == 0 and q.provenance == "generic" else None
    channel = _channel_form(q)
    if fmt == "json":
        data = q.to_json()
        data["meta"] = {"leading_coefficient": render_coeff(lead), "sigma_status": status,
                        "invariance": verdict}
        return json.dumps(data, indent=2, sort_keys=True)
    render = render_latex if fmt == "latex" else render_text
    crender = latex_coeff if fmt == "latex" else render_coeff
    lines = [f"Q_{{{kprime},{ell}}} ({mode})", render(q.expr), "",
             f"leading coefficient: {crender(lead)}",
             f"principal part: {render(mono.scale(lead))}",
             f"sigma status: {status}"]
    if block is not None:
        lines.append(f"top channel: {render(block)}")
    if channel is not None:
        lines.append(f"channel form: {render(channel)}")
    if verdict is not None:
        lines.append(f"invariance check: {verdict}")
    return "\n".join(lines)


# ------------------------------------------------------------------ decompose

def cmd_decompose(k: int, delta, fmt: str = "text") -> str:
    if k < 0:
        raise UsageError("k must be non-negative")
    pieces = decompose_symbol_space(k, delta)
    rows = []
    for kp, l, dp in pieces:
        hit = critical_sigma(kp, l).classify(dp)
        rows.append((kp, l, dp, hit))
    if fmt == "json":
        return json.dumps([{"kprime": kp, "ell": l, "delta": render_coeff(dp),
                            "critical": None if hit is None else hit[0]}
                           for kp, l, dp, hit in rows], indent=2)
    crender = latex_coeff if fmt == "latex" else render_coeff
    lines = [f"rank {k} symbols of weight {crender(coeff(delta))}"]
    for kp, l, dp, hit in rows:
        tag = "" if hit is None else f"  critical ({hit[0]})"
        lines.append(f"  k'={kp} l={l} delta'={crender(dp)}{tag}")
    return "\n".join(lines)


# ------------------------------------------------------------------ verify

@dataclass
class Check:
    name: str
    op: str
    kprime: int = 0
    ell: int = 0
    delta: str | None = None
    w: str | None = None
    mode: str = FLAT
    n: Sequence[int] = (3, 4, 5)
    signature: str = "both"
    instances: int = 20
    seed: int = 0
    critical: bool = False


@dataclass
class Verdict:
    check: Check
    symbolic: str | None
    instances: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.symbolic in (None, "0") and all(i.residual == 0 for i in self.instances)


class CheckFileError(Exception):
    pass


def parse_checks(text: str, source: str = "<checks>", defaults: RunConfig | None = None) -> list[Check]:
    """INI sections, one per check; ``defaults`` supplies signature and seed."""
    defaults = defaults or RunConfig()
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise CheckFileError(str(exc)) from None
    out = []
    for name in parser.sections():
        sec = parser[name]
        try:
            op = sec["op"]
            chk = Check(
                name, op, sec.getint("kprime", 0), sec.getint("ell", 0), sec.get("delta"),
                sec.get("w"), sec.get("mode", FLAT),
                tuple(int(x) for x in sec.get("n", "3,4,5").split(",")),
                sec.get("signature", defaults.signature), sec.getint("instances", 20),
                sec.getint("seed", defaults.seed),
                sec.getboolean("critical", False),
            )
        except (KeyError, ValueError) as exc:
            raise CheckFileError(f"{source}: section [{name}]: {exc}") from None
        if op not in ("tractor-D", "laplacian", "yamabe", "quantize"):
            raise CheckFileError(f"{source}: section [{name}]: unknown op {op!r}")
        if chk.mode not in (FLAT, CURVED):
            raise CheckFileError(f"{source}: section [{name}]: unknown mode {chk.mode!r}")
        if chk.signature not in ("both", "euclidean", "lorentzian"):
            raise CheckFileError(f"{source}: section [{name}]: unknown signature {chk.signature!r}")
        out.append(chk)
    if not out:
        raise CheckFileError(f"{source}: no checks")
    return out


def charts(ns: Sequence[int], signature: str) -> list[Chart]:
    out = []
    for n in ns:
        if signature in ("both", "euclidean"):
            out.append(Chart(n, (n, 0)))
        if signature in ("both", "lorentzian"):
            out.append(Chart(n, (n - 1, 1)))
    return out


def _frac(text: str | None, default: Fraction) -> Fraction:
    return default if text is None else Fraction(text)


def run_check(chk: Check) -> Verdict:
    f = Expr.field("f")
    w = _frac(chk.w, Fraction(1, 3))
    delta = None
    symbolic = None
    if chk.op == "tractor-D":
        expr = apply_tractor_D(f, "A", mode=chk.mode)
    elif chk.op == "laplacian":
        expr = laplacian(f, chk.mode)
        w = _frac(chk.w, Fraction(0))
    elif chk.op == "yamabe":
        expr = yamabe(f) if chk.mode == CURVED else laplacian(f, FLAT)
        w = None
    else:
        delta = _frac(chk.delta, Fraction(2, 7))
        if chk.critical:
            results = []
            for n in chk.n:
                q = build_critical_Q(chk.kprime, chk.ell, delta, chk.mode, n)
                results += random_instances(q.expr, q.w, q.delta, charts([n], chk.signature),
                                            chk.instances, chk.seed, flat_model=chk.mode == FLAT)
            return Verdict(chk, None, results)
        q = build_Q(chk.kprime, chk.ell, delta, None, chk.mode)
        res = q.residual()
        symbolic = "0" if res.is_zero() else render_text(res)
        expr = q.expr
    if w is None:
        results = []
        for n in chk.n:
            results += random_instances(expr, Fraction(2 - n, 2), None, charts([n], chk.signature),
                                        chk.instances, chk.seed, flat_model=chk.mode == FLAT)
    else:
        results = random_instances(expr, w, delta, charts(chk.n, chk.signature), chk.instances,
                                   chk.seed, flat_model=chk.mode == FLAT)
    return Verdict(chk, symbolic, results)


def cmd_verify(path: str, cfg: RunConfig | None = None) -> tuple[str, bool]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        checks = parse_checks(text, path, cfg)
    except CheckFileError as exc:
        raise UsageError(str(exc)) from None
    lines, ok = [], True
    for chk in checks:
        v = run_check(chk)
        ok &= v.passed
        lines.append(f"[{'PASS' if v.passed else 'FAIL'}] {chk.name}")
        if v.symbolic is not None:
            lines.append(f"  symbolic residual: {v.symbolic}")
        bad = [i for i in v.instances if i.residual != 0]
        lines.append(f"  oracle: {len(v.instances) - len(bad)}/{len(v.instances)} instances exactly 0")
        if bad:
            lines.append(report(bad[:5]))
    return "\n".join(lines), ok


# ------------------------------------------------------------------ examples

def cmd_examples(outdir: str) -> list[Path]:
    """Regenerate the two third-order golden files and check them against the solver."""
    from . import golden
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (k, l), pairing, channel in (
        ("example1", (3, 0), golden.example1_pairing, golden.example1_top_channel),
        ("example2", (1, 1), golden.example2_pairing, golden.example2_top_channel),
    ):
        q = build_Q(k, l, mode=CURVED)
        g = pairing()
        if q.expr != g:
            raise RuntimeError(f"{name}: solver output differs from the transcription")
        top = channel()
        for ext, render in (("txt", render_text), ("tex", render_latex)):
            p = out / f"{name}.{ext}"
            p.write_text(f"{render(q.expr)}\n\ntop channel:\n{render(top)}\n")
            written.append(p)
        p = out / f"{name}.json"
        p.write_text(q.dumps() + "\n")
        written.append(p)
    return written


# ------------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tractorquant", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value run configuration")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_n=True):
        sp.add_argument("--format", choices=FORMATS)
        if with_n:
            sp.add_argument("--n", type=int, help="concrete dimension (default symbolic)")
        sp.add_argument("--output", help="write the result to this file under the output directory")

    c = sub.add_parser("critical", help="critical weights Sigma_{k',l}")
    c.add_argument("--kprime", type=int, required=True)
    c.add_argument("--ell", type=int, required=True)
    common(c)

    q = sub.add_parser("quantize", help="build Q_{k',l}")
    q.add_argument("--kprime", type=int, required=True)
    q.add_argument("--ell", type=int, required=True)
    q.add_argument("--delta", help="weight delta' (default symbolic)")
    q.add_argument("--w", help="source weight (default symbolic)")
    q.add_argument("--curved", action="store_true")
    q.add_argument("--critical", action="store_true", help="use the critical construction")
    q.add_argument("--no-check", action="store_true", help="skip the invariance check")
    common(q)

    v = sub.add_parser("verify", help="run a file of invariance checks")
    v.add_argument("checks")

    e = sub.add_parser("examples", help="regenerate the third-order golden files")
    e.add_argument("--outdir", help="defaults to <output>/golden")

    d = sub.add_parser("decompose", help="split rank-k symbols into trace-free pieces")
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--delta", default="d")
    common(d, with_n=False)
    return p


def _emit(text: str, cfg: RunConfig, output: str | None) -> None:
    if output:
        path = Path(cfg.output) / output
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    else:
        print(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge(load_config(args.config), args)
        if args.command == "critical":
            _emit(cmd_critical(args.kprime, args.ell, cfg.format, cfg.n), cfg, args.output)
        elif args.command == "quantize":
            try:
                text = cmd_quantize(args.kprime, args.ell, _weight(args.delta), cfg.mode, cfg.format,
                                    args.critical, cfg.n, _weight(args.w), not args.no_check)
            except CriticalWeightError as exc:
                print(f"error: {exc}\nhint: rerun with --critical to use the critical construction",
                      file=sys.stderr)
                return EXIT_CRITICAL
            _emit(text, cfg, args.output)
        elif args.command == "verify":
            text, ok = cmd_verify(args.checks, cfg)
            print(text)
            return EXIT_OK if ok else EXIT_VERIFY
        elif args.command == "examples":
            for p in cmd_examples(args.outdir or str(Path(cfg.output) / "golden")):
                print(p)
        elif args.command == "decompose":
            _emit(cmd_decompose(args.k, _weight(args.delta), cfg.format), cfg, args.output)
    except (UsageError, NoWitness) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
