"""Command line driver ``ocurve-lab``.

Input files are line oriented: ``#`` starts a comment, ``n <int>`` gives the
number of oscillators and each ``term <p>/<q> <e1> ... <e2n>`` adds one
monomial ``p/q * x1^e1 ... x2n^e2n``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from .algebra import CartesianPolynomial
from .harness import transversal_perturbation
from .manifold import ManifoldError
from .normal_form import NormalFormError, QuadraticPartError, ZeroDivisor, quadratic_frequencies
from .pipeline import DEFAULT_EPSILON, Pipeline
from .rays import RayError
from .reduced import ReductionError
from .resonance import ResonanceError, find_resonances

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2
_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")

log = logging.getLogger("ocurvelab")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class HamiltonianSpec:
    n: int
    terms: Tuple[Tuple[Fraction, Tuple[int, ...]], ...]

    def polynomial(self) -> CartesianPolynomial:
        return CartesianPolynomial(self.n, {e: c for c, e in self.terms})


def _canonical(terms):
    return tuple(sorted(terms, key=lambda t: (sum(t[1]), tuple(-v for v in t[1]))))


def parse_spec(text: str) -> HamiltonianSpec:
    n = None
    terms = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "n":
            if n is not None or len(tok) != 2 or not tok[1].isdigit() or int(tok[1]) < 1:
                raise SpecError(f"line {lineno}: expected 'n <positive int>' once")
            n = int(tok[1])
        elif tok[0] == "term":
            if n is None:
                raise SpecError(f"line {lineno}: 'term' before 'n'")
            if len(tok) != 2 + 2 * n:
                raise SpecError(f"line {lineno}: expected a coefficient and {2 * n} exponents")
            if not _RATIONAL.match(tok[1]):
                raise SpecError(f"line {lineno}: malformed rational {tok[1]!r}")
            try:
                c = Fraction(tok[1])
                e = tuple(int(v) for v in tok[2:])
            except (ValueError, ZeroDivisionError) as exc:
                raise SpecError(f"line {lineno}: {exc}") from None
            if any(v < 0 for v in e):
                raise SpecError(f"line {lineno}: negative exponent")
            if e in terms:
                raise SpecError(f"line {lineno}: duplicate monomial {e}")
            if c:
                terms[e] = c
        else:
            raise SpecError(f"line {lineno}: unknown keyword {tok[0]!r}")
    if n is None:
        raise SpecError("missing 'n' line")
    spec = HamiltonianSpec(n, _canonical((c, e) for e, c in terms.items()))
    _validate(spec)
    return spec


def _validate(spec: HamiltonianSpec):
    H = spec.polynomial()
    try:
        quadratic_frequencies(H)
    except QuadraticPartError as exc:
        raise SpecError(f"quadratic part: {exc}") from None
    if H.degree() < 3:
        raise SpecError("at least one term of degree >= 3 is required")


def emit_spec(spec: HamiltonianSpec) -> str:
    lines = [f"n {spec.n}"]
    for c, e in spec.terms:
        lines.append(f"term {c.numerator}/{c.denominator} " + " ".join(map(str, e)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

class Report:
    def __init__(self):
        self.items: List[Tuple[str, object]] = []

    def add(self, key: str, value):
        self.items.append((key, value))

    @staticmethod
    def _fmt(v) -> str:
        if isinstance(v, bool):
            return "pass" if v else "fail"
        if isinstance(v, float):
            return f"{v:.12g}"
        if isinstance(v, (tuple, list, np.ndarray)):
            return "(" + ", ".join(Report._fmt(x) for x in v) + ")"
        if isinstance(v, (np.floating,)):
            return f"{float(v):.12g}"
        return str(v)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            def conv(v):
                if isinstance(v, (np.ndarray, tuple, list)):
                    return [conv(x) for x in v]
                if isinstance(v, (Fraction,)):
                    return str(v)
                if isinstance(v, np.floating):
                    return float(v)
                return v
            return json.dumps({k: conv(v) for k, v in self.items}, indent=2)
        return "\n".join(f"{k} = {self._fmt(v)}" for k, v in self.items)


def _resonance_section(rep: Report, p: Pipeline):
    r = p.res
    rep.add("convention", "omega_i = 2 c_i from the quadratic pair coefficient c_i")
    rep.add("resonance.k", r.k)
    rep.add("resonance.N", r.N)
    rep.add("resonance.M", r.M)
    rep.add("resonance.delta", str(r.delta))
    rep.add("h1", True)
    rep.add("h1.inner_product", str(sum(w * k for w, k in zip(r.omega, r.k))))
    rep.add("h2", True)
    rep.add("h2.resonances_up_to_M", [tuple(h) for h in find_resonances(r.omega, r.M)])
    rep.add("h3", p.h3.passed)
    for j, v in p.h3.values.items():
        rep.add(f"h3.value.{j}", str(v))


def _rays_section(rep: Report, p: Pipeline):
    rep.add("psi.A", p.psi.A)
    rep.add("psi.sigma0", p.psi.sigma0)
    rep.add("psi.B", p.psi.B)
    rep.add("h4", True)
    rep.add("ray.plus.c", p.plus.c)
    rep.add("ray.plus.psi_prime", p.plus.psi_prime)
    rep.add("ray.minus.c", p.minus.c)
    rep.add("ray.minus.psi_prime", p.minus.psi_prime)


def _reduce_section(rep: Report, p: Pipeline, sign: int):
    s = p.branch(sign).system
    tag = "plus" if sign > 0 else "minus"
    rep.add("reduce.ray", tag)
    for name in ("gamma", "Gamma", "c1", "c2", "d0", "d1", "d2"):
        rep.add(f"reduce.{name}", float(getattr(s, name)))
    rep.add("reduce.dhat", tuple(float(v) for v in s.dhat))
    rep.add("reduce.Omega_hat0", tuple(float(v) for v in s.Omega_hat0))
    rep.add("reduce.eigenvalues", tuple(float(v) for v in s.eigenvalues()))


def _normal_form_section(rep: Report, p: Pipeline):
    rep.add("normal_form.truncation", p.nf.truncation_degree)
    rep.add("normal_form.generators", len(p.nf.generators))
    for j, s in p.nf.integrable_parts.items():
        rep.add(f"normal_form.integrable.{j}", str(s))
    for r, s in p.nf.resonant_parts.items():
        rep.add(f"normal_form.resonant.{r}", str(s))


def _eta_hats(values: Sequence[str] | None, n: int):
    if not values:
        return [np.zeros(n - 1)]
    out = []
    for v in values:
        nums = [float(x) for x in v.split(",") if x.strip()]
        if n == 2:
            out.extend(np.array([x]) for x in nums)
        else:
            if len(nums) != n - 1:
                raise SpecError(f"--eta-hat needs {n - 1} comma-separated values per curve")
            out.append(np.array(nums))
    return out


def _curves(args, p: Pipeline, rep: Report, verify: bool):
    sign = 1 if args.ray == "plus" else -1
    t0 = p.default_t0(sign) if args.t0 == "auto" else float(args.t0)
    tmax = float(args.tmax) if args.tmax is not None else 100 * t0
    if tmax <= t0:
        raise SpecError("--tmax must exceed t0")
    t = np.geomspace(t0, tmax, args.samples)
    rep.add("curve.ray", args.ray)
    rep.add("curve.t0", t0)
    rep.add("curve.tmax", tmax)
    all_pass = True
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    csv_text = None
    for i, eh in enumerate(_eta_hats(args.eta_hat, p.res.n)):
        cv = p.curve(eh, sign=sign, t=t)
        ch = cv.chart.report
        key = f"curve.{i}"
        rep.add(f"{key}.eta_hat0", tuple(float(v) for v in eh))
        rep.add(f"{key}.manifold.iterations", ch.iterations)
        rep.add(f"{key}.manifold.contraction_ratio", ch.contraction_ratio)
        rep.add(f"{key}.manifold.shooting_gap", cv.chart.shooting_gap)
        vr = p.verify(cv)
        for c in vr.checks:
            rep.add(f"{key}.{c.name}", c.value)
            rep.add(f"{key}.{c.name}.verdict", c.passed)
        rep.add(f"{key}.verdict", vr.passed)
        all_pass &= vr.passed
        if verify and args.negative_control:
            xp = transversal_perturbation(p.nf, p.res, cv.x[0])
            nc = p.verify(cv, x0=xp)
            rep.add(f"{key}.negative_control.verdict", nc.passed)
            all_pass &= not nc.passed
        if vr.trajectory is not None:
            if out:
                path = out / f"ocurve_{args.ray}_{i}.csv"
                vr.trajectory.write_csv(path)
                rep.add(f"{key}.csv", str(path))
            if csv_text is None:
                csv_text = vr.trajectory.csv_text()
    return all_pass, csv_text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ocurve-lab", description="Asymptotic O-curves near resonant equilibria.")
    ap.add_argument("command", choices=["analyze", "normalize", "check", "rays", "reduce", "ocurve", "verify"])
    ap.add_argument("file", help="Hamiltonian spec file ('-' for stdin)")
    ap.add_argument("--order", type=int, default=None, help="truncation degree (default 3N)")
    ap.add_argument("--ray", choices=["plus", "minus"], default="plus")
    ap.add_argument("--eta-hat", action="append", default=None, help="comma-separated family parameters")
    ap.add_argument("--t0", default="auto")
    ap.add_argument("--tmax", default=None)
    ap.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--out", default=None)
    ap.add_argument("--format", choices=["text", "json", "csv"], default="text")
    ap.add_argument("--negative-control", action="store_true", help="verify: also run a perturbed start")
    return ap


def _setup_logging():
    level = os.environ.get("OCURVE_LOG", "quiet").lower()
    levels = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise SpecError(f"OCURVE_LOG must be one of {sorted(levels)}")
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s")


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    rep = Report()
    code = EXIT_OK
    try:
        _setup_logging()
        text = sys.stdin.read() if args.file == "-" else Path(args.file).read_text()
        spec = parse_spec(text)
        H = spec.polynomial()
        rep.add("omega", tuple(str(w) for w in quadratic_frequencies(H)))
        p = Pipeline.from_hamiltonian(H, args.order, args.epsilon, with_rays=False)
        _resonance_section(rep, p)
        if not p.h3.passed:
            rep.add("status", "hypothesis H3 fails")
            code = EXIT_NEGATIVE
        else:
            if args.command == "normalize":
                _normal_form_section(rep, p)
            else:
                p.find_rays()
                _rays_section(rep, p)
                if args.command in ("reduce", "ocurve", "verify"):
                    sign = 1 if args.ray == "plus" else -1
                    _reduce_section(rep, p, sign)
                if args.command in ("ocurve", "verify"):
                    ok, csv_text = _curves(args, p, rep, verify=args.command == "verify")
                    if not ok:
                        code = EXIT_NEGATIVE
                    if args.format == "csv" and csv_text is not None:
                        stdout.write(csv_text)
                        return code
            rep.add("status", "ok" if code == EXIT_OK else "negative")
    except (ResonanceError, RayError, ZeroDivisor) as exc:
        rep.add("status", f"hypothesis failure: {type(exc).__name__}: {exc}")
        code = EXIT_NEGATIVE
    except (SpecError, NormalFormError, ReductionError, ManifoldError, OSError, ValueError) as exc:
        rep.add("status", f"error: {type(exc).__name__}: {exc}")
        code = EXIT_ERROR
    fmt = "text" if args.format == "csv" else args.format
    stdout.write(rep.render(fmt) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
