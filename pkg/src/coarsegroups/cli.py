"""Command-line entry point: ``coarsegroups <subcommand> [flags]``.

Every subcommand prints one JSON document (or DOT/CSV for ``ball``) and
exits with 0 on success, 1 on a failed check, 2 when a resource cap is hit
and 3 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from . import metric as metric_mod
from .coarse import (
    DEFAULT_LAMBDA_GRID,
    CoarseMap,
    ElementMap,
    HomomorphismMap,
    MapUndefined,
    check_rough_isometry,
    embedding_maps,
    first_factor_projection,
    fit_parameters,
    identity_map,
    inversion_map,
    power_map,
    translation,
)
from .families import (
    FamilyRequest,
    check_semishared_conditions,
    check_theorem_b_conditions,
    family_abelian_z,
    family_free,
    torsion_obstruction,
    verify_property,
)
from .groups import Element, FreeAbelian, Group, GroupError, _split_top, parse_group, schreier_f4_in_f2
from .isometry import (
    DEFAULT_FAMILY_ORDER_BOUND,
    DEFAULT_ORDER_BOUND,
    check_sign_homomorphy,
    enumerate_isometries,
    refute_shared_candidate,
    shared_isometry_group,
    sixteen_case_table,
)
from .metric import CapExceeded, GeneratingSet, ball_to_csv, ball_to_dot, enumerate_ball, growth_report
from .quotient import QuotientSpec, build_quotient_isometry, enlargement_isometry, homomorphism_qi_analysis

EXIT_OK, EXIT_FAIL, EXIT_CAP, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def parse_gens(group: Group, spec: str | None, directed: bool = False) -> GeneratingSet:
    """``standard`` / ``free-basis`` or a ``;``-separated element list."""
    if spec is None or spec.strip() in ("standard", "free-basis"):
        return GeneratingSet.standard(group, symmetric=not directed)
    elems = tuple(group.parse(t) for t in spec.split(";") if t.strip())
    return GeneratingSet(group, elems, symmetric=not directed, label="custom")


def parse_elements(group: Group, spec: str) -> list[Element]:
    return [group.parse(t) for t in spec.split(";") if t.strip()]


def parse_lambdas(spec: str | None) -> list[Fraction]:
    if not spec:
        return list(DEFAULT_LAMBDA_GRID)
    return [Fraction(t.strip()) for t in spec.split(",")]


def _call(spec: str) -> tuple[str, str | None]:
    spec = spec.strip()
    if "(" in spec and spec.endswith(")"):
        name, arg = spec.split("(", 1)
        return name.strip(), arg[:-1]
    return spec, None


def parse_element_map(spec: str, domain: Group, codomain: Group) -> ElementMap:
    """``identity``, ``inversion``, ``power(k)``, ``translate(x)``,
    ``project``, ``section`` or ``hom(img1;img2;...)``."""
    name, arg = _call(spec)
    if name == "identity":
        _same(domain, codomain, name)
        return identity_map(domain)
    if name == "inversion":
        _same(domain, codomain, name)
        return inversion_map(domain)
    if name == "power":
        _same(domain, codomain, name)
        return power_map(domain, int(arg))
    if name == "translate":
        _same(domain, codomain, name)
        return translation(domain.parse(arg))
    if name == "project":
        proj, _ = first_factor_projection(domain)
        if proj.codomain != codomain:
            raise ConfigError(f"projection of {domain.descriptor()} does not land in {codomain.descriptor()}")
        return proj
    if name == "section":
        _, sect = first_factor_projection(codomain)
        return sect
    if name == "hom":
        return HomomorphismMap(domain, codomain, parse_elements(codomain, arg or ""))
    raise ConfigError(f"unknown map {spec!r}")


def _same(a: Group, b: Group, name: str) -> None:
    if a != b:
        raise ConfigError(f"map {name} needs equal domain and codomain")


_BACKWARD = {"identity": "identity", "inversion": "inversion", "project": "section"}


def parse_coarse_map(spec: str, backward: str | None, domain: Group, codomain: Group) -> CoarseMap:
    name, arg = _call(spec)
    if name == "schreier":
        emb = schreier_f4_in_f2()
        if (domain, codomain) != (emb.domain, emb.codomain):
            raise ConfigError("schreier maps free(4) into free(2)")
        return CoarseMap(*embedding_maps(emb))
    fwd = parse_element_map(spec, domain, codomain)
    if backward is None:
        if name == "translate":
            backward = f"translate({domain.parse(arg).inverse()})"
        elif name in _BACKWARD:
            backward = _BACKWARD[name]
        else:
            raise ConfigError(f"map {spec!r} needs --backward")
    return CoarseMap(fwd, parse_element_map(backward, codomain, domain))


def parse_requests(group: Group, spec: str | None) -> list[FamilyRequest]:
    """``g,h,R;g,h,R;...``"""
    out = []
    for item in (spec or "").split(";"):
        if not item.strip():
            continue
        parts = _split_top(item)
        if len(parts) != 3:
            raise ConfigError(f"request {item!r} must be g,h,R")
        out.append(FamilyRequest(group.parse(parts[0]), group.parse(parts[1]), int(parts[2])))
    return out


# ---------------------------------------------------------------------------
# experiment config


@dataclass
class ExperimentConfig:
    command: str
    options: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"command": self.command, **dict(sorted(self.options.items()))}, indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        if not isinstance(data, dict) or "command" not in data:
            raise ConfigError("config must be a JSON object with a 'command' key")
        command = data.pop("command")
        return cls(command, {k.replace("-", "_"): v for k, v in data.items()})


# ---------------------------------------------------------------------------
# subcommands


def _group(args, key="group") -> Group:
    text = getattr(args, key)
    if text is None:
        raise ConfigError(f"--{key.replace('_', '-')} is required")
    return parse_group(text)



def cmd_ball(args):
    G = _group(args)
    S = parse_gens(G, args.gens, args.directed)
    center = G.parse(args.center) if args.center else None
    ball = enumerate_ball(G, S, args.radius, cap=args.cap, directed=args.directed, center=center)
    if args.format == "dot":
        return EXIT_OK, ball_to_dot(ball)
    if args.format == "csv":
        return EXIT_OK, ball_to_csv(ball)
    return EXIT_OK, ball.to_dict()


def cmd_growth(args):
    G = _group(args)
    rep = growth_report(G, parse_gens(G, args.gens), args.kmax, cap=args.cap)
    out = {"group": G.descriptor(), **rep.to_dict()}
    return (EXIT_CAP if rep.truncated else EXIT_OK), out


def _map_setup(args):
    dom, cod = _group(args, "domain"), _group(args, "codomain")
    cmap = parse_coarse_map(args.map, args.backward, dom, cod)
    return cmap, parse_gens(dom, args.dom_gens), parse_gens(cod, args.cod_gens)


def cmd_fit(args):
    cmap, Sd, Sc = _map_setup(args)
    fit = fit_parameters(cmap, Sd, Sc, args.radius, parse_lambdas(args.lambdas), cap=args.cap, n_anchors=args.anchors)
    return EXIT_OK, fit.to_dict()


def cmd_rough_check(args):
    cmap, Sd, Sc = _map_setup(args)
    res = check_rough_isometry(cmap, Sd, Sc, args.radius, Fraction(args.eps), cap=args.cap, n_anchors=args.anchors)
    return (EXIT_OK if res.passed else EXIT_FAIL), res.to_dict()


def cmd_family_free(args):
    G = _group(args)
    fam = family_free(G.parse(args.g), G.parse(args.h), args.R, cap=args.cap)
    return EXIT_OK, fam.to_dict()


def cmd_family_z(args):
    Z = FreeAbelian(1)
    fam = family_abelian_z(Z.parse(args.g), Z.parse(args.h), args.R)
    return EXIT_OK, fam.to_dict()


def cmd_verify_property(args):
    G = _group(args)
    req = FamilyRequest(G.parse(args.g), G.parse(args.h), args.R)
    if args.gens is None:
        from .isometry import build_family

        S = build_family(req).S
    else:
        S = parse_gens(G, args.gens)
    res = verify_property(S, req, args.rmax, cap=args.cap)
    out = {"generators": [str(s) for s in S.elements], **res.to_dict()}
    return (EXIT_OK if res.passed else EXIT_FAIL), out


def cmd_check_conditions(args):
    if args.kind == "torsion":
        verdicts = [torsion_obstruction(int(n)) for n in args.orders.split(",")]
        ok = all(v.admissible for v in verdicts)
        return (EXIT_OK if ok else EXIT_FAIL), {"kind": "torsion", "passed": ok, "orders": [v.to_dict() for v in verdicts]}
    G = _group(args)
    if args.kind == "theorem-b":
        rep = check_theorem_b_conditions(G, parse_gens(G, args.gens))
    else:
        rep = check_semishared_conditions(G, parse_elements(G, args.gens or ""))
    out = {"kind": args.kind, **rep.to_dict(), "lines": rep.lines()}
    return (EXIT_OK if rep.passed else EXIT_FAIL), out


def cmd_isom_enum(args):
    G = _group(args)
    isos = enumerate_isometries(G, parse_gens(G, args.gens), args.max_order or DEFAULT_ORDER_BOUND)
    return EXIT_OK, {
        "group": G.descriptor(),
        "order": len(isos),
        "elements": [str(g) for g in G.elements()],
        "permutations": [p.cycles() for p in isos],
    }


def cmd_shared_isom(args):
    G = _group(args)
    sh = shared_isometry_group(G, max_order=args.max_order or DEFAULT_FAMILY_ORDER_BOUND)
    return EXIT_OK, sh.to_dict()


def cmd_refute(args):
    G = _group(args)
    fmap = parse_element_map(args.map, G, G)
    res = refute_shared_candidate(
        fmap, Fraction(args.lam), Fraction(args.eps), args.radius, parse_requests(G, args.requests), cap=args.cap
    )
    return (EXIT_FAIL if res.refuted else EXIT_OK), res.to_dict()


def cmd_sign_homomorphy(args):
    dom, cod = _group(args, "domain"), _group(args, "codomain")
    fmap = parse_element_map(args.map, dom, cod)
    rep = check_sign_homomorphy(fmap, None, parse_gens(dom, args.dom_gens), parse_gens(cod, args.cod_gens), args.radius, cap=args.cap)
    return (EXIT_FAIL if rep.hard_failures else EXIT_OK), rep.to_dict()


def cmd_case_table(args):
    rows = sixteen_case_table()
    return EXIT_OK, {"rows": [r.to_dict() for r in rows]}


def cmd_quotient(args):
    G = _group(args)
    spec = QuotientSpec(G, tuple(parse_elements(G, args.subgroup)), parse_gens(G, args.gens))
    q = build_quotient_isometry(spec)
    fit = fit_parameters(q.cmap, q.S, q.S_prime, args.radius, parse_lambdas(args.lambdas), cap=args.cap)
    ok = 1 in fit.lambda_grid and fit.eps(1) <= 1 and fit.surjectivity_defect == 0
    return (EXIT_OK if ok else EXIT_FAIL), {**q.to_dict(), "passed": ok, "fit": fit.to_dict()}


def cmd_enlarge(args):
    G = _group(args)
    res = enlargement_isometry(G, parse_gens(G, args.gens), parse_gens(G, args.subgroup_gens), args.radius, cap=args.cap)
    return (EXIT_OK if res.holds else EXIT_FAIL), res.to_dict()


def cmd_hom_analysis(args):
    dom, cod = _group(args, "domain"), _group(args, "codomain")
    fmap = parse_element_map(args.map, dom, cod)
    rep = homomorphism_qi_analysis(fmap, parse_gens(dom, args.dom_gens), parse_gens(cod, args.cod_gens), args.radius, args.inner, cap=args.cap)
    ok = rep.multiplicative and rep.kernel_stable
    return (EXIT_OK if ok else EXIT_FAIL), rep.to_dict()


COMMANDS: dict[str, Callable] = {
    "ball": cmd_ball,
    "growth": cmd_growth,
    "fit": cmd_fit,
    "rough-check": cmd_rough_check,
    "family-free": cmd_family_free,
    "family-z": cmd_family_z,
    "verify-property": cmd_verify_property,
    "check-conditions": cmd_check_conditions,
    "isom-enum": cmd_isom_enum,
    "shared-isom": cmd_shared_isom,
    "refute": cmd_refute,
    "sign-homomorphy": cmd_sign_homomorphy,
    "case-table": cmd_case_table,
    "quotient": cmd_quotient,
    "enlarge": cmd_enlarge,
    "hom-analysis": cmd_hom_analysis,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--cap", type=int, default=None, help="BFS element cap (env COARSEGROUPS_CAP)")
    common.add_argument("--format", choices=("json", "dot", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="coarsegroups", description="Coarse geometry experiments on Cayley graphs.")
    sub = parser.add_subparsers(dest="command")

    def add(name, *flags):
        p = sub.add_parser(name, parents=[common])
        for flag in flags:
            flag(p)
        return p

    group = lambda p: p.add_argument("--group")
    gens = lambda p: p.add_argument("--gens")
    radius = lambda p: p.add_argument("--radius", type=int, default=3)

    def mapping(p):
        p.add_argument("--domain")
        p.add_argument("--codomain")
        p.add_argument("--map", default="identity")
        p.add_argument("--backward")
        p.add_argument("--dom-gens")
        p.add_argument("--cod-gens")

    def anchors(p):
        p.add_argument("--anchors", type=int, default=16)

    def ball_flags(p):
        p.add_argument("--directed", action="store_true")
        p.add_argument("--center")

    add("ball", group, gens, radius, ball_flags)
    add("growth", group, gens, lambda p: p.add_argument("--kmax", type=int, default=8))
    add("fit", mapping, radius, anchors, lambda p: p.add_argument("--lambdas"))
    add("rough-check", mapping, radius, anchors, lambda p: p.add_argument("--eps", default="0"))

    def ghR(p):
        p.add_argument("--g")
        p.add_argument("--h")
        p.add_argument("--R", type=int, default=1)

    add("family-free", group, ghR)
    add("family-z", ghR)
    add("verify-property", group, gens, ghR, lambda p: p.add_argument("--rmax", type=int))

    def kind(p):
        p.add_argument("--kind", choices=("theorem-b", "semishared", "torsion"), default="theorem-b")
        p.add_argument("--orders", default="1,2,3,4,5,6")

    add("check-conditions", group, gens, kind)
    add("isom-enum", group, gens, lambda p: p.add_argument("--max-order", type=int))
    add("shared-isom", group, lambda p: p.add_argument("--max-order", type=int))

    def refute(p):
        p.add_argument("--map", default="identity")
        p.add_argument("--lam", default="1")
        p.add_argument("--eps", default="0")
        p.add_argument("--requests")

    add("refute", group, radius, refute)
    add("sign-homomorphy", mapping, radius)
    add("case-table")
    add("quotient", group, gens, radius, lambda p: p.add_argument("--subgroup"), lambda p: p.add_argument("--lambdas"))
    add("enlarge", group, gens, radius, lambda p: p.add_argument("--subgroup-gens"))
    add("hom-analysis", mapping, radius, lambda p: p.add_argument("--inner", type=int))
    return parser


def config_argv(cfg: ExperimentConfig) -> list[str]:
    """Flags equivalent to a config; booleans become bare switches."""
    out = [cfg.command]
    for key, val in cfg.options.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                out.append(flag)
        elif isinstance(val, list):
            out += [flag, ";".join(map(str, val))]
        else:
            out += [flag, str(val)]
    return out


def _resolve(argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        try:
            with open(known.config, encoding="utf-8") as fh:
                cfg = ExperimentConfig.from_json(fh.read())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if cfg.command not in COMMANDS:
            raise ConfigError(f"unknown command {cfg.command!r} in config")
        if rest and rest[0] in COMMANDS:
            if rest[0] != cfg.command:
                raise ConfigError(f"config is for {cfg.command!r}, not {rest[0]!r}")
            rest = rest[1:]
        # later flags win, so explicit command-line values override the file
        argv = config_argv(cfg) + rest
    return build_parser().parse_args(argv)


def emit(payload, command: str, status: str, out) -> None:
    if isinstance(payload, str):
        out.write(payload)
        return
    doc = {"command": command, "status": status, "result": payload}
    out.write(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


def main(argv: list[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    try:
        args = _resolve(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.command:
        build_parser().print_help(sys.stderr)
        return EXIT_CONFIG
    if args.cap is None:
        args.cap = metric_mod.DEFAULT_CAP
    if args.format != "json" and args.command != "ball":
        print("error: --format dot/csv is only available for ball", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, payload = COMMANDS[args.command](args)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, GroupError, MapUndefined, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = {EXIT_OK: "pass", EXIT_FAIL: "fail", EXIT_CAP: "cap"}[code]
    emit(payload, args.command, status, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
