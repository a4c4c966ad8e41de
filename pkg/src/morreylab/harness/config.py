"""Experiment config: an INI document with typed keys and tagged kinds.

Sections: ``[domain]``, ``[exponents]``, ``[weights]``, ``[phi]``,
``[symbols]``, ``[plan]``, ``[probe]``. Kinds are written as calls, e.g.
``power(a=0.125, center=0)``; arguments are Python literals.
"""

from __future__ import annotations

import ast
import configparser
import re
from dataclasses import dataclass

from ..grid import TestFunctionSpec
from ..spaces import PhiSpec
from ..weights import ExponentConfig, WeightSpec, WeightVector

SECTIONS = ("domain", "exponents", "weights", "phi", "symbols", "plan", "probe")

OPERATORS = ("maximal", "integral", "commutator-iterated", "commutator-sum")
PROBES = ("boundedness", "sharpness", "condition", "weights", "refinement", "eval")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        where = f"line {line}, " if line else ""
        super().__init__(f"config error ({where}field {field}): {message}")


_TAG = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*(?:\((.*)\))?\s*$", re.S)


def parse_tagged(text: str) -> tuple[str, dict]:
    """``"power(a=0.5, center=(0, 1))"`` -> ``("power", {"a": 0.5, "center": (0, 1)})``."""
    m = _TAG.match(text)
    if not m:
        raise ValueError(f"cannot parse kind {text!r}")
    name, args = m.group(1), m.group(2)
    if not args or not args.strip():
        return name, {}
    try:
        call = ast.parse(f"_({args})", mode="eval").body
    except SyntaxError:
        raise ValueError(f"cannot parse arguments of {name!r}: ({args})") from None
    if call.args:
        raise ValueError(f"kind {name!r} takes keyword arguments only")
    return name, {kw.arg: ast.literal_eval(kw.value) for kw in call.keywords}


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _center(c, n: int) -> tuple:
    if isinstance(c, (int, float)):
        return (float(c),) + (0.0,) * (n - 1)
    c = tuple(float(v) for v in c)
    if len(c) != n:
        raise ValueError(f"center {c} is not in R^{n}")
    return c


@dataclass
class RawConfig:
    """Parsed INI plus a key -> line map for diagnostics."""

    parser: configparser.ConfigParser
    lines: dict

    def line(self, section: str, key: str | None = None) -> int | None:
        return self.lines.get((section, key))

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def get(self, section: str, key: str, default=None, required=False) -> str | None:
        if self.has(section, key):
            return self.parser.get(section, key).strip()
        if required:
            raise ConfigError(
                f"[{section}] {key}", "missing required field", self.line(section)
            )
        return default

    def convert(self, section: str, key: str, fn, default=None, required=False):
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        try:
            return fn(raw)
        except KeyError as exc:
            raise ConfigError(
                f"[{section}] {key}", f"missing argument {exc}", self.line(section, key)
            ) from None
        except (ValueError, TypeError, SyntaxError) as exc:
            raise ConfigError(
                f"[{section}] {key}", f"{exc}", self.line(section, key)
            ) from None

    def keys(self, section: str) -> list:
        if not self.parser.has_section(section):
            return []
        return list(self.parser[section].keys())


def read_config(text: str) -> RawConfig:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), strict=True
    )
    # keys are case sensitive: [domain] has both n and N
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError("<document>", str(exc).splitlines()[0], line) from None
    lines = {}
    section = None
    key_re = re.compile(r"^\s*([^=:#\s][^=:]*?)\s*[=:]")
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            lines[(section, None)] = no
        elif section and not s.startswith(("#", ";")) and line[:1] not in (" ", "\t"):
            m = key_re.match(line)
            if m:
                lines[(section, m.group(1))] = no
    for s in parser.sections():
        if s not in SECTIONS:
            raise ConfigError(
                f"[{s}]", f"unknown section; expected one of {SECTIONS}", lines.get((s, None))
            )
    return RawConfig(parser, lines)


# ---------------------------------------------------------------------------
# kind builders


def build_weight(text: str, n: int) -> WeightSpec:
    name, kw = parse_tagged(text)
    if name == "constant":
        return WeightSpec.constant(float(kw.get("c", 1.0)))
    if name == "power":
        if "a" not in kw:
            raise ValueError("power weight needs a=<exponent>")
        return WeightSpec.power(
            float(kw["a"]), _center(kw.get("center", 0.0), n), float(kw.get("scale", 1.0))
        )
    raise ValueError(f"unknown weight kind {name!r}")


def build_phi(text: str, n: int, cfg, ws: WeightVector, phi1s=()) -> PhiSpec:
    name, kw = parse_tagged(text)
    scale = float(kw.pop("scale", 1.0))

    def weight(ref):
        if ref in (None, "u"):
            return ws.product()
        if isinstance(ref, str) and ref.startswith("w") and ref[1:].isdigit():
            return ws[int(ref[1:]) - 1]
        raise ValueError(f"unknown weight reference {ref!r}")

    if name == "power":
        phi = PhiSpec.power(float(kw["beta"]))
    elif name == "morrey":
        phi = PhiSpec.power((float(kw["lam"]) - n) / float(kw["p"]))
    elif name == "lebesgue":
        phi = PhiSpec.lebesgue(float(kw["p"]), weight(kw.get("weight")))
    elif name == "weighted_power":
        phi = PhiSpec.weighted_power(
            float(kw["kappa"]), float(kw["p"]), weight(kw.get("weight"))
        )
    elif name == "mass":
        phi = PhiSpec.mass(weight(kw.get("weight")), float(kw["exponent"]))
    elif name == "matched":
        # phi2 = r^{alpha + sum beta_i + eps}, so the characterization
        # profile is r^{-eps}
        betas = [p.power_exponent for p in phi1s]
        if not phi1s or any(b is None for b in betas):
            raise ValueError("matched phi2 needs power-law phi1 functions")
        eps = float(kw.get("eps", 0.0))
        phi = PhiSpec.power(cfg.alpha + sum(betas) + eps)
    else:
        raise ValueError(f"unknown phi kind {name!r}")
    return phi if scale == 1.0 else phi.scaled(scale)


_FUNCTION_KINDS = {
    "indicator": "ball-indicator",
    "ball-indicator": "ball-indicator",
    "power-bump": "power-bump",
    "power_bump": "power-bump",
    "gaussian": "gaussian",
    "log-bump": "log-bump",
    "log": "log-bump",
    "constant": "constant",
    "zero": "zero",
    "coordinate": "coordinate",
    "sign": "sign",
}


def build_function(text: str, n: int) -> TestFunctionSpec:
    name, kw = parse_tagged(text)
    if name not in _FUNCTION_KINDS:
        raise ValueError(f"unknown function kind {name!r}")
    if "center" in kw:
        kw["center"] = _center(kw["center"], n)
    else:
        kw["center"] = (0.0,) * n
    return TestFunctionSpec(_FUNCTION_KINDS[name], **kw)


def build_exponents(raw: RawConfig, n: int) -> ExponentConfig:
    ps = raw.convert("exponents", "p", _floats, required=True)
    if raw.has("exponents", "alpha"):
        al = raw.convert("exponents", "alpha", _floats)
        if len(al) == 1:
            al = al * len(ps)
        build = lambda: ExponentConfig(n, ps, al)  # noqa: E731
        key = "alpha"
    elif raw.has("exponents", "q"):
        qs = raw.convert("exponents", "q", _floats)
        build = lambda: ExponentConfig.from_qs(n, ps, qs)  # noqa: E731
        key = "q"
    else:
        raise ConfigError(
            "[exponents] alpha", "need alpha or q", raw.line("exponents")
        )
    try:
        return build()
    except ValueError as exc:
        raise ConfigError(f"[exponents] {key}", str(exc), raw.line("exponents", key))
