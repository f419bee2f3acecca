"""Experiment configuration files.

INI syntax (``configparser``).  Sections and keys::

    [experiment]  kind, seed, out, csv_stride
    [model]       alpha, gamma
    [domain]      kind (interval | rectangle), L, Ly, N
    [delay]       kind (constant | proportional), tau, q
    [nonlin]      kind (zero | forcing | affine | linear | sine | quadratic), p0, c, rate, mode
    [grid]        h, T
    [sweep]       scales, q, family, alphas, gammas, mus, t_check, instances
    [halanay]     slack, tail_fraction, decay_tol

Numbers may be written as arithmetic in ``pi`` (``L = pi``, ``T = 200/1``);
lists are comma separated.
"""
import ast
import configparser
import math
import operator
from dataclasses import dataclass, field

KINDS = ("dissipativity", "asymptotic_stability", "decay_family", "halanay_suite", "relaxation_suite")

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e}


class ConfigError(ValueError):
    pass


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.operand))
    raise ConfigError(f"unsupported expression {ast.dump(node)}")


def number(text):
    """Evaluate a numeric expression such as ``2*pi`` or ``1e-2``."""
    try:
        return _eval(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def parse_value(text):
    text = text.strip()
    if not text:
        return []
    if "," in text:
        return [parse_value(t) for t in text.split(",") if t.strip()]
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return number(text)
    except ConfigError:
        return text


_REQUIRED = {
    "dissipativity": ("model", "domain", "delay", "nonlin", "grid"),
    "asymptotic_stability": ("model", "domain", "delay", "nonlin", "grid"),
    "decay_family": ("model", "domain", "delay", "nonlin", "grid"),
    "halanay_suite": ("model", "grid"),
    "relaxation_suite": ("grid",),
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    out: str = None
    sections: dict = field(default_factory=dict)
    source: str = None

    def section(self, name):
        return self.sections.get(name, {})

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def set(self, section, key, value):
        self.sections.setdefault(section, {})[key] = value

    def echo(self):
        return {"kind": self.kind, "seed": self.seed, "sections": self.sections}

    @classmethod
    def from_text(cls, text, source=None):
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        cp.read_string(text)
        if not cp.has_section("experiment") or "kind" not in cp["experiment"]:
            raise ConfigError("config needs [experiment] kind")
        kind = cp["experiment"]["kind"].strip()
        if kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
        sections = {}
        for name in cp.sections():
            items = {k: parse_value(v) for k, v in cp[name].items()
                     if name != "experiment" or k not in ("kind", "seed", "out")}
            if items or name != "experiment":
                sections[name] = items
        missing = [s for s in _REQUIRED[kind] if s not in sections]
        if missing:
            raise ConfigError(f"{kind} config is missing sections: {', '.join(missing)}")
        seed = int(number(cp["experiment"].get("seed", "0")))
        out = cp["experiment"].get("out")
        return cls(kind, seed, out.strip() if out else None, sections, source)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read(), source=str(path))

    def apply_overrides(self, seed=None, horizon=None, modes=None, grid_h=None, out=None):
        if seed is not None:
            self.seed = int(seed)
        if horizon is not None:
            self.set("grid", "T", float(horizon))
        if modes is not None:
            self.set("domain", "N", int(modes))
        if grid_h is not None:
            self.set("grid", "h", float(grid_h))
        if out is not None:
            self.out = out
        return self


def as_list(x):
    if x is None:
        return []
    return list(x) if isinstance(x, list) else [x]
