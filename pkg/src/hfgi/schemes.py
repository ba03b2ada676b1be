"""Palindromic splitting schemes over A (drift), B (kick) and D (Hessian-free
force-gradient kick) stages, plus the full coefficient catalog.

Coefficients are held exactly: rationals and printed decimals as
:class:`fractions.Fraction`, closed forms involving roots as 50-digit
``mpmath.mpf`` values.  Floats are derived once per scheme for the step loop.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath

__all__ = [
    "Stage",
    "Scheme",
    "OrderReport",
    "build_scheme",
    "catalog",
    "get_scheme",
    "count_forces",
    "validate_order_conditions",
    "triple_jump",
    "catalog_json",
    "catalog_csv",
    "catalog_checksum",
]

MP_DPS = 50


def _mpf(x):
    with mpmath.workdps(MP_DPS):
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        return mpmath.mpf(x)


def exact(x):
    """Coerce a coefficient to an exact representation.

    Strings are read as decimals (so printed digits are kept verbatim),
    ints and Fractions stay rational, mpf stays mpf, floats become the
    rational equal to their binary value.
    """
    if isinstance(x, (Fraction, mpmath.mpf)):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    return Fraction(float(x))


def _unify(*xs):
    """Promote to a common exact type: all Fraction, or all mpf."""
    xs = [exact(x) for x in xs]
    if any(isinstance(x, mpmath.mpf) for x in xs):
        return [_mpf(x) for x in xs]
    return xs


@dataclass(frozen=True)
class Stage:
    """One exponential of a splitting scheme.

    ``kind`` is ``"A"`` (drift by ``a h``), ``"B"`` (kick by ``b h``) or
    ``"D"`` (Hessian-free FG kick by ``b h`` with gradient weight ``c``).
    Unused coefficients are zero.
    """

    kind: str
    a: object = Fraction(0)
    b: object = Fraction(0)
    c: object = Fraction(0)

    def __post_init__(self):
        if self.kind not in ("A", "B", "D"):
            raise ValueError(f"unknown stage kind {self.kind!r}")
        if self.kind == "A" and (self.b != 0 or self.c != 0):
            raise ValueError("A stage carries only a drift coefficient")
        if self.kind == "B" and (self.a != 0 or self.c != 0):
            raise ValueError("B stage carries only a kick coefficient")
        if self.kind == "D":
            if self.a != 0:
                raise ValueError("D stage carries no drift coefficient")
            if self.b == 0:
                raise ValueError("D stage requires b != 0 (the shift divides by b)")
            if self.c == 0:
                raise ValueError("D stage requires c != 0; use a B stage")

    @property
    def is_momentum(self) -> bool:
        return self.kind != "A"

    def floats(self) -> tuple:
        return float(self.a), float(self.b), float(self.c)

    def scaled(self, w) -> "Stage":
        """The same stage executed with step ``w h`` expressed in units of ``h``."""
        if self.kind == "A":
            return Stage("A", a=self.a * w)
        if self.kind == "B":
            return Stage("B", b=self.b * w)
        return Stage("D", b=self.b * w, c=self.c * w**3)


@dataclass(frozen=True)
class Scheme:
    name: str
    stages: tuple
    version: str
    order_p: int
    n_f: int
    err_leading: float | None = None
    eff: float | None = None
    table_id: int | None = None
    params: dict = field(default_factory=dict, compare=False, hash=False)
    param_sources: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def letters(self) -> str:
        return "".join(s.kind for s in self.stages)

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def P(self) -> int:
        return (len(self.stages) + 1) // 2

    @property
    def has_gradient(self) -> bool:
        return any(s.kind == "D" for s in self.stages)

    def float_stages(self) -> list:
        return [(s.kind,) + s.floats() for s in self.stages]

    def coefficient_sums(self):
        sa = sum((s.a for s in self.stages), Fraction(0))
        sb = sum((s.b for s in self.stages), Fraction(0))
        return sa, sb

    def param(self, name) -> float:
        return float(self.params[name])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "letters": self.letters,
            "version": self.version,
            "p": self.order_p,
            "n_f": self.n_f,
            "err": self.err_leading,
            "eff": self.eff,
            "id": self.table_id,
            "stages": [
                {"kind": s.kind, **{k: repr(float(v)) for k, v in zip("abc", (s.a, s.b, s.c)) if v != 0}}
                for s in self.stages
            ],
        }

    def __repr__(self) -> str:
        return f"Scheme({self.name!r}, p={self.order_p}, n_f={self.n_f}, version={self.version!r})"


def count_forces(scheme) -> int:
    """Amortized force evaluations per step.

    B costs one force, a Hessian-free D costs two (shift force and shifted
    force).  In a velocity version the first stage of step k+1 sees exactly
    the configuration of the last stage of step k, so its whole cost is
    reused.
    """
    stages = scheme.stages
    cost = sum(1 if s.kind == "B" else 2 if s.kind == "D" else 0 for s in stages)
    if stages[0].is_momentum:
        cost -= 1 if stages[0].kind == "B" else 2
    return cost


def _expand(letters, a_list, b_list, c_list):
    """Turn per-kind coefficient lists into full stage lists.

    Lists may cover the first half including the centre (the usual way the
    coefficients are written) or the whole word.
    """
    n = len(letters)
    half = letters[: (n + 1) // 2]
    a_list = [exact(x) for x in a_list]
    b_list = [exact(x) for x in b_list]
    c_list = [exact(x) for x in c_list]

    n_a_full = sum(ch == "A" for ch in letters)
    n_m_full = n - n_a_full
    n_a_half = sum(ch == "A" for ch in half)
    n_m_half = len(half) - n_a_half
    n_d_half = sum(ch == "D" for ch in half)
    n_d_full = sum(ch == "D" for ch in letters)

    def mirror(vals, n_half, n_full, what):
        if len(vals) == n_half:
            tail = vals[: n_full - n_half][::-1]
            return vals + tail
        if len(vals) == n_full:
            return list(vals)
        raise ValueError(
            f"{what}: expected {n_half} (half) or {n_full} (full) values, got {len(vals)}"
        )

    a_full = mirror(a_list, n_a_half, n_a_full, "a coefficients")
    b_full = mirror(b_list, n_m_half, n_m_full, "b coefficients")
    if len(c_list) > max(n_d_half, n_d_full) or (len(c_list) not in (n_d_half, n_d_full)):
        raise ValueError(
            f"c coefficients attach to D stages only: {letters} has {n_d_half} "
            f"D stages in its first half, got {len(c_list)} values"
        )
    c_full = mirror(c_list, n_d_half, n_d_full, "c coefficients")

    stages = []
    ia = ib = ic = 0
    for ch in letters:
        if ch == "A":
            stages.append(("A", a_full[ia], 0, 0))
            ia += 1
        elif ch == "B":
            stages.append(("B", 0, b_full[ib], 0))
            ib += 1
        else:
            stages.append(("D", 0, b_full[ib], c_full[ic]))
            ib += 1
            ic += 1
    return stages


def _make_stage(kind, a, b, c) -> Stage:
    if kind == "D" and c == 0:
        kind = "B"
    return Stage(kind, a=exact(a), b=exact(b), c=exact(c))


def _check_structure(stages: list) -> None:
    if not stages:
        raise ValueError("empty scheme")
    if len(stages) % 2 == 0:
        raise ValueError("a symmetric scheme has an odd number of stages")
    for left, right in zip(stages, stages[1:]):
        if left.is_momentum == right.is_momentum:
            raise ValueError(
                f"adjacent stages {left.kind}{right.kind} of the same family; merge them"
            )
    for s, t in zip(stages, stages[::-1]):
        if s.kind != t.kind or s.a != t.a or s.b != t.b or s.c != t.c:
            raise ValueError("stage sequence is not palindromic")


def _check_sums(stages: list, tol: float = 1e-15) -> None:
    sa = sum((_mpf(s.a) for s in stages), mpmath.mpf(0))
    sb = sum((_mpf(s.b) for s in stages), mpmath.mpf(0))
    if abs(sa - 1) > tol:
        raise ValueError(f"drift coefficients sum to {float(sa)!r}, not 1")
    if abs(sb - 1) > tol:
        raise ValueError(f"kick coefficients sum to {float(sb)!r}, not 1")


def _from_stages(stages, name=None, order_p=None, **meta) -> Scheme:
    stages = list(stages)
    _check_structure(stages)
    _check_sums(stages)
    version = "velocity" if stages[0].is_momentum else "position"
    letters = "".join(s.kind for s in stages)
    tmp = Scheme(letters, tuple(stages), version, 0, 0)
    return Scheme(
        name=name or letters,
        stages=tuple(stages),
        version=version,
        order_p=order_p if order_p is not None else 2,
        n_f=count_forces(tmp),
        **meta,
    )


def build_scheme(letters: str, a_list, b_list, c_list=(), *, name=None, order_p=None, **meta) -> Scheme:
    """Assemble and validate a scheme from its letter word and coefficients.

    ``a_list``/``b_list`` give the drift and momentum coefficients in stage
    order, either for the first half including the centre or for the whole
    word; ``c_list`` gives the gradient weights of the D letters likewise.
    A D with ``c = 0`` is stored as a B.

    >>> build_scheme("BADAB", [Fraction(1, 2)], [Fraction(1, 6), Fraction(2, 3)], [Fraction(1, 72)]).n_f
    3
    """
    letters = letters.upper()
    if not letters or set(letters) - set("ABD"):
        raise ValueError(f"letters must be a non-empty word over A, B, D: {letters!r}")
    if letters != letters[::-1]:
        raise ValueError(f"letters {letters!r} are not palindromic")
    raw = _expand(letters, list(a_list), list(b_list), list(c_list))
    stages = [_make_stage(*r) for r in raw]
    return _from_stages(stages, name=name, order_p=order_p, **meta)


# ---------------------------------------------------------------------------
# catalog data

def _cbrt(x):
    return mpmath.cbrt(x)


def _closed_forms() -> dict:
    with mpmath.workdps(MP_DPS):
        r = 2 * mpmath.sqrt(326) + 36
        omelyan2 = mpmath.mpf(1) / 2 - _cbrt(r) / 12 + 1 / (6 * _cbrt(r))
        fr = 1 / (2 - _cbrt(2))
        k = _cbrt(675 + 75 * mpmath.sqrt(6))
        a2_6 = mpmath.mpf(1) / 2 + k / 30 + 5 / (2 * k)
        return {
            "omelyan2": omelyan2,
            "forest_ruth": fr,
            "adada_a1": (1 - 1 / mpmath.sqrt(3)) / 2,
            "adada_c1": (2 - mpmath.sqrt(3)) / 48,
            "s9v6_a2": a2_6,
        }


# Half-scheme templates: map named parameters to (a_half, b_half, c_per_momentum_slot).
def _tpl(family, p):
    g = p.get
    z = Fraction(0)
    h = Fraction(1, 2)
    if any(isinstance(v, mpmath.mpf) for v in p.values()):
        z, h = _mpf(z), _mpf(h)
    if family == "v3":
        return [1], [h], [g("c1", z)]
    if family == "p3":
        return [h], [1], [g("c1", z)]
    if family == "v5":
        b1 = p["b1"]
        return [h], [b1, 1 - 2 * b1], [g("c1", z), g("c2", z)]
    if family == "p5":
        a1 = p["a1"]
        return [a1, 1 - 2 * a1], [h], [g("c1", z)]
    if family == "v7":
        a2, b1 = p["a2"], p["b1"]
        return [a2, 1 - 2 * a2], [b1, h - b1], [g("c1", z), g("c2", z)]
    if family == "p7":
        a1, b1 = p["a1"], p["b1"]
        return [a1, h - a1], [b1, 1 - 2 * b1], [g("c1", z), g("c2", z)]
    if family == "v9":
        a2, b1, b2 = p["a2"], p["b1"], p["b2"]
        return [a2, h - a2], [b1, b2, 1 - 2 * (b1 + b2)], [g("c1", z), g("c2", z), g("c3", z)]
    if family == "p9":
        a1, a2, b1 = p["a1"], p["a2"], p["b1"]
        return [a1, a2, 1 - 2 * (a1 + a2)], [b1, h - b1], [g("c1", z), g("c2", z)]
    if family == "v11":
        a2, a3, b1, b2 = p["a2"], p["a3"], p["b1"], p["b2"]
        return (
            [a2, a3, 1 - 2 * (a2 + a3)],
            [b1, b2, h - (b1 + b2)],
            [g("c1", z), g("c2", z), g("c3", z)],
        )
    if family == "p11":
        a1, a2, b1, b2 = p["a1"], p["a2"], p["b1"], p["b2"]
        return (
            [a1, a2, h - (a1 + a2)],
            [b1, b2, 1 - 2 * (b1 + b2)],
            [g("c1", z), g("c2", z), g("c3", z)],
        )
    raise KeyError(family)


# name, family, table id, p, n_f, Err, Eff, params (decimal strings or keys of _closed_forms)
_ROWS = [
    ("BAB", "v3", 1, 2, 1, "0.0932", "10.73", {}),
    ("ABA", "p3", 2, 2, 1, "0.0932", "10.73", {}),
    ("DAD", "v3", 3, 2, 2, "0.0833", "3.00", {"c1": "-1/48"}),
    ("ADA", "p3", 4, 2, 2, "0.0417", "6.00", {"c1": "1/12"}),
    ("BABAB", "v5", 5, 2, 2, "0.00855", "29.24", {"b1": "@omelyan2"}),
    ("ABABA", "p5", 6, 2, 2, "0.00855", "29.24", {"a1": "@omelyan2"}),
    ("DABAD", "v5", 7, 4, 3, "0.00335", "3.68", {"b1": "1/6", "c1": "1/144"}),
    ("BADAB", "v5", 8, 4, 3, "0.000728", "16.96", {"b1": "1/6", "c2": "1/72"}),
    ("DADAD", "v5", 9, 4, 4, "0.000625", "6.25",
     {"b1": "1/6", "c1": "-0.000881991367333", "c2": "0.015652871623554"}),
    ("ADADA", "p5", 10, 4, 4, "0.000718", "5.44", {"a1": "@adada_a1", "c1": "@adada_c1"}),
    ("BABABAB", "v7", 11, 4, 3, "0.0383", "0.32", {"a2": "@forest_ruth", "b1": "@forest_ruth/2"}),
    ("ABABABA", "p7", 12, 4, 3, "0.0283", "0.44", {"a1": "@forest_ruth/2", "b1": "@forest_ruth"}),
    ("DABABAD", "v7", 13, 4, 4, "0.000891", "4.38",
     {"a2": "0.258529167713908", "b1": "0.065274481323251", "c1": "0.003595899064589"}),
    ("ABADABA", "p7", 14, 4, 4, "0.000149", "26.19",
     {"a1": "0.089775972994422", "b1": "0.247597680043986", "c2": "0.006911440413815"}),
    ("BADADAB", "v7", 15, 4, 5, "0.0000498", "32.12",
     {"a2": "0.281473422092232", "b1": "0.087960811032557", "c2": "0.003060423791562"}),
    ("ADABADA", "p7", 16, 4, 5, "0.0000844", "18.95",
     {"a1": "0.136458051118946", "b1": "0.315267858070664", "c1": "0.002427032834125"}),
    ("DADADAD", "v7", 17, 4, 6, "0.0000275", "28.09",
     {"a2": "0.273005515864808", "b1": "0.080128674198082",
      "c1": "0.000271601364672", "c2": "0.002959399979707"}),
    ("ADADADA", "p7", 18, 4, 6, "0.0000200", "38.57",
     {"a1": "0.116438749543126", "b1": "0.283216992495952",
      "c1": "0.001247201195115", "c2": "0.002974030329635"}),
    ("BABABABAB", "v9", 19, 4, 4, "0.000654", "5.97",
     {"a2": "0.520943339103990", "b1": "0.164498651557576", "b2": "1.235692651138917"}),
    ("ABABABABA", "p9", 20, 4, 4, "0.000610", "6.40",
     {"a1": "0.178617895844809", "a2": "-0.066264582669818", "b1": "0.712341831062606"}),
    ("BABADABAB", "v9", 21, 4, 5, "0.0000651", "24.57",
     {"a2": "0.200395293638238", "b1": "0.073943321445602", "b2": "0.258244950046509",
      "c3": "0.003147048491590"}),
    ("DABABABAD", "v9", 22, 4, 5, "0.000336", "4.76",
     {"a2": "0.190585159174513", "b1": "0.036356798097337", "b2": "0.340278911234329",
      "c1": "0.002005691094612"}),
    ("DABADABAD", "v9", 23, 4, 6, "0.0000130", "59.33",
     {"a2": "0.197279141794602", "b1": "0.060885008530668", "b2": "0.288579639891554",
      "c1": "0.000429756946246", "c3": "0.002373498029145"}),
    ("BADABADAB", "v9", 24, 4, 6, "0.0000105", "73.45",
     {"a2": "0.219039425103133", "b1": "0.068466565514186", "b2": "0.311000565033563",
      "c2": "0.001602470431500"}),
    ("ABADADABA", "p9", 25, 4, 6, "0.0000346", "22.32",
     {"a1": "0.047802682977081", "a2": "0.265994592108478", "b1": "0.143282503449494",
      "c2": "0.002065558490728"}),
    ("ADABABADA", "p9", 26, 4, 6, "0.0000471", "16.39",
     {"a1": "0.118030603246046", "a2": "0.295446189611111", "b1": "0.273985556386628",
      "c1": "0.001466561305710"}),
    ("DADABADAD", "v9", 27, 4, 7, "0.0000101", "41.06",
     {"a2": "0.227758000273404", "b1": "0.070935378258660", "b2": "0.322911610232109",
      "c1": "0.000067752132787", "c2": "0.001597508440746"}),
    ("BADADADAB", "v9", 28, 6, 7, "0.00154", "0.0055", "@s9v6"),
    ("ADADADADA", "p9", 29, 4, 8, "0.00000501", "48.71",
     {"a1": "0.094471605659163", "a2": "0.281057227947299", "b1": "0.227712700174579",
      "c1": "0.000577062053569", "c2": "0.000817399268485"}),
    ("BABABABABAB", "v11", 30, 4, 5, "0.0000270", "59.26",
     {"a2": "0.253978510841060", "a3": "-0.032302867652700", "b1": "0.083983152628767",
      "b2": "0.682236533571909"}),
    ("ABABABABABA", "p11", 31, 4, 5, "0.0000518", "30.89",
     {"a1": "0.275008121233242", "a2": "-0.134795009910679", "b1": "-0.084429619507071",
      "b2": "0.354900057157426"}),
    ("DABABABABAD", "v11", 32, 4, 6, "0.0000166", "46.47",
     {"a2": "0.282918304065611", "a3": "-0.002348009438292", "b1": "0.080181913812571",
      "b2": "-1.372969015964262", "c1": "0.000325098077953"}),
    ("ABABADABABA", "p11", 33, 4, 6, "0.0000154", "50.09",
     {"a1": "0.134257092137626", "a2": "-0.007010267216916", "b1": "-0.485681409840328",
      "b2": "0.767464037573892", "c3": "0.002836723107629"}),
    ("BADABABADAB", "v11", 34, 4, 7, "0.00000520", "80.13",
     {"a2": "0.201110227930330", "a3": "0.200577842713366", "b1": "0.065692416344302",
      "b2": "0.264163604920340", "c2": "0.001036943019757"}),
    ("BABADADABAB", "v11", 35, 4, 7, "0.0000189", "21.98",
     {"a2": "0.122268182901557", "a3": "0.203023211433263", "b1": "0.055200549768959",
      "b2": "0.127408150658963", "c3": "0.001487834491987"}),
    ("ABADABADABA", "p11", 36, 4, 7, "0.00000445", "93.60",
     {"a1": "0.062702644098210", "a2": "0.193174566017780", "b1": "0.149293739165427",
      "b2": "0.220105234408407", "c2": "0.000966194415594"}),
    ("ADABABABADA", "p11", 37, 4, 7, "0.0000128", "32.64",
     {"a1": "0.115889910143319", "a2": "0.388722377182381", "b1": "0.282498420841510",
      "b2": "-0.625616553474143", "c1": "0.001208219887746"}),
    ("DABADADABAD", "v11", 38, 4, 8, "0.00000355", "68.84",
     {"a2": "0.068597474282941", "a3": "0.284851197274498", "b1": "-0.029456704762871",
      "b2": "0.228751459942521", "c1": "0.000410146066173", "c3": "0.001249935251564"}),
    ("DADABABADAD", "v11", 39, 4, 8, "0.00000519", "47.08",
     {"a2": "0.203263079324187", "a3": "0.200698071607808", "b1": "0.066202529912271",
      "b2": "0.267856111220228", "c1": "0.000012570620797", "c2": "0.001042408779514"}),
    ("ADABADABADA", "p11", 40, 4, 8, "0.00000318", "76.79",
     {"a1": "0.083684971641549", "a2": "0.225966488946428", "b1": "0.199022868372193",
      "b2": "0.197953981691206", "c1": "0.000437056543403", "c3": "0.000870457820984"}),
    ("BADADADADAB", "v11", 42, 6, 9, "0.00000699", "0.27",
     {"a2": "0.270990466773838", "a3": "0.635374358266882", "b1": "0.090330155591279",
      "b2": "0.430978044876253", "c2": "0.002637435980472", "c3": "-0.000586445610932"}),
    ("ADADABADADA", "p11", 43, 4, 9, "0.00000235", "64.99",
     {"a1": "0.082541033171754", "a2": "0.228637847036999", "b1": "0.196785139280847",
      "b2": "0.206783248777282", "c1": "0.000317260402502", "c2": "0.000555360763892"}),
    ("ADADADADADA", "p11", 45, 6, 10, "0.00000603", "0.17",
     {"a1": "0.109534125980058", "a2": "0.426279051773841", "b1": "0.268835839917653",
      "b2": "0.529390037396794", "c1": "0.000806354602850", "c2": "0.007662601517364",
      "c3": "-0.011627206142396"}),
]


def _resolve_params(spec, forms):
    if spec == "@s9v6":
        with mpmath.workdps(MP_DPS):
            a2 = forms["s9v6_a2"]
            vals = {
                "a2": a2,
                "b1": a2 / 3,
                "b2": -5 * a2 / 3 * (a2 - 1),
                "c2": -5 * a2**2 / 144 + a2 / 36 - mpmath.mpf(1) / 288,
                "c3": mpmath.mpf(1) / 144 - a2 / 36 * (a2 / 2 + 1),
            }
        return vals, {k: "closed form" for k in vals}
    vals, srcs = {}, {}
    for key, raw in spec.items():
        if raw.startswith("@"):
            base, _, div = raw[1:].partition("/")
            v = forms[base]
            if div:
                with mpmath.workdps(MP_DPS):
                    v = v / int(div)
            vals[key], srcs[key] = v, "closed form"
        elif "/" in raw:
            vals[key], srcs[key] = Fraction(raw), "rational"
        else:
            vals[key], srcs[key] = Fraction(raw), "decimal"
    return vals, srcs


def _build_row(row, forms) -> Scheme:
    name, family, tid, p, n_f, err, eff, spec = row
    vals, srcs = _resolve_params(spec, forms)
    promoted = _unify(*vals.values()) if vals else []
    vals = dict(zip(vals.keys(), promoted))
    with mpmath.workdps(MP_DPS):
        a_half, b_half, c_slots = _tpl(family, vals)
    a_half, b_half = _unify(*a_half), _unify(*b_half)
    mom = [ch for ch in name[: (len(name) + 1) // 2] if ch != "A"]
    for ch, c in zip(mom, c_slots):
        if ch == "B" and c != 0:
            raise AssertionError(f"{name}: B stage received a gradient weight")
    c_list = [c for ch, c in zip(mom, c_slots) if ch == "D"]
    scheme = build_scheme(
        name, a_half, b_half, c_list, order_p=p, err_leading=float(err), eff=float(eff),
        table_id=tid, params=vals, param_sources=srcs,
    )
    if scheme.n_f != n_f:
        raise AssertionError(f"{name}: force count {scheme.n_f} differs from tabulated {n_f}")
    return scheme


@lru_cache(maxsize=1)
def _catalog_tuple() -> tuple:
    forms = _closed_forms()
    return tuple(_build_row(r, forms) for r in _ROWS)


def catalog() -> list:
    """All tabulated schemes, in table order."""
    return list(_catalog_tuple())


def get_scheme(name: str) -> Scheme:
    for s in _catalog_tuple():
        if s.name == name.upper():
            return s
    raise KeyError(f"unknown scheme {name!r}")


# ---------------------------------------------------------------------------
# closed-form order constraints

@dataclass
class OrderReport:
    scheme: str
    checkable: bool
    residuals: dict
    tol: float = 1e-12
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.checkable and all(abs(r) < self.tol for r in self.residuals.values())

    def __str__(self) -> str:
        if not self.checkable:
            return f"{self.scheme}: not checkable in closed form ({self.note})"
        res = ", ".join(f"{k}={v:.2e}" for k, v in self.residuals.items())
        return f"{self.scheme}: {'pass' if self.passed else 'FAIL'} [{res}]"


def _half_coeffs(scheme):
    n = len(scheme.stages)
    half = scheme.stages[: (n + 1) // 2]
    a = [_mpf(s.a) for s in half if s.kind == "A"]
    b = [_mpf(s.b) for s in half if s.kind != "A"]
    c = [_mpf(s.c) for s in half if s.kind != "A"]
    return a, b, c


def validate_order_conditions(scheme: Scheme, tol: float = 1e-12) -> OrderReport:
    """Residuals of the closed-form order constraints for the scheme's family.

    Families with such constraints: 5- and 7-stage velocity, 7- and 9-stage
    position.  Two-branch constraints report the better branch.  Only
    schemes of order at least four are subject to them.
    """
    n, ver = scheme.n_stages, scheme.version
    if scheme.order_p < 4:
        return OrderReport(scheme.name, False, {}, tol, "second-order scheme")
    with mpmath.workdps(MP_DPS):
        a, b, c = _half_coeffs(scheme)
        if n == 5 and ver == "velocity":
            b1, c1, c2 = b[0], c[0], c[1]
            res = {"b1": b1 - mpmath.mpf(1) / 6, "c2": c2 - (mpmath.mpf(1) / 72 - 2 * c1)}
            return OrderReport(scheme.name, True, {k: float(v) for k, v in res.items()}, tol)
        if n == 7 and ver == "velocity":
            a2, b1, c1, c2 = a[0], b[0], c[0], c[1]
            q = a2 * (a2 - 1)
            res = {
                "b1": b1 - (6 + 1 / q) / 12,
                "c1": c1 + (6 + 288 * c2 - 1 / (a2 * (a2 - 1) ** 2)) / 288,
            }
            return OrderReport(scheme.name, True, {k: float(v) for k, v in res.items()}, tol)
        if n == 7 and ver == "position":
            a1, b1, c1, c2 = a[0], b[0], c[0], c[1]
            best = None
            for sgn in (1, -1):
                res = {
                    "a1": a1 - (mpmath.mpf(1) / 2 + sgn / mpmath.sqrt(24 * b1)),
                    "c1": c1 - (1 - 12 * c2 + sgn * mpmath.sqrt(6 * b1) * (1 - b1)) / 24,
                }
                if best is None or max(map(abs, res.values())) < max(map(abs, best.values())):
                    best = res
            return OrderReport(scheme.name, True, {k: float(v) for k, v in best.items()}, tol)
        if n == 9 and ver == "position":
            a1, a2, b1, c1, c2 = a[0], a[1], b[0], c[0], c[1]
            root = mpmath.sqrt(3) * mpmath.sqrt(1 - 24 * a2**2 * b1 + 48 * a2**2 * b1**2)
            best = None
            for sgn in (-1, 1):
                res = {
                    "a1": a1 - (3 - 6 * a2 + 12 * a2 * b1 + sgn * root) / 6,
                    "c2": c2 - (2 - 12 * a2 * b1 + 24 * a2 * b1**2 + sgn * root - 48 * c1) / 48,
                }
                if best is None or max(map(abs, res.values())) < max(map(abs, best.values())):
                    best = res
            return OrderReport(scheme.name, True, {k: float(v) for k, v in best.items()}, tol)
    return OrderReport(scheme.name, False, {}, tol, f"{n}-stage {ver} family")


# ---------------------------------------------------------------------------
# composition

def _merge_seam(stages: list) -> list:
    out = []
    for s in stages:
        if out and out[-1].kind == "A" and s.kind == "A":
            out[-1] = Stage("A", a=out[-1].a + s.a)
        elif out and out[-1].is_momentum and s.is_momentum:
            prev = out[-1]
            if prev.kind == "B" and s.kind == "B":
                out[-1] = Stage("B", b=prev.b + s.b)
            else:
                raise ValueError(
                    f"cannot merge {prev.kind}{s.kind} at a composition seam; "
                    "a force-gradient stage has no single-stage merge"
                )
        else:
            out.append(s)
    return [s for s in out if not (s.kind == "A" and s.a == 0)]


def triple_jump(base: Scheme, k: int = 1) -> Scheme:
    """Symmetric triple-jump composition applied ``k`` times.

    Each level raises the order by two using the weights
    ``w1 = w3 = 1/(2 - 2^(1/(p+1)))`` and ``w2 = 1 - 2 w1``.

    >>> triple_jump(get_scheme("BAB")).letters
    'BABABAB'
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if base.order_p % 2:
        raise ValueError("triple jump needs a symmetric scheme of even order")
    stages = list(base.stages)
    p = base.order_p
    with mpmath.workdps(MP_DPS):
        for _ in range(k):
            w1 = 1 / (2 - mpmath.power(2, mpmath.mpf(1) / (p + 1)))
            w2 = 1 - 2 * w1
            seq = [s.scaled(w) for w in (w1, w2, w1) for s in stages]
            stages = _merge_seam(seq)
            p += 2
    return _from_stages(stages, name=None, order_p=p)


# ---------------------------------------------------------------------------
# export

def catalog_json(schemes=None, indent=None) -> str:
    schemes = catalog() if schemes is None else schemes
    return json.dumps([s.to_dict() for s in schemes], indent=indent, sort_keys=True)


def catalog_csv(schemes=None) -> str:
    schemes = catalog() if schemes is None else schemes
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "letters", "version", "p", "n_f", "err", "eff", "coefficients"])
    for s in schemes:
        coeffs = ";".join(
            f"{st.kind}:" + ",".join(f"{float(v):.17g}" for v in (st.a, st.b, st.c) if v != 0)
            for st in s.stages
        )
        w.writerow([s.name, s.letters, s.version, s.order_p, s.n_f, s.err_leading, s.eff, coeffs])
    return buf.getvalue()


def catalog_checksum() -> str:
    """SHA-256 over the canonical JSON export; identifies a coefficient set."""
    return hashlib.sha256(catalog_json().encode()).hexdigest()
