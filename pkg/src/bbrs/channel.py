"""Exact finite channels, singularity witnesses and product channels."""
from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Mapping

from .exceptions import DomainError, ModelError
from .numerics import as_rational, entropy_bits, entropy_bits_unchecked, format_rational
from .randomness import ExactSampler

MAX_PRODUCT_OUTPUTS = 10**7
MAX_CLOSED_FORM_N = 1 << 20


class DiscreteChannel:
    """Joint law of a finite input ``X`` and output ``Y``.

    Stored as the input pmf ``px`` and sparse rows ``rows[x] = {y: P(y|x)}``
    (positive entries only). Inputs with zero probability and outputs with
    zero marginal are pruned at construction; symbol order is construction
    order. Internally everything is addressed by alphabet index.
    """

    def __init__(self, x_alphabet, y_alphabet, px, rows, name="table", config=None, py=None):
        self.x_alphabet = tuple(x_alphabet)
        self.y_alphabet = tuple(y_alphabet)
        self.px = tuple(px)
        self.rows = tuple(rows)
        self.name = name
        self.config = config
        if py is None:
            acc = [Fraction(0)] * len(self.y_alphabet)
            for p, row in zip(self.px, self.rows):
                for y, q in row.items():
                    acc[y] += p * q
            py = acc
        self.py = tuple(py)
        self._x_lookup = {s: i for i, s in enumerate(self.x_alphabet)}
        self._y_lookup = {s: i for i, s in enumerate(self.y_alphabet)}

    @classmethod
    def from_table(cls, px, pygx, x_alphabet=None, y_alphabet=None, name="table", config=None):
        """Validate, prune and index a channel given as dense or sparse rows."""
        px = [as_rational(p) for p in px]
        if x_alphabet is None:
            x_alphabet = range(len(px))
        x_alphabet = list(x_alphabet)
        if len(x_alphabet) != len(px) or len(pygx) != len(px):
            raise ModelError("input alphabet, px and pygx rows disagree in length")
        rows = []
        for row in pygx:
            if isinstance(row, Mapping):
                rows.append({int(k): as_rational(v) for k, v in row.items()})
            else:
                rows.append({j: as_rational(v) for j, v in enumerate(row)})
        if y_alphabet is None:
            ny = 1 + max((max(r) for r in rows if r), default=-1)
            y_alphabet = range(ny)
        y_alphabet = list(y_alphabet)
        if any(p < 0 for p in px) or sum(px) != 1:
            raise ModelError("px must be a normalized pmf")
        for i, row in enumerate(rows):
            if any(v < 0 or v > 1 for v in row.values()) or sum(row.values()) != 1:
                raise ModelError(f"row {i} of P(y|x) is not a normalized pmf")
            if any(not 0 <= j < len(y_alphabet) for j in row):
                raise ModelError(f"row {i} references an unknown output symbol")
        keep_x = [i for i, p in enumerate(px) if p > 0]
        py = [Fraction(0)] * len(y_alphabet)
        for i in keep_x:
            for j, q in rows[i].items():
                py[j] += px[i] * q
        keep_y = [j for j, p in enumerate(py) if p > 0]
        remap = {j: n for n, j in enumerate(keep_y)}
        new_rows = [{remap[j]: q for j, q in rows[i].items() if q > 0} for i in keep_x]
        return cls(
            [x_alphabet[i] for i in keep_x],
            [y_alphabet[j] for j in keep_y],
            [px[i] for i in keep_x],
            new_rows,
            name=name,
            config=config,
            py=[py[j] for j in keep_y],
        )

    def __repr__(self):
        return f"DiscreteChannel({self.name}, |X|={len(self.x_alphabet)}, |Y|={len(self.y_alphabet)})"

    @property
    def nx(self) -> int:
        return len(self.x_alphabet)

    @property
    def ny(self) -> int:
        return len(self.y_alphabet)

    def x_index(self, symbol) -> int:
        try:
            return self._x_lookup[symbol]
        except KeyError:
            raise DomainError(f"{symbol!r} is not an input symbol of {self.name}") from None

    def y_index(self, symbol) -> int:
        try:
            return self._y_lookup[symbol]
        except KeyError:
            raise DomainError(f"{symbol!r} is not an output symbol of {self.name}") from None

    def cond(self, x: int, y: int) -> Fraction:
        return self.rows[x].get(y, Fraction(0))

    def ratio_idx(self, y: int, x: int) -> Fraction:
        q = self.rows[x].get(y)
        return q / self.py[y] if q else Fraction(0)

    @cached_property
    def columns(self) -> tuple[tuple[tuple[int, Fraction], ...], ...]:
        cols: list[list] = [[] for _ in range(self.ny)]
        for x, row in enumerate(self.rows):
            for y, q in row.items():
                cols[y].append((x, q))
        return tuple(tuple(c) for c in cols)

    @cached_property
    def max_ratio(self) -> tuple[Fraction, ...]:
        """Largest density ratio per input."""
        return tuple(max(q / self.py[y] for y, q in row.items()) for row in self.rows)

    # exact samplers over indices
    @cached_property
    def marginal_sampler(self) -> ExactSampler:
        return ExactSampler(self.py, check=False)

    @cached_property
    def input_sampler(self) -> ExactSampler:
        return ExactSampler(self.px, check=False)

    @cached_property
    def _row_samplers(self) -> tuple[ExactSampler, ...]:
        out = []
        for row in self.rows:
            ys = sorted(row)
            out.append(ExactSampler([row[y] for y in ys], symbols=ys, check=False))
        return tuple(out)

    def sample_marginal(self, source) -> int:
        return self.marginal_sampler.sample(source)

    def sample_input(self, source) -> int:
        return self.input_sampler.sample(source)

    def sample_conditional(self, x: int, source) -> int:
        return self._row_samplers[x].sample(source)

    def to_config(self) -> dict:
        if self.config is not None:
            return self.config
        return {
            "type": "table",
            "px": [format_rational(p) for p in self.px],
            "pygx": [[format_rational(self.cond(x, y)) for y in range(self.ny)] for x in range(self.nx)],
        }


# constructors -----------------------------------------------------------------


def bec(epsilon, px=None) -> DiscreteChannel:
    """Binary erasure channel over outputs (0, 1, 'e'); uniform input by default."""
    eps = as_rational(epsilon)
    if not 0 <= eps <= 1:
        raise ModelError("erasure probability must lie in [0, 1]")
    px = (Fraction(1, 2), Fraction(1, 2)) if px is None else tuple(as_rational(p) for p in px)
    rows = [{0: 1 - eps, 2: eps}, {1: 1 - eps, 2: eps}]
    cfg = {"type": "bec", "epsilon": format_rational(eps)}
    if px != (Fraction(1, 2), Fraction(1, 2)):
        cfg["px"] = [format_rational(p) for p in px]
    return DiscreteChannel.from_table(px, rows, (0, 1), (0, 1, "e"), name=f"bec({eps})", config=cfg)


def typewriter(m: int, w: int) -> DiscreteChannel:
    """Noisy typewriter: ``Y = X + J mod m`` with ``J`` uniform on ``{0..w-1}``."""
    if not 1 <= w <= m:
        raise ModelError("typewriter needs 1 <= w <= m")
    rows = [{(x + j) % m: Fraction(1, w) for j in range(w)} for x in range(m)]
    return DiscreteChannel.from_table(
        [Fraction(1, m)] * m, rows, range(m), range(m),
        name=f"typewriter({m},{w})", config={"type": "typewriter", "m": m, "w": w},
    )


def additive_bounded(m: int, w: int) -> DiscreteChannel:
    """Integer additive uniform channel ``Y = X + U``, ``U`` uniform on ``{-w..w}``."""
    if m < 1 or w < 0:
        raise ModelError("additive channel needs m >= 1 and w >= 0")
    ys = list(range(-w, m + w))
    rows = [{x + u + w: Fraction(1, 2 * w + 1) for u in range(-w, w + 1)} for x in range(m)]
    return DiscreteChannel.from_table(
        [Fraction(1, m)] * m, rows, range(m), ys,
        name=f"additive({m},{w})", config={"type": "additive", "m": m, "w": w},
    )


def product(base: DiscreteChannel, n: int) -> DiscreteChannel:
    """Memoryless product channel ``X^n -> Y^n``; symbols are n-tuples."""
    if n < 1:
        raise ModelError("product needs n >= 1")
    if base.ny**n > MAX_PRODUCT_OUTPUTS:
        raise ModelError(f"|Y|^n = {base.ny ** n} exceeds {MAX_PRODUCT_OUTPUTS}")
    ny = base.ny
    weights = [ny ** (n - 1 - j) for j in range(n)]
    px, rows = [], []
    for xs in itertools.product(range(base.nx), repeat=n):
        p = Fraction(1)
        for x in xs:
            p *= base.px[x]
        px.append(p)
        row = {}
        for combo in itertools.product(*(base.rows[x].items() for x in xs)):
            idx, q = 0, Fraction(1)
            for wgt, (y, qy) in zip(weights, combo):
                idx += wgt * y
                q *= qy
            row[idx] = q
        rows.append(row)
    py = []
    for ys in itertools.product(range(ny), repeat=n):
        p = Fraction(1)
        for y in ys:
            p *= base.py[y]
        py.append(p)
    cfg = {"type": "product", "base": base.to_config(), "n": n}
    return DiscreteChannel(
        list(itertools.product(base.x_alphabet, repeat=n)),
        list(itertools.product(base.y_alphabet, repeat=n)),
        px, rows, name=f"{base.name}^{n}", config=cfg, py=py,
    )


def make_channel(config) -> DiscreteChannel:
    """Build a channel from a JSON-style config dict, JSON string or file path."""
    if isinstance(config, (str, Path)):
        text = str(config)
        if text.lstrip().startswith("{"):
            config = json.loads(text)
        else:
            config = json.loads(Path(config).read_text())
    if not isinstance(config, Mapping) or "type" not in config:
        raise ModelError("channel config must be an object with a 'type' field")
    kind = config["type"]
    try:
        if kind == "bec":
            return bec(config["epsilon"], config.get("px"))
        if kind == "typewriter":
            return typewriter(int(config["m"]), int(config["w"]))
        if kind in ("additive", "additive_bounded"):
            return additive_bounded(int(config["m"]), int(config["w"]))
        if kind == "table":
            return DiscreteChannel.from_table(
                config["px"], config["pygx"], config.get("x_alphabet"), config.get("y_alphabet"),
                config=dict(config),
            )
        if kind == "product":
            return product(make_channel(config["base"]), int(config["n"]))
    except KeyError as exc:
        raise ModelError(f"channel config missing field {exc}") from None
    raise ModelError(f"unknown channel type {kind!r}")


# channel functionals ------------------------------------------------------------


def ratio(ch: DiscreteChannel, y, x) -> Fraction:
    """Exact density ratio P(y|x) / P_Y(y) for symbols ``y`` and ``x``."""
    return ch.ratio_idx(ch.y_index(y), ch.x_index(x))


@dataclass(frozen=True)
class SingularityVerdict:
    singular: bool
    g: tuple[Fraction, ...] | None
    violations: tuple[str, ...] = ()
    y_alphabet: tuple = field(default=(), repr=False)

    def __bool__(self):
        return self.singular

    def g_of(self, y) -> Fraction:
        if self.g is None:
            raise DomainError("channel is not singular")
        return self.g[self.y_alphabet.index(y)]

    def as_dict(self) -> dict:
        return {self.y_alphabet[i]: gi for i, gi in enumerate(self.g)} if self.g else {}


def singular_g(ch: DiscreteChannel) -> SingularityVerdict:
    """Find the witness ``g`` with P(y|x)/P_Y(y) = g(y) on the support, if any."""
    g, violations = [], []
    for y, col in enumerate(ch.columns):
        ratios = {q / ch.py[y] for _, q in col}
        if len(ratios) != 1:
            violations.append(f"y={ch.y_alphabet[y]!r}: on-support ratios differ {sorted(ratios)}")
            g.append(None)
            continue
        gy = ratios.pop()
        g.append(gy)
        if gy < 1:
            violations.append(f"y={ch.y_alphabet[y]!r}: g={gy} < 1")
        reach = sum(ch.px[x] for x, _ in col)
        if gy * reach != 1:
            violations.append(f"y={ch.y_alphabet[y]!r}: g*P_X(support)={gy * reach} != 1")
    singular = not violations
    return SingularityVerdict(singular, tuple(g) if singular else None, tuple(violations), ch.y_alphabet)


def conditional_entropy(ch: DiscreteChannel) -> float:
    return math.fsum(float(p) * entropy_bits(list(row.values())) for p, row in zip(ch.px, ch.rows))


def mutual_information(ch: DiscreteChannel) -> float:
    """I(X;Y) = H(Y) - H(Y|X) in bits."""
    return entropy_bits(ch.py) - conditional_entropy(ch)


# random families used by property tests and the GRS experiments ------------------


def random_singular_channel(rng: random.Random, nx: int = 3, rounds: int = 2, max_den: int = 12) -> DiscreteChannel:
    """Random singular channel.

    Each round partitions the inputs into random blocks and gives every block
    its own output symbol, reached with the round's weight from each member.
    Columns are then constant on their support, which is exactly singularity.
    """
    weights = [Fraction(rng.randint(1, max_den)) for _ in range(rounds)]
    total = sum(weights)
    weights = [w / total for w in weights]
    rows: list[dict[int, Fraction]] = [{} for _ in range(nx)]
    ny = 0
    for w in weights:
        perm = list(range(nx))
        rng.shuffle(perm)
        cuts = sorted(rng.sample(range(1, nx), rng.randint(0, nx - 1))) if nx > 1 else []
        for block in (perm[a:b] for a, b in zip([0, *cuts], [*cuts, nx])):
            for x in block:
                rows[x][ny] = w
            ny += 1
    raw = [Fraction(rng.randint(1, max_den)) for _ in range(nx)]
    px = [r / sum(raw) for r in raw]
    return DiscreteChannel.from_table(px, rows, name="random-singular")


def random_channel(rng: random.Random, nx: int = 4, ny: int = 4, max_den: int = 16) -> DiscreteChannel:
    """Random full-support table channel (generically non-singular)."""
    rows = []
    for _ in range(nx):
        raw = [Fraction(rng.randint(1, max_den)) for _ in range(ny)]
        rows.append([r / sum(raw) for r in raw])
    raw = [Fraction(rng.randint(1, max_den)) for _ in range(nx)]
    return DiscreteChannel.from_table([r / sum(raw) for r in raw], rows, name="random")


# closed-form BEC product -----------------------------------------------------------


@dataclass(frozen=True)
class ClosedFormProduct:
    """n-fold product of bec(epsilon) with uniform input, handled combinatorially.

    The density ratio of an output with ``k`` unerased coordinates is ``2**k``
    and, whatever the input, the unerased count is Binomial(n, 1 - epsilon).
    """

    epsilon: Fraction
    n: int

    def __post_init__(self):
        eps = as_rational(self.epsilon)
        if not 0 <= eps <= 1:
            raise ModelError("erasure probability must lie in [0, 1]")
        if not 1 <= self.n <= MAX_CLOSED_FORM_N:
            raise ModelError(f"n must lie in [1, {MAX_CLOSED_FORM_N}]")
        object.__setattr__(self, "epsilon", eps)

    @cached_property
    def masses(self) -> tuple[Fraction, ...]:
        """P(k unerased coordinates), k = 0..n."""
        n, keep, erase = self.n, 1 - self.epsilon, self.epsilon
        out, c = [], 1
        for k in range(n + 1):
            out.append(c * keep**k * erase ** (n - k))
            c = c * (n - k) // (k + 1)
        return tuple(out)

    def ratio(self, k: int) -> Fraction:
        return Fraction(2) ** k

    @property
    def mutual_information(self) -> float:
        return self.n * float(1 - self.epsilon)

    def level_masses(self, delta=Fraction(1)) -> dict[int, Fraction]:
        """Pushforward of the unerased count onto quantised log-ratio indices."""
        delta = as_rational(delta)
        out: dict[int, Fraction] = {}
        for k, p in enumerate(self.masses):
            if p:
                j = math.floor(k / delta)
                out[j] = out.get(j, Fraction(0)) + p
        return out

    def gamma_entropy(self, delta=Fraction(1)) -> float:
        return max(0.0, entropy_bits_unchecked(self.level_masses(delta).values()))


def bec_product(epsilon, n: int) -> ClosedFormProduct:
    return ClosedFormProduct(as_rational(epsilon), n)


__all__ = [
    "DiscreteChannel", "SingularityVerdict", "ClosedFormProduct", "bec", "typewriter",
    "additive_bounded", "product", "make_channel", "ratio", "singular_g", "mutual_information",
    "conditional_entropy", "bec_product", "random_singular_channel", "random_channel",
]
