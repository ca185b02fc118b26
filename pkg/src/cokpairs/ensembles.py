"""Random symmetric matrix ensembles and fast Sylow classification.

Sampling covers uniform residues mod a, finitely supported balanced entry
distributions, and Erdos-Renyi Laplacians.  Classification of the Sylow
p-part of a cokernel with its pairing works modulo p^(2k) for an exponent
cap k: the pairing of a p-part with exponent p^e is determined by the
matrix entries modulo p^(2e), so every group below the cap is resolved
exactly, and anything at or beyond the cap is flagged CapExceeded rather
than silently truncated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from . import rng
from .errors import UnbalancedDistribution
from .graphs import ERParams, Graph, laplacian, sample_er
from .groups import HOM_BUDGET, FinAbGroup
from .intmat import IntMatrix
from .pairings import (
    PairedGroup,
    PairingGram,
    canonical_pair_class,
    gram_from_scaled_blocks,
)


@dataclass(frozen=True)
class CapExceeded:
    """Classification outcome for a trial the sampling modulus cannot resolve."""

    prime: int
    detail: str


# ---------------------------------------------------------------------------
# p-adic Smith form mod p^(2k)


def _padic_snf(a, nrows, ncols, p, big_k, want_u, want_v):
    """Diagonalize a (list of row lists, entries reduced mod p^big_k) in place.

    Returns (exponents, u, v): u a v = diag(p^e) mod p^big_k with unimodular
    transforms; exponents only for pivots resolved below big_k, ascending.
    Remaining rows and columns are zero mod p^big_k.
    """
    mod = p**big_k
    u = [[int(i == j) for j in range(nrows)] for i in range(nrows)] if want_u else None
    v = [[int(i == j) for j in range(ncols)] for i in range(ncols)] if want_v else None
    exps = []
    t = 0
    limit = min(nrows, ncols)
    while t < limit:
        best_i = best_j = -1
        best_v = big_k
        for i in range(t, nrows):
            row = a[i]
            for j in range(t, ncols):
                x = row[j]
                if x:
                    vv = 0
                    while x % p == 0:
                        x //= p
                        vv += 1
                    if vv < best_v:
                        best_i, best_j, best_v = i, j, vv
                        if vv == 0:
                            break
            if best_v == 0:
                break
        if best_i < 0:
            break
        if best_i != t:
            a[t], a[best_i] = a[best_i], a[t]
            if u is not None:
                u[t], u[best_i] = u[best_i], u[t]
        if best_j != t:
            for row in a:
                row[t], row[best_j] = row[best_j], row[t]
            if v is not None:
                for row in v:
                    row[t], row[best_j] = row[best_j], row[t]

        pk = p**best_v
        unit = a[t][t] // pk
        inv = pow(unit, -1, mod)
        if inv != 1:
            a[t] = [x * inv % mod for x in a[t]]
            if u is not None:
                u[t] = [x * inv % mod for x in u[t]]
        at = a[t]
        for i in range(t + 1, nrows):
            x = a[i][t]
            if x:
                q = x // pk
                ai = a[i]
                a[i] = [(y - q * z) % mod for y, z in zip(ai, at)]
                if u is not None:
                    ut = u[t]
                    ui = u[i]
                    u[i] = [(y - q * z) % mod for y, z in zip(ui, ut)]
        for j in range(t + 1, ncols):
            x = at[j]
            if x:
                q = x // pk
                at[j] = 0
                if v is not None:
                    for row in v:
                        row[j] = (row[j] - q * row[t]) % mod
        exps.append(best_v)
        t += 1
    return exps, u, v


def _reduce_rows(m_rows, mod):
    return [[x % mod for x in row] for row in m_rows]


def sylow_paired_group(
    m_rows: list[list[int]],
    p: int,
    cap: int,
    free_rank: int = 0,
    side: str = "group",
):
    """Sylow p-part of the torsion cokernel with its pairing, mod p^(2*cap).

    m_rows is a square symmetric integer matrix (any sign).  free_rank is
    the known rational kernel dimension (e.g. number of components for a
    graph Laplacian); unresolved diagonal entries beyond it, or resolved
    exponents at or above cap, yield CapExceeded.

    Returns (FinAbGroup, PairingGram) with generators in canonical order
    (exponents descending), or CapExceeded.
    """
    n = len(m_rows)
    big_k = 2 * cap
    mod = p**big_k
    work = _reduce_rows(m_rows, mod)
    orig = _reduce_rows(m_rows, mod)
    want_u = side == "dual"
    exps, u, v = _padic_snf(work, n, n, p, big_k, want_u, not want_u)
    unresolved = n - len(exps)
    if unresolved > free_rank:
        return CapExceeded(p, f"{unresolved} unresolved invariants beyond known free rank {free_rank}")
    over = [e for e in exps if e >= cap]
    if over:
        return CapExceeded(p, f"resolved exponent {max(over)} reaches cap {cap}")

    tor = [(i, e) for i, e in enumerate(exps) if e >= 1]
    if not tor:
        group = FinAbGroup.trivial()
        return group, PairingGram(group, ())
    tor.reverse()  # canonical order: exponents descending
    vecs = []
    for i, _ in tor:
        if want_u:
            vecs.append(u[i])
        else:
            vecs.append([row[i] for row in v])
    mv = [[sum(a * b for a, b in zip(row, vec)) % mod for row in orig] for vec in vecs]
    r = len(tor)
    lam1 = tor[0][1]
    block = []
    for ai in range(r):
        row = []
        for bj in range(r):
            den = p ** (tor[ai][1] + tor[bj][1])
            num = sum(a * b for a, b in zip(vecs[ai], mv[bj])) % den
            # rescale to the common denominator p^lam1; division is exact
            # because the value is killed by both generator orders
            row.append(num * p**lam1 // den)
        block.append(tuple(row))
    lam = tuple(e for _, e in tor)
    group = FinAbGroup.from_prime_types({p: lam})
    gram = gram_from_scaled_blocks(group, {p: tuple(block)})
    return group, gram


def quotient_dual_pairing(pres_rows, sym_rows, p, k):
    """The p-part of a finite quotient tensored with Z/p^k, with the induced
    pairing on its dual.

    pres_rows (h x w) presents the quotient Z^h / col(pres); sym_rows
    (h x h) is the symmetric matrix computing the dual pairing in those
    coordinates.  Exponents are min(e, k), which is exact for the tensor
    (no cap flag needed).  Returns (exponents descending, scaled gram block
    mod p^lam1) or (None, None) for a trivial p-part.
    """
    h = len(pres_rows)
    w = len(pres_rows[0]) if h else 0
    big_k = 2 * k
    mod = p**big_k
    work = _reduce_rows(pres_rows, mod)
    exps, u, _ = _padic_snf(work, h, w, p, big_k, True, False)
    mus = [min(e, k) for e in exps] + [k] * (h - len(exps))
    gens = [(i, mu) for i, mu in enumerate(mus) if mu >= 1]
    if not gens:
        return None, None
    gens.sort(key=lambda t: (-t[1], -t[0]))
    sym = _reduce_rows(sym_rows, mod)
    vecs = [u[i] for i, _ in gens]
    mv = [[sum(a * b for a, b in zip(row, vec)) % mod for row in sym] for vec in vecs]
    r = len(gens)
    lam1 = gens[0][1]
    block = []
    for ai in range(r):
        row = []
        for bj in range(r):
            den = p ** (gens[ai][1] + gens[bj][1])
            num = sum(a * b for a, b in zip(vecs[ai], mv[bj])) % den
            row.append(num * p**lam1 // den)
        block.append(tuple(row))
    return tuple(mu for _, mu in gens), tuple(block)


# ---------------------------------------------------------------------------
# entry distributions and ensemble specs


@dataclass(frozen=True)
class EntryDistribution:
    """Finitely supported integer distribution with exact rational weights."""

    support: tuple[int, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.support) != len(self.weights) or not self.support:
            raise ValueError("support and weights must be nonempty and aligned")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if sum(self.weights, Fraction(0)) != 1:
            raise ValueError("weights must sum to 1")

    def check_balance(self, modulus: int, alpha: Fraction) -> None:
        """Certify: every residue mod every prime of modulus has weight <= 1 - alpha."""
        from .arith import factorint

        for p in factorint(modulus):
            for t in range(p):
                mass = sum((w for s, w in zip(self.support, self.weights) if s % p == t), Fraction(0))
                if mass > 1 - alpha:
                    raise UnbalancedDistribution(
                        f"residue {t} mod {p} carries weight {mass} > 1 - alpha = {1 - alpha}"
                    )

    def sampler(self):
        """Exact cumulative sampler: (common denominator, cumulative numerators)."""
        from .arith import lcm

        den = 1
        for w in self.weights:
            den = lcm(den, w.denominator)
        cum = []
        acc = 0
        for w in self.weights:
            acc += w.numerator * (den // w.denominator)
            cum.append(acc)
        return den, cum

    def draw(self, stream: rng.Stream, den: int, cum: list[int]) -> int:
        r = stream.below(den)
        for val, c in zip(self.support, cum):
            if r < c:
                return val
        return self.support[-1]


KIND_ER = "er_laplacian"
KIND_ALPHA = "alpha_balanced"
KIND_UNIFORM = "uniform_mod_a"


@dataclass(frozen=True)
class EnsembleSpec:
    """A seeded matrix ensemble; serializes to a JSON-compatible dict."""

    kind: str
    n: int
    seed: int
    modulus: int = 0
    q: float = 0.0
    entry_dist: EntryDistribution | None = None
    alpha: Fraction | None = None

    def __post_init__(self):
        if self.kind not in (KIND_ER, KIND_ALPHA, KIND_UNIFORM):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == KIND_UNIFORM and self.modulus < 2:
            raise ValueError("uniform ensemble needs modulus >= 2")
        if self.kind == KIND_ALPHA:
            if self.entry_dist is None or self.alpha is None or self.modulus < 2:
                raise ValueError("alpha-balanced ensemble needs entry_dist, alpha, modulus")
            self.entry_dist.check_balance(self.modulus, self.alpha)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "seed": self.seed}
        if self.kind == KIND_ER:
            out["q"] = self.q
        else:
            out["modulus"] = self.modulus
        if self.entry_dist is not None:
            out["support"] = list(self.entry_dist.support)
            out["weights"] = [str(w) for w in self.entry_dist.weights]
        if self.alpha is not None:
            out["alpha"] = str(self.alpha)
        return out

    @staticmethod
    def from_dict(d: dict) -> "EnsembleSpec":
        dist = None
        if "support" in d:
            dist = EntryDistribution(
                tuple(d["support"]), tuple(Fraction(w) for w in d["weights"])
            )
        return EnsembleSpec(
            kind=d["kind"],
            n=d["n"],
            seed=d["seed"],
            modulus=d.get("modulus", 0),
            q=d.get("q", 0.0),
            entry_dist=dist,
            alpha=Fraction(d["alpha"]) if "alpha" in d else None,
        )


def sample_graph(spec: EnsembleSpec, trial: int) -> Graph:
    if spec.kind != KIND_ER:
        raise ValueError("not a graph ensemble")
    return sample_er(ERParams(spec.n, spec.q, spec.seed), trial)


def sample_symmetric(spec: EnsembleSpec, trial: int) -> IntMatrix:
    """Symmetric matrix draw, deterministic per (spec, trial).

    Upper-triangle entries (diagonal included) are drawn independently in
    row-major order; for er_laplacian the graph Laplacian is returned.
    """
    if spec.kind == KIND_ER:
        return laplacian(sample_graph(spec, trial))
    s = rng.stream(spec.seed, trial)
    n = spec.n
    a = [[0] * n for _ in range(n)]
    if spec.kind == KIND_UNIFORM:
        for i in range(n):
            for j in range(i, n):
                x = s.below(spec.modulus)
                a[i][j] = a[j][i] = x
    else:
        den, cum = spec.entry_dist.sampler()
        for i in range(n):
            for j in range(i, n):
                x = spec.entry_dist.draw(s, den, cum)
                a[i][j] = a[j][i] = x
    return IntMatrix.from_rows(a)


# ---------------------------------------------------------------------------
# classification entry point


def cokernel_pairing_class(
    m: IntMatrix,
    primes,
    exponent_cap: dict[int, int],
    free_rank: int = 0,
    budget: int = HOM_BUDGET,
):
    """Classify the Sylow-P torsion cokernel of symmetric m with its pairing.

    Returns a PairClassId, or CapExceeded when some p-part exponent reaches
    the cap (the sampling modulus cannot resolve it).  free_rank is the
    known rational kernel dimension of m.  BudgetExceeded propagates from
    the classification step.
    """
    if not m.is_symmetric():
        from .errors import NotSymmetric

        raise NotSymmetric("cokernel_pairing_class needs a symmetric matrix")
    rows = [list(r) for r in m.data]
    parts: list[tuple[FinAbGroup, PairingGram]] = []
    for p in sorted(primes):
        res = sylow_paired_group(rows, p, exponent_cap[p], free_rank, side="group")
        if isinstance(res, CapExceeded):
            return res
        parts.append(res)
    group = FinAbGroup.trivial()
    for g, _ in parts:
        group = group.direct_sum(g)
    blocks = {}
    for g, gram in parts:
        for p, _ in g.types:
            blocks[p] = gram.scaled_block(p)
    gram = gram_from_scaled_blocks(group, blocks)
    return canonical_pair_class(PairedGroup(group, gram), budget)


def default_cap(p: int, order_bound: int) -> int:
    """Exponent cap lam1_max + 2 for groups of order <= order_bound."""
    lam1 = 0
    q = p
    while q <= order_bound:
        lam1 += 1
        q *= p
    return lam1 + 2
