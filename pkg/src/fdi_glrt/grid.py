"""Linear measurement model: case files, DC Jacobians, matrix files and
the orthogonal decomposition of attack vectors.

The detectors only ever see ``H`` through its dimensions and column space,
so a measurement matrix can come from a DC case description, from a plain
matrix file, or from a seeded synthetic generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

#: singular values below ``RANK_RTOL * s_max`` count as zero
RANK_RTOL = 1e-10


class GridModelError(ValueError):
    """Base class for problems with a grid description or matrix."""


class CaseParseError(GridModelError):
    """Raised when a case or matrix file does not follow its grammar."""

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class CaseValidationError(GridModelError):
    pass


class RankDeficientError(GridModelError):
    pass


# ---------------------------------------------------------------------------
# case description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bus:
    id: int
    is_slack: bool = False


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    reactance: float


@dataclass(frozen=True)
class GridCase:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        self.validate()

    def validate(self) -> None:
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise CaseValidationError(f"duplicate bus id(s): {dup}")
        slack = [b.id for b in self.buses if b.is_slack]
        if len(slack) == 0:
            raise CaseValidationError("no slack bus")
        if len(slack) > 1:
            raise CaseValidationError(f"more than one slack bus: {slack}")
        known = set(ids)
        for k, br in enumerate(self.branches):
            if br.from_bus not in known or br.to_bus not in known:
                raise CaseValidationError(
                    f"branch {k} references unknown bus ({br.from_bus}, {br.to_bus})")
            if br.from_bus == br.to_bus:
                raise CaseValidationError(f"branch {k} is a self loop")
            if not br.reactance > 0:
                raise CaseValidationError(
                    f"nonpositive reactance {br.reactance} on branch {k}")
        # connectivity by flood fill
        adj: dict[int, set[int]] = {i: set() for i in ids}
        for br in self.branches:
            adj[br.from_bus].add(br.to_bus)
            adj[br.to_bus].add(br.from_bus)
        seen = {ids[0]}
        stack = [ids[0]]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if seen != known:
            raise CaseValidationError(
                f"disconnected graph: buses {sorted(known - seen)} unreachable")

    @property
    def slack(self) -> int:
        return next(b.id for b in self.buses if b.is_slack)

    @property
    def state_buses(self) -> list[int]:
        """Non-slack bus ids in file order; one state (angle) per bus."""
        return [b.id for b in self.buses if not b.is_slack]


def _parse_number(tok: str, kind, lineno: int, col: int, what: str):
    try:
        return kind(tok)
    except ValueError:
        raise CaseParseError(f"expected {what}, got {tok!r}", lineno, col) from None


def _tokens(line: str):
    """Yield (column, token) pairs, columns 1-based."""
    pos = 0
    for tok in line.split():
        pos = line.index(tok, pos)
        yield pos + 1, tok
        pos += len(tok)


def parse_case(text: str) -> GridCase:
    """Parse a case file.

    Grammar (one record per line, ``#`` starts a comment)::

        bus <id> [slack]
        branch <from> <to> <reactance>
    """
    buses: list[Bus] = []
    branches: list[Branch] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = list(_tokens(line))
        if not toks:
            continue
        (col0, kw), rest = toks[0], toks[1:]
        if kw == "bus":
            if len(rest) not in (1, 2):
                raise CaseParseError("bus takes <id> [slack]", lineno, col0)
            bid = _parse_number(rest[0][1], int, lineno, rest[0][0], "integer bus id")
            slack = False
            if len(rest) == 2:
                if rest[1][1] != "slack":
                    raise CaseParseError(
                        f"expected 'slack', got {rest[1][1]!r}", lineno, rest[1][0])
                slack = True
            buses.append(Bus(bid, slack))
        elif kw == "branch":
            if len(rest) != 3:
                raise CaseParseError("branch takes <from> <to> <reactance>", lineno, col0)
            f = _parse_number(rest[0][1], int, lineno, rest[0][0], "integer bus id")
            t = _parse_number(rest[1][1], int, lineno, rest[1][0], "integer bus id")
            x = _parse_number(rest[2][1], float, lineno, rest[2][0], "reactance")
            branches.append(Branch(f, t, x))
        else:
            raise CaseParseError(f"unknown record {kw!r}", lineno, col0)
    return GridCase(tuple(buses), tuple(branches))


# ---------------------------------------------------------------------------
# meter plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowMeter:
    """Active power flow on ``branch`` (index into ``GridCase.branches``).

    ``reverse=False`` measures from -> to, ``reverse=True`` to -> from.
    """

    branch: int
    reverse: bool = False


@dataclass(frozen=True)
class InjectionMeter:
    bus: int


Meter = Union[FlowMeter, InjectionMeter]


@dataclass(frozen=True)
class MeterPlan:
    entries: tuple[Meter, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise CaseValidationError("empty meter plan")

    def __len__(self):
        return len(self.entries)

    @classmethod
    def full(cls, case: GridCase) -> "MeterPlan":
        """Both flow directions on every branch plus every bus injection."""
        entries: list[Meter] = []
        for k in range(len(case.branches)):
            entries += [FlowMeter(k), FlowMeter(k, reverse=True)]
        entries += [InjectionMeter(b.id) for b in case.buses]
        return cls(tuple(entries))


# ---------------------------------------------------------------------------
# measurement matrix
# ---------------------------------------------------------------------------


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_full_column_rank(H: np.ndarray, s: np.ndarray) -> None:
    K = H.shape[1]
    if K == 0 or s.size < K or s[0] == 0:
        raise RankDeficientError(f"H has rank 0 (shape {H.shape})")
    rank = int(np.sum(s > RANK_RTOL * s[0]))
    if rank < K:
        raise RankDeficientError(f"H is rank deficient: rank {rank} < K = {K}")


def orthogonal_complement(H) -> np.ndarray:
    """Orthonormal basis ``B`` (M x (M-K)) of the orthogonal complement of
    the column space of ``H``, so that ``B.T @ H = 0`` and ``B.T @ B = I``.

    The basis is not canonical; every consumer uses it only through
    ``B @ B.T``, which is.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2:
        raise ValueError(f"H must be 2-D, got shape {H.shape}")
    U, s, _ = np.linalg.svd(H, full_matrices=True)
    _check_full_column_rank(H, s)
    return U[:, H.shape[1]:].copy()


@dataclass(frozen=True)
class MeasurementMatrix:
    """Jacobian ``H`` (M x K, M > K, full column rank) and its complement ``B``."""

    H: np.ndarray
    B: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "H", _frozen(self.H))
        object.__setattr__(self, "B", _frozen(self.B))

    @classmethod
    def from_H(cls, H) -> "MeasurementMatrix":
        H = np.asarray(H, dtype=float)
        if H.ndim != 2:
            raise ValueError(f"H must be 2-D, got shape {H.shape}")
        M, K = H.shape
        if M <= K:
            raise GridModelError(f"M <= K is violated: H is {M} x {K}")
        if not np.all(np.isfinite(H)):
            raise GridModelError("H has non-finite entries")
        mm = cls(H, orthogonal_complement(H))
        mm.check()
        return mm

    @property
    def M(self) -> int:
        return self.H.shape[0]

    @property
    def K(self) -> int:
        return self.H.shape[1]

    @property
    def dof(self) -> int:
        return self.M - self.K

    def check(self, atol: float = 1e-10) -> None:
        BtH = self.B.T @ self.H
        # scale the annihilation check with H so large entries are not penalized
        scale = max(1.0, float(np.abs(self.H).max()))
        if np.abs(BtH).max(initial=0.0) > atol * scale:
            raise GridModelError("B^T H is not zero")
        if np.abs(self.B.T @ self.B - np.eye(self.dof)).max(initial=0.0) > atol:
            raise GridModelError("B is not orthonormal")

    @cached_property
    def pinv(self) -> np.ndarray:
        """``(H^T H)^-1 H^T``."""
        p = np.linalg.pinv(self.H)
        p.setflags(write=False)
        return p

    def projector(self) -> np.ndarray:
        """Dense residual projector ``I - H (H^T H)^-1 H^T``."""
        H = self.H
        return np.eye(self.M) - H @ np.linalg.solve(H.T @ H, H.T)


def build_dc_jacobian(case: GridCase, plan: MeterPlan) -> MeasurementMatrix:
    """DC measurement Jacobian with the slack angle fixed at zero.

    Flow ``i -> j`` on a branch of reactance ``x`` reads ``(th_i - th_j)/x``;
    an injection is the sum of the flows leaving the bus.
    """
    col = {bid: k for k, bid in enumerate(case.state_buses)}
    nbus = len(case.buses)
    full_col = {b.id: k for k, b in enumerate(case.buses)}

    def flow_row(k: int, reverse: bool) -> np.ndarray:
        br = case.branches[k]
        f, t = (br.to_bus, br.from_bus) if reverse else (br.from_bus, br.to_bus)
        row = np.zeros(nbus)
        row[full_col[f]] += 1.0 / br.reactance
        row[full_col[t]] -= 1.0 / br.reactance
        return row

    rows = []
    bus_ids = {b.id for b in case.buses}
    for m in plan.entries:
        if isinstance(m, FlowMeter):
            if not 0 <= m.branch < len(case.branches):
                raise CaseValidationError(f"meter references unknown branch {m.branch}")
            rows.append(flow_row(m.branch, m.reverse))
        elif isinstance(m, InjectionMeter):
            if m.bus not in bus_ids:
                raise CaseValidationError(f"meter references unknown bus {m.bus}")
            row = np.zeros(nbus)
            for k, br in enumerate(case.branches):
                if br.from_bus == m.bus:
                    row += flow_row(k, False)
                elif br.to_bus == m.bus:
                    row += flow_row(k, True)
            rows.append(row)
        else:
            raise TypeError(f"unknown meter type {type(m).__name__}")
    Hfull = np.array(rows)
    keep = [full_col[bid] for bid in col]
    H = Hfull[:, keep]
    if H.shape[0] <= H.shape[1]:
        raise GridModelError(f"M <= K is violated: {H.shape[0]} meters for {H.shape[1]} states")
    return MeasurementMatrix.from_H(H)


# ---------------------------------------------------------------------------
# matrix files
# ---------------------------------------------------------------------------


def load_matrix(text: str) -> MeasurementMatrix:
    """Read a matrix file: ``<M> <K>`` header, then M rows of K numbers."""
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise CaseParseError("empty matrix file", 1)
    hdr_no, hdr = lines[0]
    parts = hdr.split()
    if len(parts) != 2:
        raise CaseParseError("header must be '<M> <K>'", hdr_no)
    M = _parse_number(parts[0], int, hdr_no, 1, "row count")
    K = _parse_number(parts[1], int, hdr_no, 1, "column count")
    body = lines[1:]
    if len(body) != M:
        raise GridModelError(f"dimension mismatch: header says {M} rows, found {len(body)}")
    H = np.empty((M, K))
    for r, (lineno, ln) in enumerate(body):
        toks = list(_tokens(ln))
        if len(toks) != K:
            raise GridModelError(
                f"dimension mismatch on line {lineno}: expected {K} values, found {len(toks)}")
        for c, (col, tok) in enumerate(toks):
            H[r, c] = _parse_number(tok, float, lineno, col, "number")
    return MeasurementMatrix.from_H(H)


def format_matrix(H) -> str:
    """Inverse of :func:`load_matrix`; 17 significant digits round-trip exactly."""
    H = np.asarray(H, dtype=float)
    out = [f"{H.shape[0]} {H.shape[1]}"]
    out += [" ".join(f"{v:.17g}" for v in row) for row in H]
    return "\n".join(out) + "\n"


def synthetic_matrix(m: int, k: int, seed: int) -> np.ndarray:
    """Seeded standard-normal ``m x k`` matrix, checked for full column rank."""
    if not (m > k >= 1):
        raise GridModelError(f"need M > K >= 1, got M={m}, K={k}")
    H = np.random.default_rng(seed).standard_normal((m, k))
    _check_full_column_rank(H, np.linalg.svd(H, compute_uv=False))
    return H


# ---------------------------------------------------------------------------
# attack decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttackDecomposition:
    theta_a: np.ndarray
    theta_b: np.ndarray
    a_norm: float = 0.0

    def is_unobservable(self, tol: float = 1e-9) -> bool:
        """True when ``theta_b`` vanishes relative to ``1 + |a|``."""
        return float(np.abs(self.theta_b).max(initial=0.0)) <= tol * (1.0 + self.a_norm)

    def reassemble(self, mm: MeasurementMatrix) -> np.ndarray:
        return mm.H @ self.theta_a + mm.B @ self.theta_b


def decompose_attack(mm: MeasurementMatrix, a: Sequence[float]) -> AttackDecomposition:
    """Split ``a = H theta_a + B theta_b``."""
    a = np.asarray(a, dtype=float)
    if a.shape != (mm.M,):
        raise ValueError(f"attack must have length {mm.M}, got shape {a.shape}")
    theta_a = np.linalg.lstsq(mm.H, a, rcond=None)[0]
    return AttackDecomposition(theta_a, mm.B.T @ a, float(np.linalg.norm(a)))


def bundled_matrix() -> MeasurementMatrix:
    """The shipped 284 x 60 synthetic matrix (``synthetic_matrix(284, 60, 1)``)."""
    from importlib.resources import files

    return load_matrix(files("fdi_glrt.data").joinpath("synthetic_284x60.txt").read_text())
