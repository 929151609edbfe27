"""Truncated-Fock numerical treatment of the rotated Hamiltonian.

The rotated Hamiltonian on a finite chain is

    H = sum_j omega n_j - xi sum_j (a_j^+ a_{j+1} + h.c.)
        + (Omega/2) [cosh(2X) sigma_z + i sinh(2X) sigma_y],   X = sum_j alpha_j (a_j^+ - a_j)

kept in full (counter-rotating content included) inside the space of
occupation vectors with ``sum_j n_j + [e] <= cp``.  Its matrix elements are
``<s,m|H|s',n> = (Omega/2) (+1 if s = e else -1) P_mn`` with
``P_mn = prod_j <m_j|D(2 alpha_j)|n_j>``; the parity of ``N + [e]`` is conserved.

Scattering uses the odd sector: one photon on top of the local dressed ground
state forms the open channel, everything else is closed and terminated by hard
walls at the chain ends.
"""
from __future__ import annotations

import itertools
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as spla

from .model import ModelParams, ParameterError, band_info
from .polaron import (PolaronAmplitudes, overlap_table, solve_alpha_closed,
                      solve_alpha_recursion)
from .scattering import ScatteringAmplitudes, ScatteringError, check_momentum

DEFAULT_CHAIN_LENGTH = 41
#: Sparse entries below this (times omega) are dropped.
DROP_TOL = 1e-14
#: Sites whose coupling scale Omega * 2|alpha_j| is below this (times omega) act as identity.
WINDOW_TOL = 1e-16
#: Closed-channel amplitude at the chain ends above which a warning is issued.
END_AMPLITUDE_TOL = 1e-6


class ChainTooShortWarning(UserWarning):
    """Closed-channel amplitude reaches the chain ends."""


@dataclass(frozen=True, eq=False)
class TruncatedFockSpace:
    """Occupation basis with ``sum_j n_j + [e] <= cp`` and ``n_j <= per_site_cutoff``.

    ``parity`` keeps only states with ``(N + [e]) % 2 == parity`` when given.
    States are ordered by total excitation, then TLS flag, then the sorted
    multiset of photon sites.
    """

    chain_length: int
    per_site_cutoff: int
    cp: int
    parity: int | None
    occupations: np.ndarray
    excited: np.ndarray
    _index: dict = field(repr=False)

    @classmethod
    def build(cls, chain_length: int, cp: int, per_site_cutoff: int | None = None,
              parity: int | None = None) -> "TruncatedFockSpace":
        if chain_length < 1 or chain_length % 2 == 0:
            raise ParameterError(f"chain length must be odd and positive, got {chain_length}")
        if cp < 0:
            raise ParameterError(f"excitation cutoff must be >= 0, got {cp}")
        if parity not in (None, 0, 1):
            raise ParameterError(f"parity must be None, 0 or 1, got {parity}")
        cut = cp if per_site_cutoff is None else per_site_cutoff
        if cut < 0:
            raise ParameterError(f"per-site cutoff must be >= 0, got {cut}")
        L = chain_length
        occs, flags = [], []
        for total in range(cp + 1):
            if parity is not None and total % 2 != parity:
                continue
            for e in (0, 1):
                n = total - e
                if n < 0:
                    continue
                for combo in itertools.combinations_with_replacement(range(L), n):
                    occ = np.bincount(np.asarray(combo, dtype=np.intp), minlength=L)
                    if occ.size and occ.max(initial=0) > cut:
                        continue
                    occs.append(occ)
                    flags.append(e)
        occupations = np.array(occs, dtype=np.int8).reshape(len(occs), L)
        excited = np.array(flags, dtype=bool)
        index = {(row.tobytes(), bool(e)): i for i, (row, e) in enumerate(zip(occupations, excited))}
        return cls(L, cut, cp, parity, occupations, excited, index)

    @property
    def dimension(self) -> int:
        return len(self.excited)

    @property
    def half_length(self) -> int:
        return (self.chain_length - 1) // 2

    @property
    def sites(self) -> np.ndarray:
        h = self.half_length
        return np.arange(-h, h + 1)

    @property
    def photon_numbers(self) -> np.ndarray:
        return self.occupations.sum(axis=1, dtype=np.int64)

    def index_of(self, occupation, excited: bool) -> int:
        """Basis index of an occupation vector; ``KeyError`` if outside the space."""
        occ = np.asarray(occupation, dtype=np.int8)
        return self._index[(occ.tobytes(), bool(excited))]

    def lookup(self, occupation, excited: bool):
        occ = np.asarray(occupation, dtype=np.int8)
        return self._index.get((occ.tobytes(), bool(excited)))

    def state(self, i: int):
        return tuple(int(n) for n in self.occupations[i]), bool(self.excited[i])


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Real symmetric matrix stored as unique ``(row, col, value)`` triplets (both triangles)."""

    dimension: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def to_csr(self) -> sparse.csr_matrix:
        return sparse.csr_matrix((self.values, (self.rows, self.cols)),
                                 shape=(self.dimension, self.dimension))

    def is_symmetric(self) -> bool:
        m = self.to_csr()
        return (m - m.T).count_nonzero() == 0

    @property
    def nnz(self) -> int:
        return len(self.values)

    def dump(self, path) -> None:
        """Write ``row col value`` triplets, one per line, 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# dimension {self.dimension}\n")
            for r, c, v in zip(self.rows, self.cols, self.values):
                fh.write(f"{r} {c} {v:.17g}\n")


def _hopping_triplets(params: ModelParams, space: TruncatedFockSpace):
    rows, cols, vals = [], [], []
    occ = space.occupations
    for j in range(space.chain_length - 1):
        # move one photon from j to j+1; the reverse is added by symmetry
        src = np.nonzero(occ[:, j] > 0)[0]
        for i in src:
            new = occ[i].copy()
            nj, nk = int(new[j]), int(new[j + 1])
            new[j] -= 1
            new[j + 1] += 1
            target = space.lookup(new, space.excited[i])
            if target is None:
                continue
            v = -params.xi * math.sqrt(nj * (nk + 1))
            rows += [target, i]
            cols += [i, target]
            vals += [v, v]
    return rows, cols, vals


def _window(params: ModelParams, pa: PolaronAmplitudes, space: TruncatedFockSpace) -> np.ndarray:
    alphas = pa.on_sites(space.sites)
    keep = np.abs(params.Omega * 2.0 * alphas) > WINDOW_TOL * params.omega
    return np.nonzero(keep)[0]


def _tls_triplets(params: ModelParams, pa: PolaronAmplitudes, space: TruncatedFockSpace):
    half = 0.5 * params.Omega
    if half == 0.0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    alphas = pa.on_sites(space.sites)
    win = _window(params, pa, space)
    outside = np.ones(space.chain_length, dtype=bool)
    outside[win] = False
    tables = [overlap_table(space.per_site_cutoff, 2.0 * alphas[j]) for j in win]
    groups = defaultdict(list)
    for i, row in enumerate(space.occupations[:, outside]):
        groups[row.tobytes()].append(i)
    sign = np.where(space.excited, half, -half)
    parity = (space.photon_numbers + space.excited) % 2
    rows, cols, vals = [], [], []
    for members in groups.values():
        idx = np.asarray(members)
        sub = space.occupations[np.ix_(idx, win)].astype(np.intp)
        P = np.ones((len(idx), len(idx)))
        for col, table in enumerate(tables):
            m = sub[:, col]
            if not m.any():
                P *= table[0, 0]
                continue
            P *= table[m[:, None], m[None, :]]
        P *= sign[idx][:, None]
        # the rotated splitting conserves the parity of N + [e]
        P[parity[idx][:, None] != parity[idx][None, :]] = 0.0
        r, c = np.nonzero(np.abs(P) >= DROP_TOL * params.omega)
        rows.append(idx[r])
        cols.append(idx[c])
        vals.append(P[r, c])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def build_rotated_hamiltonian(params: ModelParams, pa: PolaronAmplitudes,
                              space: TruncatedFockSpace) -> SparseOperator:
    """Rotated Hamiltonian restricted to ``space`` (constant energy offset dropped)."""
    params.require_single_tls("build_rotated_hamiltonian")
    if tuple(pa.tls_sites) != tuple(params.tls_sites):
        raise ParameterError("amplitudes and parameters refer to different TLS sites")
    if space.occupations.shape[1] != space.chain_length:
        raise ParameterError("occupation table does not match the chain length")
    n = space.dimension
    diag = params.omega * space.photon_numbers.astype(float)
    hr, hc, hv = _hopping_triplets(params, space)
    tr, tc, tv = _tls_triplets(params, pa, space)
    rows = np.concatenate([np.arange(n), np.asarray(hr, dtype=np.int64), tr])
    cols = np.concatenate([np.arange(n), np.asarray(hc, dtype=np.int64), tc])
    vals = np.concatenate([diag, np.asarray(hv, dtype=float), tv])
    m = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.data[np.abs(m.data) < DROP_TOL * params.omega] = 0.0
    m.eliminate_zeros()
    coo = m.tocoo()
    return SparseOperator(n, coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data.copy())


def _lowest(h: sparse.csr_matrix):
    if h.shape[0] <= 2000:
        w, v = linalg.eigh(h.toarray(), subset_by_index=[0, 0])
        return float(w[0]), v[:, 0]
    w, v = spla.eigsh(h, k=1, which="SA", tol=1e-13)
    return float(w[0]), v[:, 0]


class NumericScatterer:
    """Scattering solver for one parameter set and cutoff; reusable over momenta.

    Parameters
    ----------
    params : ModelParams
        Single TLS; ``xi > 0``.
    cp : int
        Total-excitation cutoff; 2 and 3 are the standard choices, larger
        values serve convergence studies.
    chain_length : int
        Odd number of sites ``L``.
    per_site_cutoff : int, optional
        Defaults to ``cp``.
    """

    def __init__(self, params: ModelParams, cp: int, chain_length: int = DEFAULT_CHAIN_LENGTH,
                 per_site_cutoff: int | None = None):
        params.require_single_tls("numeric scattering")
        if cp < 1:
            raise ParameterError(f"cp must be >= 1, got {cp}")
        if not params.xi > 0:
            raise ParameterError(f"numeric scattering needs xi > 0, got {params.xi}")
        self.params, self.cp = params, cp
        self.pa = solve_alpha_closed(params)
        self.space = TruncatedFockSpace.build(chain_length, cp, per_site_cutoff, parity=1)
        h = self.space.half_length
        edge = max(abs(self.pa.alpha(params.tls_sites[0] - h)), abs(self.pa.alpha(params.tls_sites[0] + h)))
        if edge > 1e-10:
            raise ParameterError(f"chain length {chain_length} too short: |alpha| at the ends is {edge:.2g}")
        ground_space = TruncatedFockSpace.build(chain_length, cp - 1, per_site_cutoff, parity=0)
        hg = build_rotated_hamiltonian(params, self.pa, ground_space).to_csr()
        self.ground_energy, phi = _lowest(hg)
        self.hamiltonian = build_rotated_hamiltonian(params, self.pa, self.space).to_csr()
        self.lead = {s: self._lead_vector(ground_space, phi, s) for s in (-h, h)}
        self._end_masks = {s: self.space.occupations[:, s + h] > 0 for s in (-h, h)}

    def _lead_vector(self, ground_space, phi, site):
        v = np.zeros(self.space.dimension)
        col = site + self.space.half_length
        for i, amp in enumerate(phi):
            if amp == 0.0:
                continue
            occ = ground_space.occupations[i].copy()
            n = int(occ[col])
            occ[col] += 1
            target = self.space.lookup(occ, ground_space.excited[i])
            if target is not None:
                v[target] += amp * math.sqrt(n + 1)
        return v / np.linalg.norm(v)

    def energy(self, k: float) -> float:
        """Total energy of the incoming state (dressed ground plus one photon)."""
        return self.ground_energy + self.params.omega - 2.0 * self.params.xi * math.cos(k)

    def green_elements(self, E: float):
        """``g[a, b] = v_a^T (E - H)^{-1} v_b`` for the lead vectors (left, right).

        Returns ``(g, Y)`` with ``Y = (E - H)^{-1} [v_l, v_r]``, or ``None``
        when ``E`` sits on a level of the hard-wall chain.
        """
        n = self.space.dimension
        B = (sparse.identity(n, format="csc") * E - self.hamiltonian).tocsc()
        V = np.column_stack([self.lead[-self.space.half_length], self.lead[self.space.half_length]])
        try:
            lu = spla.splu(B, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        except RuntimeError:
            return None
        Y = lu.solve(V)
        resid = np.linalg.norm(B @ Y - V) / np.linalg.norm(V)
        if not np.isfinite(resid) or resid > 1e-10:
            return None
        return V.T @ Y, Y

    def _bordered(self, k: float):
        # direct solve of the matched system; always regular away from bound states
        xi = self.params.xi
        h = self.space.half_length
        n = self.space.dimension
        vl, vr = self.lead[-h], self.lead[h]
        po, pi = np.exp(1j * k * (h + 1)), np.exp(1j * k * h)
        block = (sparse.identity(n, format="csc") * self.energy(k) - self.hamiltonian).astype(complex)
        cols = sparse.csc_matrix(np.column_stack([xi * po * vl, xi * po * vr]))
        rows = sparse.csc_matrix(np.vstack([vl, vr]).astype(complex))
        corner = sparse.csc_matrix(np.diag([-pi, -pi]))
        A = sparse.bmat([[block, cols], [rows, corner]], format="csc")
        b = np.zeros(n + 2, dtype=complex)
        b[:n] = -xi * np.conj(po) * vl
        b[n] = np.conj(pi)
        try:
            x = spla.splu(A, permc_spec="MMD_AT_PLUS_A").solve(b)
        except RuntimeError as exc:
            raise ScatteringError(f"singular numeric scattering system at k={k:.6g}: {exc}") from exc
        resid = np.linalg.norm(A @ x - b) / np.linalg.norm(b)
        if not np.isfinite(resid) or resid > 1e-8:
            raise ScatteringError(f"near-singular numeric scattering system at k={k:.6g} "
                                  f"(relative residual {resid:.2g})")
        return x[n], x[n + 1], x[:n]

    def solve(self, k: float) -> ScatteringAmplitudes:
        check_momentum(k)
        xi = self.params.xi
        h = self.space.half_length
        green = self.green_elements(self.energy(k))
        if green is None:
            r, t, c = self._bordered(k)
        else:
            g, Y = green
            # c = -xi [(e^{-ik(h+1)} + r e^{ik(h+1)}) Y_l + t e^{ik(h+1)} Y_r]; match v_l.c, v_r.c
            po, pi = np.exp(1j * k * (h + 1)), np.exp(1j * k * h)
            A = np.array([[-xi * po * g[0, 0] - pi, -xi * po * g[0, 1]],
                          [-xi * po * g[1, 0], -xi * po * g[1, 1] - pi]])
            b = np.array([np.conj(pi) + xi * np.conj(po) * g[0, 0], xi * np.conj(po) * g[1, 0]])
            r, t = np.linalg.solve(A, b)
            c = -xi * ((np.conj(po) + r * po) * Y[:, 0] + t * po * Y[:, 1])
        for s, v in self.lead.items():
            mask = self._end_masks[s]
            closed = np.linalg.norm((c - v * (v @ c))[mask])
            if closed > END_AMPLITUDE_TOL:
                warnings.warn(f"closed-channel amplitude {closed:.2g} at chain end {s}; "
                              "increase the chain length", ChainTooShortWarning, stacklevel=2)
        return ScatteringAmplitudes.make(k, r, t, f"numeric-cp{self.cp}")


def scattering_numeric(params: ModelParams, k: float, L: int = DEFAULT_CHAIN_LENGTH,
                       cp: int = 2) -> ScatteringAmplitudes:
    """One-shot numeric amplitudes; use :class:`NumericScatterer` for many momenta."""
    return NumericScatterer(params, cp=cp, chain_length=L).solve(k)


@dataclass(frozen=True)
class IntrabandCheck:
    """Largest ``|<Psi_-,n|H|Psi_+,n'>|`` for ``N(n) = N(n')`` and ``N(n') = N(n) + 1``."""

    same_band_max: float
    adjacent_band_max: float


def intraband_selection_check(params: ModelParams, n_sites: int = 3, max_photons: int = 2,
                              fock_cutoff: int | None = None) -> IntrabandCheck:
    """Brute-force check that the rotated frame has no same-band ``+/-`` couplings.

    The states ``|Psi_{+,n}> = U|e, n>`` and ``|Psi_{-,n}> = U|g, n>`` use
    normal-mode occupations ``n`` of the open ``n_sites`` chain with total
    photon number ``<= max_photons``.  ``U`` is formed from per-site matrix
    exponentials of the displacement generators in a truncated Fock space.
    """
    params.require_single_tls("intraband_selection_check")
    if n_sites % 2 == 0:
        raise ParameterError("n_sites must be odd")
    half = n_sites // 2
    # alpha of the finite open chain: cut-off recursion with alpha_{+-(half+1)} = 0
    alphas = solve_alpha_recursion(params.replace(tls_sites=(0,)), half + 1).alphas
    if fock_cutoff is None:
        fock_cutoff = int(30 + 4 * np.max(np.abs(alphas)) ** 2 + 4 * max_photons)
    nc = fock_cutoff
    a = np.diag(np.sqrt(np.arange(1, nc)), 1)
    num = np.diag(np.arange(nc, dtype=float))
    disp = [linalg.expm(al * (a.T - a)) for al in alphas]

    def apply(op, psi, site):
        # psi has shape (2,) + (nc,) * n_sites; op acts on mode `site`
        return np.moveaxis(np.tensordot(op, psi, axes=([1], [site + 1])), 0, site + 1)

    def hamiltonian(psi):
        out = np.zeros_like(psi)
        for j in range(n_sites):
            out += params.omega * apply(num, psi, j)
        for j in range(n_sites - 1):
            out -= params.xi * (apply(a.T, apply(a, psi, j + 1), j) + apply(a.T, apply(a, psi, j), j + 1))
        sz = psi.copy()
        sz[1] *= -1.0          # index 0 = e, 1 = g
        out += 0.5 * params.Omega * sz
        x = apply(a + a.T, psi, half)
        out += params.lam * x[::-1]
        return out

    def rotate(psi):
        # U = |+><+| D(alpha) + |-><-| D(-alpha) in the sigma_x eigenbasis
        plus = (psi[0] + psi[1]) / math.sqrt(2.0)
        minus = (psi[0] - psi[1]) / math.sqrt(2.0)
        for j in range(n_sites):
            plus = np.moveaxis(np.tensordot(disp[j], plus, axes=([1], [j])), 0, j)
            minus = np.moveaxis(np.tensordot(disp[j].T, minus, axes=([1], [j])), 0, j)
        return np.stack([(plus + minus) / math.sqrt(2.0), (plus - minus) / math.sqrt(2.0)])

    # normal modes of the free open chain
    hop = -params.xi * (np.eye(n_sites, k=1) + np.eye(n_sites, k=-1))
    _, modes = np.linalg.eigh(hop)
    vac = np.zeros((nc,) * n_sites)
    vac[(0,) * n_sites] = 1.0
    states = []
    for occ in itertools.product(range(max_photons + 1), repeat=n_sites):
        if sum(occ) > max_photons:
            continue
        psi = vac
        for m, count in enumerate(occ):
            for _ in range(count):
                psi = sum(modes[j, m] * np.moveaxis(np.tensordot(a.T, psi, axes=([1], [j])), 0, j)
                          for j in range(n_sites))
            psi = psi / math.sqrt(math.factorial(count))
        states.append((sum(occ), psi))

    plus, minus = [], []
    for N, psi in states:
        e_state = np.stack([psi, np.zeros_like(psi)])
        g_state = np.stack([np.zeros_like(psi), psi])
        plus.append((N, rotate(e_state)))
        minus.append((N, rotate(g_state)))
    h_plus = [(N, hamiltonian(v)) for N, v in plus]
    same = adjacent = 0.0
    for Nm, vm in minus:
        for Np, hv in h_plus:
            val = abs(float(np.vdot(vm, hv)))
            if Np == Nm:
                same = max(same, val)
            elif Np == Nm + 1:
                adjacent = max(adjacent, val)
    return IntrabandCheck(same_band_max=same, adjacent_band_max=adjacent)


@dataclass(frozen=True)
class SpectrumLevel:
    energy: float
    location: str   # "below", "in-band" or "above" the one-photon band


def bound_state_spectrum(params: ModelParams, space: TruncatedFockSpace,
                         n_levels: int = 8) -> list[SpectrumLevel]:
    """Lowest odd-sector levels relative to the dressed ground energy.

    The ground energy is the lowest even-sector level at budget ``cp - 1``.
    Levels are classified against the one-photon band ``omega +- 2|xi|``.
    """
    params.require_single_tls("bound_state_spectrum")
    pa = solve_alpha_closed(params)
    odd = space if space.parity == 1 else TruncatedFockSpace.build(
        space.chain_length, space.cp, space.per_site_cutoff, parity=1)
    even = TruncatedFockSpace.build(space.chain_length, max(space.cp - 1, 0),
                                    space.per_site_cutoff, parity=0)
    e0, _ = _lowest(build_rotated_hamiltonian(params, pa, even).to_csr())
    h = build_rotated_hamiltonian(params, pa, odd).to_csr()
    k = min(n_levels, odd.dimension)
    if odd.dimension <= 2000:
        w = linalg.eigh(h.toarray(), eigvals_only=True, subset_by_index=[0, k - 1])
    else:
        w, vecs = spla.eigsh(h, k=k, which="SA", tol=1e-12)
        res = np.linalg.norm(h @ vecs - vecs * w, axis=0)
        if np.any(res > 1e-8):
            raise RuntimeError(f"eigensolver did not converge: residual norms {res}")
        w = np.sort(w)
    band = band_info(params, 1)
    out = []
    for e in w - e0:
        if e < band.lower - 1e-12:
            loc = "below"
        elif e > band.upper + 1e-12:
            loc = "above"
        else:
            loc = "in-band"
        out.append(SpectrumLevel(float(e), loc))
    return out
