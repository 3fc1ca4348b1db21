"""Compressive-sensing transport: DCT sampling and TV reconstruction.

The sender keeps a random subset of the image's full-frame orthonormal 2-D
DCT coefficients. The receiver recovers the image by minimising

    J(X) = mu/2 * ||y - A X||^2 + lam * TV_eps(X)

where ``A`` takes the DCT of ``X`` and keeps the sampled positions and
``TV_eps`` is isotropic total variation with smoothing ``eps``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.fft import dctn, idctn

from .errors import ConfigError, NumericError, ParameterError, ParseError, ShapeError

DENSITIES = ("variable", "uniform")
# Variable density: weight (1 + r / r0)^-2 with r the normalised frequency radius.
VD_RADIUS = 0.05

TEXT_MAGIC = "SNCS1"
BINARY_MAGIC = b"SNCS1BIN"
_BIN_HEADER = struct.Struct("<IIdQQ")
_BIN_RECORD = np.dtype([("row", "<u4"), ("col", "<u4"), ("value", "<f8")])


def _finite(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NumericError("input contains non-finite values")
    return x


def dct2_forward(x: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II."""
    return dctn(_finite(x), type=2, norm="ortho")


def dct2_inverse(c: np.ndarray) -> np.ndarray:
    return idctn(_finite(c), type=2, norm="ortho")


@dataclass(frozen=True)
class CsMask:
    shape: Tuple[int, int]
    indices: np.ndarray  # (K, 2) int64 (row, col); row 0 is the DC coefficient
    ratio: float
    seed: int

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "indices", idx)
        M, N = self.shape
        if idx.size and (idx.min() < 0 or idx[:, 0].max() >= M or idx[:, 1].max() >= N):
            raise ShapeError(f"mask index outside {M}x{N}")
        if len(np.unique(idx[:, 0] * N + idx[:, 1])) != len(idx):
            raise ParseError("mask indices are not distinct")

    @property
    def count(self) -> int:
        return len(self.indices)

    def boolean(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[self.indices[:, 0], self.indices[:, 1]] = True
        return m


@dataclass(frozen=True)
class CsMeasurements:
    mask: CsMask
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64).ravel()
        object.__setattr__(self, "values", v)
        if len(v) != self.mask.count:
            raise ShapeError(f"{len(v)} values for {self.mask.count} mask indices")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.mask.shape

    def zero_filled(self) -> np.ndarray:
        """Coefficient matrix with measured values and zeros elsewhere."""
        c = np.zeros(self.shape)
        c[self.mask.indices[:, 0], self.mask.indices[:, 1]] = self.values
        return c


def sample_count(ratio: float, rows: int, cols: int) -> int:
    return max(1, int(np.floor(ratio * rows * cols + 0.5)))


def sampling_weights(shape: Tuple[int, int], density: str = "variable") -> np.ndarray:
    if density == "uniform":
        return np.ones(shape)
    if density == "variable":
        M, N = shape
        u = np.arange(M)[:, None] / M
        v = np.arange(N)[None, :] / N
        return (1.0 + np.sqrt(u**2 + v**2) / VD_RADIUS) ** -2
    raise ParameterError(f"density must be one of {DENSITIES}, got {density!r}")


def random_mask(
    shape: Tuple[int, int], ratio: float, seed: int, density: str = "variable"
) -> CsMask:
    """Weighted random selection without replacement, DC always included.

    Uses Efraimidis-Spirakis keys ``-log(u) / w``: the ``K - 1`` smallest keys
    among non-DC positions are kept. Flat weights give uniform selection.
    """
    if not 0 < ratio <= 1:
        raise ParameterError(f"sampling ratio must be in (0, 1], got {ratio}")
    M, N = shape
    k = sample_count(ratio, M, N)
    w = sampling_weights(shape, density).ravel()
    rng = np.random.default_rng(seed)
    keys = -np.log1p(-rng.random(M * N)) / w
    keys[0] = -np.inf
    flat = np.sort(np.argpartition(keys, k - 1)[:k]) if k < M * N else np.arange(M * N)
    return CsMask((M, N), np.stack(np.divmod(flat, N), axis=1), float(ratio), int(seed))


def measure(image: np.ndarray, mask: CsMask) -> CsMeasurements:
    x = _finite(image)
    if x.shape != mask.shape:
        raise ShapeError(f"image shape {x.shape} does not match mask {mask.shape}")
    c = dct2_forward(x)
    return CsMeasurements(mask, c[mask.indices[:, 0], mask.indices[:, 1]])


def cs_sample(
    image: np.ndarray, ratio: float, seed: int, density: str = "variable"
) -> CsMeasurements:
    mask = random_mask(np.shape(image), ratio, seed, density)
    return measure(image, mask)


# --------------------------------------------------------------------------
# Total variation


def forward_diff(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column forward differences, zero past the last row/column."""
    dr = np.zeros_like(x)
    dc = np.zeros_like(x)
    dr[:-1, :] = x[1:, :] - x[:-1, :]
    dc[:, :-1] = x[:, 1:] - x[:, :-1]
    return dr, dc


def forward_diff_adjoint(pr: np.ndarray, pc: np.ndarray) -> np.ndarray:
    out = np.zeros_like(pr)
    out[:-1, :] -= pr[:-1, :]
    out[1:, :] += pr[:-1, :]
    out[:, :-1] -= pc[:, :-1]
    out[:, 1:] += pc[:, :-1]
    return out


def tv_value(x: np.ndarray, eps: float = 0.0) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or min(x.shape) < 2:
        raise ShapeError(f"total variation needs a matrix of at least 2x2, got {x.shape}")
    dr, dc = forward_diff(x)
    return float(np.sum(np.sqrt(dr * dr + dc * dc + eps * eps)))


def tv_value_gradient(x: np.ndarray, eps: float) -> np.ndarray:
    dr, dc = forward_diff(x)
    norm = np.sqrt(dr * dr + dc * dc + eps * eps)
    return forward_diff_adjoint(dr / norm, dc / norm)


# --------------------------------------------------------------------------
# Reconstruction


@dataclass(frozen=True)
class SolverParams:
    mu: float = 1.0
    lam: float = 0.05
    max_iter: int = 500
    step: float = 1.0
    tol: float = 1e-6
    eps: float = 1e-3
    memory: int = 8
    constrained: bool = True

    def __post_init__(self) -> None:
        # zero weights are allowed so single terms can be evaluated; the solver needs lam > 0
        if not (self.lam >= 0 and self.mu >= 0):
            raise ConfigError(f"weights must be non-negative, got mu={self.mu}, lam={self.lam}")
        if self.max_iter < 0 or self.step <= 0 or self.tol < 0 or self.eps <= 0 or self.memory < 1:
            raise ConfigError(f"invalid solver parameters {self}")


def objective(x: np.ndarray, meas: CsMeasurements, params: SolverParams) -> float:
    """Smoothed penalised objective J."""
    r = _residual(x, meas)
    return 0.5 * params.mu * float(r @ r) + params.lam * tv_value(x, params.eps)


def _residual(x: np.ndarray, meas: CsMeasurements) -> np.ndarray:
    c = dct2_forward(x)
    idx = meas.mask.indices
    return c[idx[:, 0], idx[:, 1]] - meas.values


def tv_gradient(x: np.ndarray, meas: CsMeasurements, params: SolverParams) -> np.ndarray:
    """Gradient of the smoothed objective J with respect to the image."""
    x = np.asarray(x, dtype=np.float64)
    grad = params.lam * tv_value_gradient(x, params.eps)
    if params.mu:
        r = np.zeros(meas.shape)
        idx = meas.mask.indices
        r[idx[:, 0], idx[:, 1]] = _residual(x, meas)
        grad += params.mu * dct2_inverse(r)
    return grad


@dataclass
class Reconstruction:
    image: np.ndarray
    objective: List[float] = field(default_factory=list)
    residual: float = 0.0
    iterations: int = 0
    converged: bool = False
    status: str = ""

    def export(self) -> np.ndarray:
        """8-bit image: rounded and clipped to [0, 255]."""
        return np.clip(np.rint(self.image), 0, 255).astype(np.uint8)


def tv_reconstruct(meas: CsMeasurements, params: SolverParams = SolverParams()) -> Reconstruction:
    """Recover an image from DCT measurements by limited-memory quasi-Newton descent.

    Starts from the inverse DCT of the zero-filled coefficients. Every
    accepted step satisfies the Armijo condition, so the recorded objective
    never increases. With ``params.constrained`` the search is restricted to
    images that reproduce the measurements exactly (the unsampled DCT
    coefficients are the only free variables); otherwise all of ``X`` moves
    and the data term is a soft penalty.
    """
    if not params.lam > 0:
        raise ConfigError(f"TV weight lam must be positive, got {params.lam}")
    if not params.constrained and not params.mu > 0:
        raise ConfigError("penalised reconstruction needs mu > 0")
    mask = meas.mask.boolean()
    x = dct2_inverse(meas.zero_filled())

    if params.constrained:
        free = ~mask

        def project(g: np.ndarray) -> np.ndarray:
            return dct2_inverse(np.where(free, dct2_forward(g), 0.0))

        if not free.any():
            return _finish(x, [objective(x, meas, params)], meas, 0, True, "fully determined")
    else:

        def project(g: np.ndarray) -> np.ndarray:
            return g

    fx = objective(x, meas, params)
    gx = project(tv_gradient(x, meas, params))
    history = [fx]
    s_hist: List[np.ndarray] = []
    y_hist: List[np.ndarray] = []
    status = "max iterations reached"
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        d = project(-_two_loop(gx, s_hist, y_hist))
        slope = float(np.vdot(gx, d))
        if not s_hist or slope >= 0:
            s_hist.clear()
            y_hist.clear()
            d = -gx
            slope = float(np.vdot(gx, d))
            t = params.step / max(float(np.abs(d).max()), 1e-300)
        else:
            t = 1.0
        if slope >= 0:
            converged, status = True, "zero gradient"
            it -= 1
            break
        while True:
            x_new = x + t * d
            f_new = objective(x_new, meas, params)
            if f_new <= fx + 1e-4 * t * slope:
                break
            t *= 0.5
            if t * float(np.abs(d).max()) < 1e-12:
                x_new = None
                break
        if x_new is None:
            if s_hist:
                s_hist.clear()
                y_hist.clear()
                continue
            converged, status = True, "line search stalled"
            it -= 1
            break
        g_new = project(tv_gradient(x_new, meas, params))
        s, y = x_new - x, g_new - gx
        sy = float(np.vdot(s, y))
        if sy > 1e-12 * float(np.vdot(y, y)):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > params.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        decrease = (fx - f_new) / max(abs(fx), 1e-300)
        x, fx, gx = x_new, f_new, g_new
        history.append(fx)
        if decrease < params.tol:
            converged, status = True, "relative decrease below tolerance"
            break
    return _finish(x, history, meas, it, converged, status)


def _two_loop(g: np.ndarray, s_hist: List[np.ndarray], y_hist: List[np.ndarray]) -> np.ndarray:
    """L-BFGS inverse-Hessian product ``H g``."""
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / float(np.vdot(y, s))
        a = rho * float(np.vdot(s, q))
        q -= a * y
        alphas.append((a, rho, s, y))
    if s_hist:
        q *= float(np.vdot(s_hist[-1], y_hist[-1])) / float(np.vdot(y_hist[-1], y_hist[-1]))
    for a, rho, s, y in reversed(alphas):
        b = rho * float(np.vdot(y, q))
        q += (a - b) * s
    return q


def _finish(x, history, meas, iterations, converged, status) -> Reconstruction:
    r = _residual(x, meas)
    return Reconstruction(
        image=x,
        objective=history,
        residual=float(np.sqrt(r @ r)),
        iterations=iterations,
        converged=converged,
        status=status,
    )


# --------------------------------------------------------------------------
# Measurement files


def write_measurements(meas: CsMeasurements, path: Union[str, Path], binary: bool = False) -> None:
    M, N = meas.shape
    idx = meas.mask.indices
    if binary:
        rec = np.empty(meas.mask.count, dtype=_BIN_RECORD)
        rec["row"], rec["col"], rec["value"] = idx[:, 0], idx[:, 1], meas.values
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(_BIN_HEADER.pack(M, N, meas.mask.ratio, meas.mask.seed, meas.mask.count))
            fh.write(rec.tobytes())
        return
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{TEXT_MAGIC} {M} {N} {meas.mask.ratio!r} {meas.mask.seed} {meas.mask.count}\n")
        for (r, c), v in zip(idx.tolist(), meas.values.tolist()):
            fh.write(f"{r} {c} {v!r}\n")


def read_measurements(path: Union[str, Path]) -> CsMeasurements:
    """Read a text or binary measurement file; the variant is detected from the magic."""
    data = Path(path).read_bytes()
    if data.startswith(BINARY_MAGIC):
        off = len(BINARY_MAGIC)
        try:
            M, N, ratio, seed, count = _BIN_HEADER.unpack_from(data, off)
        except struct.error:
            raise ParseError(f"{path}: truncated binary header") from None
        off += _BIN_HEADER.size
        if len(data) - off != count * _BIN_RECORD.itemsize:
            raise ParseError(f"{path}: expected {count} records")
        rec = np.frombuffer(data, dtype=_BIN_RECORD, offset=off)
        idx = np.stack([rec["row"], rec["col"]], axis=1).astype(np.int64)
        return CsMeasurements(CsMask((M, N), idx, ratio, seed), rec["value"].copy())

    lines = data.decode("ascii", errors="replace").splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 6 or head[0] != TEXT_MAGIC:
        raise ParseError(f"{path}: not a measurement file (bad header)")
    try:
        M, N = int(head[1]), int(head[2])
        ratio, seed, count = float(head[3]), int(head[4]), int(head[5])
    except ValueError:
        raise ParseError(f"{path}: malformed header {lines[0]!r}") from None
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != count:
        raise ParseError(f"{path}: header announces {count} records, found {len(body)}")
    idx = np.empty((count, 2), dtype=np.int64)
    values = np.empty(count)
    for i, ln in enumerate(body):
        parts = ln.split()
        try:
            idx[i] = int(parts[0]), int(parts[1])
            values[i] = float(parts[2])
        except (ValueError, IndexError):
            raise ParseError(f"{path}: line {i + 2}: malformed record {ln!r}") from None
    return CsMeasurements(CsMask((M, N), idx, ratio, seed), values)
