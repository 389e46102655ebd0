"""Spectra datasets: CSV ingestion, scaler + PCA, synthetic generator."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericError, ParseError, ShapeError
from .linalg import sym_eig

N_POINTS = 501
ENERGY_EV = 4020.0 + 0.3 * np.arange(N_POINTS)
SCALE_FLOOR = 1e-12


@dataclass(frozen=True)
class SpectraDataset:
    spectra: np.ndarray
    labels: np.ndarray
    sample_ids: tuple

    def __post_init__(self):
        x = np.asarray(self.spectra, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise ShapeError("spectra must be a 2-D array")
        if y.shape != (x.shape[0],):
            raise ShapeError(f"{x.shape[0]} spectra but {y.shape[0]} labels")
        if not np.all((y == 0) | (y == 1)):
            raise ContractError("labels must be 0 or 1")
        ids = tuple(str(s) for s in self.sample_ids)
        if len(ids) != x.shape[0]:
            raise ShapeError("one sample id per spectrum required")
        object.__setattr__(self, "spectra", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "sample_ids", ids)

    @property
    def n_samples(self):
        return self.spectra.shape[0]

    @property
    def n_points(self):
        return self.spectra.shape[1]

    def with_spectra(self, spectra):
        return SpectraDataset(spectra, self.labels, self.sample_ids)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def load_csv(path):
    """Read ``id,label,x0,...,x{p-1}`` rows; row order is file order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if len(header) < 3 or header[0] != "id" or header[1] != "label":
            raise ParseError(f"{path}:1: header must start with 'id,label,x0'")
        p = len(header) - 2
        ids, labels, rows = [], [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != p + 2:
                raise ParseError(f"{path}:{line}: expected {p + 2} columns, got {len(row)}")
            try:
                label = int(row[1])
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{line}: {exc}") from None
            if label not in (0, 1):
                raise ContractError(f"{path}:{line}: label must be 0 or 1, got {row[1]}")
            ids.append(row[0])
            labels.append(label)
            rows.append(values)
    spectra = np.array(rows, dtype=np.float64).reshape(len(rows), p)
    if not np.all(np.isfinite(spectra)):
        raise ParseError(f"{path}: non-finite values")
    return SpectraDataset(spectra, np.array(labels, dtype=np.int64), tuple(ids))


def dataset_to_csv(ds):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "label"] + [f"x{i}" for i in range(ds.n_points)])
    for sid, label, row in zip(ds.sample_ids, ds.labels, ds.spectra):
        writer.writerow([sid, int(label)] + [repr(float(v)) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Scaler + PCA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_points(self):
        return self.mean.shape[0]

    @property
    def n_components(self):
        return self.components.shape[1]


def fit_scaler_pca(train, k):
    """Standardise features on ``train`` and keep the top ``k`` principal axes.

    The axes come from the eigendecomposition of the n x n Gram matrix of the
    standardised rows.  Each component is signed so that its largest-magnitude
    entry is positive.
    """
    x = np.asarray(train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ContractError("need at least two training rows")
    n, p = x.shape
    if not 1 <= k <= min(n - 1, p):
        raise ContractError(f"k={k} must lie in [1, {min(n - 1, p)}] for {n} rows x {p} columns")
    mean = x.mean(axis=0)
    scale = np.maximum(x.std(axis=0), SCALE_FLOOR)
    z = (x - mean) / scale
    gram = z @ z.T
    w, U = sym_eig(gram)
    w, U = w[::-1], U[:, ::-1]
    total = float(np.sum(np.maximum(w, 0.0)))
    top = w[:k]
    if top[-1] <= 1e-12 * max(total, 1e-300):
        raise NumericError(f"training data has rank below k={k}")
    comps = (z.T @ U[:, :k]) / np.sqrt(top)
    lead = np.argmax(np.abs(comps), axis=0)
    signs = np.sign(comps[lead, np.arange(k)])
    comps = comps * np.where(signs == 0, 1.0, signs)
    return PcaModel(mean, scale, comps, top / total)


def transform(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_points:
        raise ShapeError(f"expected rows of length {model.n_points}, got shape {x.shape}")
    return ((x - model.mean) / model.scale) @ model.components


def inverse_transform(model, scores):
    return (np.asarray(scores) @ model.components.T) * model.scale + model.mean


# ---------------------------------------------------------------------------
# Synthetic spectra
# ---------------------------------------------------------------------------

# peak centre (eV), width (eV), amplitude for control tissue
_PEAKS = np.array(
    [
        [4048.0, 3.0, 0.60],
        [4058.0, 5.0, 0.25],
        [4080.0, 9.0, 0.15],
    ]
)

PRESETS = {
    # class offsets dwarf per-sample variability
    "separable": {
        "shift_ev": 2.5,
        "amp_delta": 0.12,
        "jitter_ev": 0.05,
        "amp_jitter": 0.004,
        "noise": 0.0015,
        "corr_points": 6.0,
    },
    # per-sample variability comparable to the class offsets
    "noisy": {
        "shift_ev": 0.6,
        "amp_delta": 0.03,
        "jitter_ev": 0.6,
        "amp_jitter": 0.03,
        "noise": 0.01,
        "corr_points": 6.0,
    },
}


def _correlated_noise(rng, n, corr_points):
    white = rng.standard_normal((n, N_POINTS + 8 * int(corr_points)))
    half = 4 * int(corr_points)
    t = np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (t / corr_points) ** 2)
    kernel /= np.sqrt(np.sum(kernel**2))
    out = np.stack([np.convolve(row, kernel, mode="valid") for row in white])
    return out[:, :N_POINTS]


def _spectrum(edge_ev, peak_shift, amp_scale, amp_delta, label):
    e = ENERGY_EV
    curve = 1.0 / (1.0 + np.exp(-(e - edge_ev) / 1.5))
    for i, (centre, width, amp) in enumerate(_PEAKS):
        # tumour tissue: peaks move up in energy, first peak weakens, second grows
        direction = (-1.0, 1.0, 0.5)[i]
        a = amp * amp_scale + label * direction * amp_delta
        c = centre + peak_shift
        curve = curve + a * np.exp(-0.5 * ((e - c) / width) ** 2)
    return curve


def generate_synthetic(n=224, tumor_fraction=147 / 224, seed=0, preset="separable"):
    """Two-class XANES-like spectra with 501 points on a 4.02-4.17 keV grid."""
    if not 0.0 < tumor_fraction < 1.0:
        raise ContractError("tumor_fraction must lie strictly between 0 and 1")
    if preset not in PRESETS:
        raise ContractError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    cfg = PRESETS[preset]
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * tumor_fraction))
    labels = np.zeros(n, dtype=np.int64)
    labels[:n_pos] = 1
    labels = labels[rng.permutation(n)]
    spectra = np.empty((n, N_POINTS))
    edge = 4040.0 + cfg["jitter_ev"] * rng.standard_normal(n)
    shift = cfg["shift_ev"] * labels + cfg["jitter_ev"] * rng.standard_normal(n)
    amp = 1.0 + cfg["amp_jitter"] * rng.standard_normal(n)
    for i in range(n):
        spectra[i] = _spectrum(edge[i], shift[i], amp[i], cfg["amp_delta"], labels[i])
    spectra += cfg["noise"] * _correlated_noise(rng, n, cfg["corr_points"])
    ids = tuple(f"s{i:04d}" for i in range(n))
    return SpectraDataset(spectra, labels, ids)


def class_separation(ds):
    """(distance between class means, mean distance of samples to their class mean)."""
    x, y = ds.spectra, ds.labels
    mu0, mu1 = x[y == 0].mean(axis=0), x[y == 1].mean(axis=0)
    within = np.concatenate(
        [np.linalg.norm(x[y == 0] - mu0, axis=1), np.linalg.norm(x[y == 1] - mu1, axis=1)]
    )
    return float(np.linalg.norm(mu1 - mu0)), float(within.mean())
