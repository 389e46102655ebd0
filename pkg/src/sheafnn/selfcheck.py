"""Fast invariant suite behind ``sheafnn selfcheck``.

Each check returns ``(name, ok, detail)``; nothing here raises on a failed
invariant, so one broken module does not hide the others.
"""

import numpy as np

from . import linalg
from .config import STOCK_GRIDS, ModelConfig
from .data import fit_scaler_pca, generate_synthetic, transform
from .graph import Graph, build_similarity_graph, is_connected, laplacian, num_components
from .nn import GNNLayer, GraphContext, LayerSpec, Param, SheafLayer, Tape, build_model
from .nn.tape import bce_with_logits
from .optim import clip_gradients
from .pipeline.folds import repeated_plans
from .pipeline.metrics import wilson_ci
from .sheaf import CellularSheaf, coboundary, constant_sheaf, global_sections, sheaf_laplacian


def random_graph(rng, n, p=0.4):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(n, tuple(edges))


def random_sheaf(rng, n, d, p=0.4):
    g = random_graph(rng, n, p)
    e = g.num_edges
    return CellularSheaf(g, d, rng.normal(size=(e, d, d)), rng.normal(size=(e, d, d)))


def check_eig(rng):
    worst = 0.0
    for _ in range(10):
        m = rng.normal(size=(6, 6))
        a = m + m.T
        w, v = linalg.sym_eig(a)
        worst = max(worst, np.abs(v @ np.diag(w) @ v.T - a).max(), np.abs(v.T @ v - np.eye(6)).max())
    return "linalg: eigendecomposition reconstructs", worst < 1e-10, f"max error {worst:.2e}"


def check_graph_laplacian(rng):
    ok = True
    for _ in range(10):
        g = random_graph(rng, int(rng.integers(2, 12)))
        L = laplacian(g)
        ok &= bool(np.all(L.sum(axis=1) == 0) and np.array_equal(L, L.T))
    return "graph: Laplacian rows sum to zero", ok, ""


def check_similarity_connected(rng):
    x = rng.normal(size=(30, 5))
    g = build_similarity_graph(x)
    return "graph: similarity graph connected", is_connected(g), f"{g.num_edges} edges"


def check_constant_sheaf(rng):
    ok = True
    for _ in range(10):
        g = random_graph(rng, int(rng.integers(2, 12)))
        ok &= bool(np.array_equal(sheaf_laplacian(constant_sheaf(g, 1)), laplacian(g)))
    return "sheaf: constant d=1 sheaf gives D - A", ok, ""


def check_psd(rng):
    worst = 0.0
    for _ in range(10):
        s = random_sheaf(rng, int(rng.integers(2, 8)), int(rng.integers(1, 4)))
        w, _ = linalg.sym_eig(sheaf_laplacian(s))
        worst = min(worst, float(w[0]))
    return "sheaf: Laplacian is PSD", worst >= -1e-10, f"min eigenvalue {worst:.2e}"


def check_kernel(rng):
    ok = True
    for _ in range(10):
        g = random_graph(rng, int(rng.integers(2, 9)), 0.25)
        d = int(rng.integers(1, 4))
        ok &= global_sections(constant_sheaf(g, d)).shape[1] == d * num_components(g)
    return "sheaf: constant-sheaf kernel is d x components", bool(ok), ""


def check_orientation(rng):
    worst = 0.0
    for _ in range(10):
        s = random_sheaf(rng, 6, 2)
        delta = coboundary(s)
        flip = np.repeat(np.where(rng.random(s.graph.num_edges) < 0.5, -1.0, 1.0), s.stalk_dim)
        flipped = flip[:, None] * delta
        worst = max(worst, np.abs(flipped.T @ flipped - sheaf_laplacian(s)).max(initial=0.0))
    return "sheaf: Laplacian ignores edge orientation", worst < 1e-12, f"max change {worst:.2e}"


def check_degeneration(rng):
    g = random_graph(rng, 7, 0.5)
    ctx = GraphContext(g)
    h = rng.normal(size=(7, 3))
    sheaf = SheafLayer(LayerSpec("sheaf_general", 3, 3, alpha=1.0, activation="elu", laplacian="plain"), rng)
    sheaf.gen_w.value[:] = 0.0
    sheaf.gen_b.value[:] = 1.0
    sheaf.w1.value[:] = 1.0
    simple = GNNLayer(LayerSpec("simple", 3, 3, alpha=1.0, activation="elu"), rng)
    simple.weight.value = sheaf.w2.value.copy()
    t = Tape()
    a = sheaf.forward(t, ctx, t.const(h)).value
    b = simple.forward(t, ctx, t.const(h)).value
    err = float(np.abs(a - b).max())
    return "nn: d=1 constant sheaf layer equals Laplacian layer", err < 1e-10, f"max diff {err:.2e}"


def check_gradients(rng):
    g = Graph(5, ((0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)))
    ctx = GraphContext(g)
    x = rng.normal(size=(5, 4))
    y = np.array([0, 1, 1, 0, 1], dtype=np.float64)
    mask = np.ones(5, dtype=bool)
    worst = 0.0
    for kind in ("gcn", "sage", "gat", "sheaf_general"):
        cfg = ModelConfig(model=kind, hidden_dim=4, num_layers=2, dropout=0.0, d=2, f=2, activation="elu")
        model = build_model(cfg, 4, np.random.default_rng(1))

        def loss():
            t = Tape()
            return t, bce_with_logits(model.forward(t, ctx, x, training=True), y, mask)

        model.zero_grad()
        t, l = loss()
        t.backward(l)
        for p in model.params():
            for idx in list(np.ndindex(p.shape))[:6]:
                old = p.value[idx]
                p.value[idx] = old + 1e-5
                lp = loss()[1].value
                p.value[idx] = old - 1e-5
                lm = loss()[1].value
                p.value[idx] = old
                fd = (lp - lm) / 2e-5
                err = abs(fd - p.grad[idx])
                if err > 1e-7:
                    worst = max(worst, err / max(abs(fd), abs(p.grad[idx])))
    return "nn: gradients match finite differences", worst < 1e-4, f"worst relative error {worst:.2e}"


def check_clip(rng):
    params = [Param(np.zeros(3)), Param(np.zeros((2, 2)))]
    params[0].grad = rng.normal(size=3) * 10
    params[1].grad = rng.normal(size=(2, 2)) * 10
    clip_gradients(params, 1.0)
    once = [p.grad.copy() for p in params]
    clip_gradients(params, 1.0)
    ok = all(np.allclose(a, p.grad, rtol=0, atol=1e-15) for a, p in zip(once, params))
    return "optim: clipping is idempotent", ok, ""


def check_pca_leakage(rng):
    ds = generate_synthetic(n=40, seed=int(rng.integers(1 << 30)))
    train, test = np.arange(30), np.arange(30, 40)
    pca = fit_scaler_pca(ds.spectra[train], 5)
    changed = ds.spectra.copy()
    changed[test] += rng.normal(size=(10, ds.n_points))
    pca2 = fit_scaler_pca(changed[train], 5)
    same = np.array_equal(pca.components, pca2.components) and np.array_equal(pca.mean, pca2.mean)
    g1 = build_similarity_graph(transform(pca, ds.spectra))
    g2 = build_similarity_graph(transform(pca2, changed))
    return "data: PCA ignores test rows", bool(same and g1 != g2), ""


def check_folds(rng):
    labels = np.array([1] * 147 + [0] * 77)
    plans = repeated_plans(labels, 10, 2, int(rng.integers(1 << 30)))
    ok = True
    for r in range(2):
        tests = np.concatenate([p.test for p in plans if p.repetition == r])
        ok &= np.array_equal(np.sort(tests), np.arange(224))
    for p in plans:
        ok &= not (set(p.train) & set(p.valid) or set(p.train) & set(p.test) or set(p.valid) & set(p.test))
        ok &= int(labels[list(p.test)].sum()) in (14, 15)
    return "pipeline: folds partition the samples", bool(ok), ""


def check_wilson(rng):
    lo, hi = wilson_ci(221, 224)
    ok = abs(lo - 0.961) <= 1e-3 and abs(hi - 0.995) <= 1e-3
    return "pipeline: Wilson interval", ok, f"({lo:.4f}, {hi:.4f})"


def check_grids(rng):
    sizes = {k: g.size for k, g in STOCK_GRIDS.items()}
    expected = {"gcn": 972, "sage": 405, "gat": 756, "sheaf_general": 432}
    return "config: stock grid sizes", sizes == expected, str(sizes)


CHECKS = (
    check_eig,
    check_graph_laplacian,
    check_similarity_connected,
    check_constant_sheaf,
    check_psd,
    check_kernel,
    check_orientation,
    check_degeneration,
    check_gradients,
    check_clip,
    check_pca_leakage,
    check_folds,
    check_wilson,
    check_grids,
)


def run_all(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for check in CHECKS:
        try:
            out.append(check(rng))
        except Exception as exc:  # a crash counts as a failure of that check
            out.append((check.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out
