"""Built-in property suites: gradient checks and numerical self-tests.

These run from the command line (``gclab gradcheck``, ``gclab selftest``)
and back the acceptance tests. Each suite returns (name, ok, detail) rows.
"""

from __future__ import annotations

import numpy as np

from .dirichlet import energy_spatial, energy_spectral, theorem1_residual
from .engine import Tensor, no_grad
from .graphs import Graph, block_diagonal
from .losses import (GcodConfig, GcodState, cross_entropy, gcod_terms,
                     refresh_class_stats)
from .nn import Model, forward_batch, readout
from .noise import NoiseSpec, confusion_estimate, inject
from .optim import gradcheck
from .projection import project_positive
from .rng import CounterRng
from .spectral import laplacian_spectrum, sym_eig


def _random_graph(rng: CounterRng, n_lo=3, n_hi=8, m=3, num_classes=2) -> Graph:
    n = n_lo + int(rng.integers(n_hi - n_lo + 1))
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.uniform() < 0.45]
    return Graph(rng.uniform_signed((n, m), 1.0), edges,
                 label=int(rng.integers(num_classes)))


def _random_batch(rng: CounterRng, count=3, m=3, num_classes=2):
    graphs = [_random_graph(rng, m=m, num_classes=num_classes) for _ in range(count)]
    block = block_diagonal(graphs)
    labels = np.array([g.label for g in graphs])
    return block, labels


def gradcheck_suite(trials: int = 20, seed: int = 0) -> list[tuple[str, bool, float]]:
    """Finite-difference checks for every layer kind, readout mode, and loss."""
    results = []
    combos = [(kind, mode) for kind in ("gin", "gcn") for mode in ("sum", "mean")]
    for kind, mode in combos:
        worst = 0.0
        ok = True
        for t in range(trials):
            rng = CounterRng(seed, f"grad:{kind}:{mode}:{t}")
            block, labels = _random_batch(rng)
            model = Model(in_dim=3, hidden=4, num_classes=2, kind=kind,
                          num_layers=2, readout_mode=mode,
                          seed=int(rng.u64() % 2**31))

            def build():
                logits, _ = forward_batch(model, block)
                return cross_entropy(logits, labels)

            good, err = gradcheck(build, model.named_parameters())
            ok &= good
            worst = max(worst, err)
        results.append((f"cross_entropy/{kind}/{mode}", ok, worst))

    for objective in ("model", "u"):
        worst = 0.0
        ok = True
        for t in range(trials):
            rng = CounterRng(seed, f"grad:gcod:{objective}:{t}")
            block, labels = _random_batch(rng)
            model = Model(in_dim=3, hidden=4, num_classes=2, kind="gin",
                          num_layers=2, seed=int(rng.u64() % 2**31))
            state = GcodState(len(labels), 2, 4, GcodConfig())
            state.class_stats = rng.uniform_signed((2, 4), 1.0)
            state.empty_classes = np.zeros(2, dtype=bool)
            u = Tensor(rng.uniform(len(labels)) * 0.7, requires_grad=(objective == "u"))

            def build():
                logits, h = forward_batch(model, block)
                emb = readout(h, block.component_sizes, model.readout_mode)
                l_model, l_u, _ = gcod_terms(logits, emb, labels, u, state)
                return l_model if objective == "model" else l_u

            params = model.named_parameters() if objective == "model" else [("u", u)]
            good, err = gradcheck(build, params)
            ok &= good
            worst = max(worst, err)
        results.append((f"gcod_{objective}/gin", ok, worst))
    return results


def selftest_suite(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Quick numerical property suites (theorem, spectral, projection, noise)."""
    results = []

    rng = CounterRng(seed, "selftest:theorem")
    worst = 0.0
    for _ in range(50):
        count = 2 + int(rng.integers(5))
        m = 1 + int(rng.integers(4))
        reps = []
        for _ in range(count):
            g = _random_graph(rng, 2, 8, m=1)
            reps.append((rng.uniform_signed((g.num_nodes, m), 2.0), g))
        worst = max(worst, theorem1_residual(reps))
    results.append(("dataset-energy equals block energy / n", worst < 1e-10,
                    f"worst residual {worst:.2e}"))

    rng = CounterRng(seed, "selftest:spectral")
    worst = 0.0
    for _ in range(100):
        g = _random_graph(rng, 2, 9, m=1)
        z = rng.uniform_signed((g.num_nodes, 3), 2.0)
        spatial = energy_spatial(z, g)
        spectral = energy_spectral(z, laplacian_spectrum(g))
        worst = max(worst, abs(spatial - spectral) / max(1.0, abs(spatial)))
    results.append(("spatial/spectral energy agreement", worst < 1e-8,
                    f"worst relative gap {worst:.2e}"))

    rng = CounterRng(seed, "selftest:eig")
    worst_rec = worst_orth = 0.0
    for n in (2, 4, 8, 16, 32, 64):
        m = rng.uniform_signed((n, n), 2.0)
        m = 0.5 * (m + m.T)
        dec = sym_eig(m)
        worst_rec = max(worst_rec, float(np.linalg.norm(dec.reconstruct() - m))
                        / max(float(np.linalg.norm(m)), 1.0))
        worst_orth = max(worst_orth, float(np.abs(
            dec.eigenvectors.T @ dec.eigenvectors - np.eye(n)).max()))
    ok = worst_rec < 1e-10 and worst_orth < 1e-10
    results.append(("eigensolver reconstruction/orthonormality", ok,
                    f"rec {worst_rec:.2e} orth {worst_orth:.2e}"))

    rng = CounterRng(seed, "selftest:proj")
    ok = True
    for _ in range(20):
        n = 2 + int(rng.integers(7))
        w = rng.uniform_signed((n, n), 2.0)
        p = project_positive(w)
        ok &= float(np.linalg.eigvalsh(p).min()) >= -1e-10
        ok &= float(np.abs(project_positive(p) - p).max()) < 1e-10
    results.append(("projection PSD + idempotent", ok, "20 random matrices"))

    labels = CounterRng(seed, "selftest:labels").integers(4, 10000)
    a1, m1 = inject(labels, 4, NoiseSpec("symmetric", 0.2, seed=seed))
    a2, _ = inject(labels, 4, NoiseSpec("symmetric", 0.2, seed=seed))
    rate = float(m1.mean())
    conf = confusion_estimate(labels, inject(labels, 4, NoiseSpec("pairflip", 1.0,
                                                                  seed=seed))[0], 4)
    ok = (np.array_equal(a1, a2) and 0.18 <= rate <= 0.22
          and np.array_equal(conf, np.roll(np.eye(4), 1, axis=1)))
    results.append(("noise injector determinism/rate/pairflip", ok,
                    f"realized rate {rate:.4f}"))

    rng = CounterRng(seed, "selftest:batch")
    model = Model(in_dim=3, hidden=6, num_classes=2, seed=seed)
    graphs = [_random_graph(rng) for _ in range(3)]
    with no_grad():
        block_logits, _ = forward_batch(model, block_diagonal(graphs))
        gaps = []
        for i, g in enumerate(graphs):
            lone, _ = forward_batch(model, block_diagonal([g]))
            gaps.append(float(np.abs(block_logits.data[i] - lone.data[0]).max()))
    results.append(("block forward equals isolated forwards", max(gaps) < 1e-12,
                    f"worst gap {max(gaps):.2e}"))
    return results
