"""Central finite-difference oracle for the MLP gradients."""
import numpy as np

EPS = 1e-5


def _masks(net, x):
    net.forward(x)
    return [p > 0 for p in net._cache[1][:-1]]


def check(net, x, upstream, eps=EPS, rel=1e-4, floor=1e-8):
    """Return (checked, skipped, worst_relative_error) over every parameter.

    Parameters whose +-eps perturbation flips any rectifier are skipped (kink)."""
    net.forward(x)
    grads = net.backward(upstream)
    base = _masks(net, x)
    checked = skipped = 0
    worst = 0.0
    for params, analytic in ((net.weights, grads.weights), (net.biases, grads.biases)):
        for P, G in zip(params, analytic):
            flat, gflat = P.reshape(-1), G.reshape(-1)
            for k in range(flat.size):
                old = flat[k]
                flat[k] = old + eps
                up = float(upstream @ net.forward(x))
                m_up = _masks(net, x)
                flat[k] = old - eps
                down = float(upstream @ net.forward(x))
                m_down = _masks(net, x)
                flat[k] = old
                if any((a != b).any() or (a != c).any() for a, b, c in zip(base, m_up, m_down)):
                    skipped += 1
                    continue
                num = (up - down) / (2 * eps)
                err = abs(num - gflat[k]) / max(abs(num), abs(gflat[k]), floor)
                worst = max(worst, err)
                checked += 1
    net.forward(x)
    return checked, skipped, worst


def random_dims(rng, max_dims=(16, 32, 32, 32, 8)):
    return tuple(int(rng.integers(1, d + 1)) for d in max_dims)
