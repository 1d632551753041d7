"""Rectangular states, squared by embedding, against classical scaling.

A diagonal state on C^2 (x) C^3 carries a 2x3 weight matrix.  Classically
such a matrix can be scaled to constant margins by alternating row and column
normalizations exactly when its support pattern allows it; on the operator
side the same question is answered by embedding the state into a square one
and running the decision pipeline.  The two verdicts agree.
"""

import numpy as np

from filternorm import decide_equivalence, diagonal_state, embed_rectangular


def classical_margins(w, iters=2000):
    """Alternate row/column normalization; return the final margin residual."""
    a = np.array(w, dtype=float)
    k, m = a.shape
    for _ in range(iters):
        rows = a.sum(axis=1)
        if np.any(rows <= 0):
            return np.inf
        a = a * (m / rows)[:, None]
        cols = a.sum(axis=0)
        if np.any(cols <= 0):
            return np.inf
        a = a * (k / cols)[None, :]
    resid = max(np.abs(a.sum(axis=1) - m).max(), np.abs(a.sum(axis=0) - k).max())
    if resid > 1e-8 or a[w > 0].min() < 1e-6:
        return np.inf
    return resid


def main():
    rng = np.random.default_rng(5)
    patterns = [
        np.ones((2, 3)),
        np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]),
        np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]),
        np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 0.0]]),
        (rng.random((2, 3)) < 0.6) * rng.uniform(0.2, 2.0, size=(2, 3)),
    ]
    print("pattern                     classical    embedded verdict")
    for w in patterns:
        state = diagonal_state(w / w.sum())
        verdict = decide_equivalence(embed_rectangular(state))
        classical = "scalable" if classical_margins(w) < np.inf else "stuck"
        flat = np.array2string(
            (w > 0).astype(int).reshape(-1), separator=""
        ).strip("[]")
        print(f"support {flat}          {classical:<12} {verdict.outcome}")


if __name__ == "__main__":
    main()
