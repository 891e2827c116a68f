import numpy as np
import pytest

from tcrcg.transform import dct_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def blockdiag_oracle_slices(a):
    """Transformed frontal slices built from the explicit DCT matrix."""
    c = dct_matrix(a.shape[2])
    return [sum(c[k, l] * a[:, :, l] for l in range(a.shape[2])) for k in range(a.shape[2])]


def fold_inverse(slices):
    """Stack transform-domain slices and undo the DCT with the explicit matrix."""
    c = dct_matrix(len(slices))
    n3 = len(slices)
    return np.stack([sum(c[k, l] * slices[k] for k in range(n3)) for l in range(n3)], axis=2)


def blockdiag(slices):
    rows = sum(s.shape[0] for s in slices)
    cols = sum(s.shape[1] for s in slices)
    out = np.zeros((rows, cols))
    i = j = 0
    for s in slices:
        out[i : i + s.shape[0], j : j + s.shape[1]] = s
        i += s.shape[0]
        j += s.shape[1]
    return out


def unblock(mat, row_sizes, col_sizes):
    slices, i, j = [], 0, 0
    for r, c in zip(row_sizes, col_sizes):
        slices.append(mat[i : i + r, j : j + c])
        i += r
        j += c
    return slices


def oracle_tprod(a, b):
    sa, sb = blockdiag_oracle_slices(a), blockdiag_oracle_slices(b)
    n3 = a.shape[2]
    prod = blockdiag(sa) @ blockdiag(sb)
    return fold_inverse(unblock(prod, [a.shape[0]] * n3, [b.shape[1]] * n3))


def low_rank_tensor(rng, n1, n2, ranks):
    """Random tensor whose transformed slice k has rank ``ranks[k]``."""
    n3 = len(ranks)
    slices = [rng.standard_normal((n1, r)) @ rng.standard_normal((r, n2)) for r in ranks]
    return fold_inverse(slices)
