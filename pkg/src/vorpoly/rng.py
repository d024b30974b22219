"""Counter-based random streams.

Every random draw in the package goes through :func:`stream`, which builds a
Philox generator keyed by ``(seed, replicate, *tags)``.  Replicates are thus
independent, reproducible in isolation and safe to farm out in any order.
"""

import numpy as np

from ._accel import kernel

# tags keep the streams of different consumers of one replicate apart
POINTS = 1
SITES = 2
EDGES = 3
MODIFY = 4
ANIMAL = 5
QUERY = 6
CONDITION = 7
BLOCKS = 8


def _zigzag(k: int) -> int:
    k = int(k)
    return 2 * k if k >= 0 else -2 * k - 1


def stream(seed: int, replicate: int = 0, *tags: int) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF, _zigzag(replicate)]
    words.extend(_zigzag(t) for t in tags)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


# ---------------------------------------------------------------------------
# hashed per-site uniforms
#
# Lattice fields are read lazily (cluster searches only touch a handful of
# sites), so their randomness is a pure function of (key, site): a splitmix64
# finalizer applied to the packed site coordinates.  The same field can then
# be materialized on any box or probed site by site with identical values.
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_BIAS = 1 << 20  # coordinates in (-2^20, 2^20) pack into 21 bits each


def key64(seed: int, replicate: int = 0, *tags: int) -> int:
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF, _zigzag(replicate)]
    words.extend(_zigzag(t) for t in tags)
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


@kernel
def splitmix64(x):
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@kernel
def pack_site(x, y, z):
    return (np.uint64(x + _BIAS) << np.uint64(42)) | (np.uint64(y + _BIAS) << np.uint64(21)) \
        | np.uint64(z + _BIAS)


@kernel
def site_uniform(key, x, y, z):
    """Uniform [0, 1) attached to lattice site (x, y, z) under ``key``."""
    h = splitmix64(np.uint64(key) ^ splitmix64(pack_site(x, y, z)))
    return float(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@kernel
def replicate_key(base, replicate):
    """Key of replicate ``replicate`` derived from one base key."""
    return splitmix64(np.uint64(base) ^ splitmix64(np.uint64(replicate) * _GOLDEN))


def site_uniforms(key: int, coords: np.ndarray) -> np.ndarray:
    """Vectorized :func:`site_uniform` for an (n, d) coordinate array."""
    c = np.asarray(coords, dtype=np.int64)
    if c.shape[1] == 2:
        c = np.column_stack([c, np.zeros(len(c), dtype=np.int64)])
    with np.errstate(over="ignore"):
        packed = ((c[:, 0] + _BIAS).astype(np.uint64) << np.uint64(42)) \
            | ((c[:, 1] + _BIAS).astype(np.uint64) << np.uint64(21)) \
            | (c[:, 2] + _BIAS).astype(np.uint64)
        h = _splitmix_np(np.uint64(key) ^ _splitmix_np(packed))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _splitmix_np(x):
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))
